#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mtim/association.hpp"
#include "mtim/detection.hpp"

namespace mtim {

struct PipelineConfig {
    PixelGrid grid;  // high-resolution imaging grid
    /// Pixel size of the per-pair stacks feeding the Doppler spectra;
    /// 0 selects 4x the high-resolution pixel.
    double lowres_pixel_size = 0.0;
    int iterations = 2;  // C-E refinement passes
    CirOptions cir;
    SyncOptions sync;
    CfarParams cfar;
    int doppler_oversample = 4;
    bool exclude_zero_doppler = false;
    std::optional<AreaOfInterest> aoi;  // default: full low-res grid
    bool prefilter = false;
    size_t tuple_cap = 1'000'000;
    bool with_smi = true;
    bool with_isafs = true;
    bool keep_images = false;  // retain per-target images in the report
    /// Crop the stored CIR delay window to what imaging needs (large memory
    /// savings); the full IDFT span is kept when false.
    bool crop_cir = true;

    PixelGrid lowres_grid() const {
        PixelGrid g = grid;
        g.pixel_size = lowres_pixel_size > 0.0 ? lowres_pixel_size : 4.0 * grid.pixel_size;
        return g;
    }
};

struct MethodEstimate {
    std::vector<Vec2> locations;
    std::vector<Vec2> velocities;  // empty for SMI / ISAFS
};

/// Error metrics against the scenario's ground truth. Estimates are matched
/// to truth targets by a minimum-total-distance assignment. The swap flag is
/// set when cross-assigning the two estimated velocities fits truth better
/// and the direct velocity error exceeds the velocity resolution in some
/// component.
struct TruthMetrics {
    double loc_rmse = 0.0;   // m
    Vec2 vel_rmse;           // m/s per component (0 when no velocities)
    bool swapped = false;
    int matched = 0;
    bool count_matches = false;
};

struct StageTimings {
    double synthesis = 0.0;
    double estimation = 0.0;
    double sync = 0.0;
    double lowres = 0.0;
    double doppler = 0.0;
    double highres_stack = 0.0;
    double coarse = 0.0;
    double association = 0.0;
    double target_images = 0.0;
    double total = 0.0;
};

struct PipelineReport {
    int target_count = 0;  // Q_hat
    DopplerPeakSet peaks;
    std::vector<Vec2> coarse_locations;
    MethodEstimate refined;  // Doppler pre-compensated pipeline output
    std::vector<Vec2> velocity_resolution;
    std::optional<MethodEstimate> smi;
    std::optional<MethodEstimate> isafs;
    std::optional<TruthMetrics> refined_metrics;
    std::optional<TruthMetrics> smi_metrics;
    std::optional<TruthMetrics> isafs_metrics;
    double saf_rho_x = 0.0;
    double saf_rho_y = 0.0;
    SmallCfoReport cfo_check;
    std::string sync_csv;
    std::string association_csv;
    ClipReport clip;
    StageTimings timings;
    std::vector<ComplexImage> target_images;  // when keep_images
};

/// Full pipeline: synthesis, OTA sync, per-pair imaging, Doppler detection,
/// coarse localization, C-E association/pre-compensation iterations, and the
/// SMI / ISAFS baselines when enabled.
PipelineReport run_pipeline(const Scenario& scenario, const PipelineConfig& config);

/// Baselines only (no Doppler compensation): combined image, magnitude
/// integration, peak extraction (SMI) and iterative SAF subtraction (ISAFS).
PipelineReport run_smi(const Scenario& scenario, const PipelineConfig& config);
PipelineReport run_isafs(const Scenario& scenario, const PipelineConfig& config);

/// Target placement randomization for Monte Carlo trials: target 1 fixed,
/// target 2 displaced by ||e|| ~ U(e_min, e_max) at a uniform angle, with
/// randomized speed, velocity angle, RCS ratio and scattering phases.
struct RandomizationSpec {
    Vec2 x1{1.0, 5.0};
    Vec2 v1{0.0, 3.0};
    double e_min = 0.0;  // 0: min(rho_x, rho_y) from the SAF
    double e_max = 0.0;  // 0: 3*max(rho_x, rho_y)
    double v2_speed_min = 1.0;
    double v2_speed_max = 5.0;
    double v2_angle_min = 0.7853981633974483;   // pi/4
    double v2_angle_max = 2.748893571891069;    // 7 pi/8
    double rcs1 = 1.0;
    double rcs_ratio_min = 0.2;  // Gamma_1 / Gamma_2
    double rcs_ratio_max = 1.0;
};

struct TrialRecord {
    int trial = 0;
    double snr_db = 0.0;
    double distance = 0.0;             // ||x1 - x2||, m
    double normalized_distance = 0.0;  // distance / rho_xy
    int target_count = 0;
    double mti_loc_rmse = 0.0;
    double mti_vel_rmse_x = 0.0;
    double mti_vel_rmse_y = 0.0;
    bool swapped = false;
    double smi_loc_rmse = 0.0;
    double isafs_loc_rmse = 0.0;
};

struct MonteCarloResult {
    double rho_x = 0.0;
    double rho_y = 0.0;
    std::vector<TrialRecord> records;
};

/// Runs `trials` randomized two-target experiments per SNR value. Device
/// geometry, waveform and grids stay fixed; targets, scattering phases,
/// clocks and noise are resampled per trial, reproducibly in `seed`.
MonteCarloResult monte_carlo(const Scenario& base, const PipelineConfig& config,
                             const RandomizationSpec& spec,
                             std::span<const double> snr_db_list, int trials,
                             uint64_t seed);

std::string monte_carlo_csv(const MonteCarloResult& result);

/// Min-total-distance matching between estimates and truth (index pairs).
std::vector<std::pair<int, int>> match_by_distance(std::span<const Vec2> estimates,
                                                   std::span<const Vec2> truth);

TruthMetrics compute_truth_metrics(const MethodEstimate& estimate,
                                   std::span<const Target> truth,
                                   std::span<const Vec2> velocity_resolution);

}  // namespace mtim
