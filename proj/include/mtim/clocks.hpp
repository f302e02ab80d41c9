#pragma once

#include <cstdint>
#include <vector>

#include "mtim/geometry.hpp"

namespace mtim {

/// Clock error model parameters. The timing offset (TO) is drawn uniform in
/// [0, to_max]. The normalized CFO follows the AR(1) track
///   beta[0] ~ N(0, cfo_std^2),
///   beta[k] = ar_coefficient * beta[k-1] + innovation_scale * W_k,
/// with W_k ~ N(0, cfo_std^2).
struct ClockParams {
    double to_max = 0.0;            // s
    double cfo_std = 0.0;           // normalized (dimensionless)
    double ar_coefficient = 0.99;
    double innovation_scale = 0.01;
    uint64_t seed = 0;
};

/// Sampled clock error track of one device over K repetition intervals.
struct ClockTrack {
    double to = 0.0;            // alpha_n, s
    std::vector<double> cfo;    // beta_n[k], length K
};

/// Pairwise differential clock quantities between Tx clock n and Rx clock m.
struct ClockDifferential {
    double dto = 0.0;             // alpha_nm = alpha_n - alpha_m, s
    std::vector<double> dcfo;     // beta_nm[k]
    double po = 0.0;              // eta_nm = 2 pi f0 alpha_nm, rad
};

struct SmallCfoReport {
    bool ok = true;
    double margin = 0.0;
    double worst_value = 0.0;   // max |f0 * beta_nm[k]|, Hz
    double limit = 0.0;         // margin * subcarrier spacing, Hz
    int worst_n = -1;
    int worst_m = -1;
    int worst_k = -1;
};

/// Deterministic given (params.seed, device_index); stream independent of the
/// number of devices sampled.
ClockTrack sample_clock(const ClockParams& params, int slow_time_count, int device_index);

ClockDifferential differential(const ClockTrack& clock_n, const ClockTrack& clock_m,
                               double f0);

/// Checks |f0 * beta_nm[k]| < margin * subcarrier_spacing over all ordered
/// pairs and slow-time indices.
SmallCfoReport check_small_cfo(const Waveform& waveform,
                               const std::vector<ClockTrack>& tracks,
                               double margin = 0.01);

}  // namespace mtim
