#pragma once

#include <span>
#include <vector>

#include "mtim/imaging.hpp"

namespace mtim {

struct AreaOfInterest {
    Vec2 center;
    double half_x = 0.0;
    double half_y = 0.0;

    bool contains(Vec2 p) const {
        return std::abs(p.x - center.x) <= half_x && std::abs(p.y - center.y) <= half_y;
    }
    static AreaOfInterest full_grid(const PixelGrid& g) {
        return {g.center(), (g.x_max - g.x_min) / 2.0, (g.y_max - g.y_min) / 2.0};
    }
};

/// Doppler power spectrum of one pair, summed over the area-of-interest
/// pixels. The transform kernel is exp(+j 2 pi nu k / P), so a slow-time
/// component exp(-j 2 pi fD k T) peaks at axis value +fD. Entries are in FFT
/// bin order; `axis` carries the signed frequency in [-1/(2T), 1/(2T)).
struct DopplerSpectrum {
    std::vector<double> power;
    std::vector<double> axis;          // Hz
    double native_resolution = 0.0;    // 1/(KT), Hz
    int oversample = 1;
};

struct CfarParams {
    int guard_cells = 2;      // per side
    int training_cells = 8;   // per side
    double pfa = 1e-3;
};

struct Peak {
    double frequency = 0.0;  // Hz
    double magnitude = 0.0;  // spectrum power at the peak
    bool padded = false;     // inserted 0 Hz pseudo-peak (association padding)
};

struct DopplerPeakSet {
    std::vector<std::vector<Peak>> per_pair;  // sorted by frequency
    int target_count = 0;                     // Q_hat (mode rule)
    double doppler_resolution = 0.0;          // Hz
};

/// Spectrum over the AoI pixels of one pair's slow-time image stack,
/// zero-padded by `oversample`. Throws when the AoI contains no pixel or
/// K < 2.
DopplerSpectrum doppler_spectrum(std::span<const ComplexImage> pair_stack,
                                 const AreaOfInterest& aoi, int oversample,
                                 double repetition_interval);

/// Cell-averaging CFAR threshold per cell (circular training window), scaled
/// for the configured false-alarm probability under exponential noise.
std::vector<double> cfar_threshold(std::span<const double> power, const CfarParams& params);

/// CFAR local maxima with quadratic peak interpolation; peaks closer than the
/// native resolution are merged (strongest kept). `exclude_zero` blanks
/// |f| < native resolution to ignore static returns.
std::vector<Peak> detect_peaks(const DopplerSpectrum& spectrum, const CfarParams& params,
                               bool exclude_zero = false);

/// Mode of the per-pair peak counts; ties resolved to the larger count.
int estimate_target_count(const std::vector<std::vector<Peak>>& per_pair_peaks);

struct CoarseLocations {
    std::vector<Vec2> locations;
    std::vector<double> peak_values;
    bool truncated = false;  // fewer than requested peaks were above noise
};

/// Iterative SAF subtraction on a magnitude image: repeatedly take the
/// strongest pixel, then subtract its scaled |SAF| (clamped at zero).
CoarseLocations coarse_localize(const RealImage& magnitude, const SAF& saf, int count);

}  // namespace mtim
