#include "mtim/detection.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace mtim {

DopplerSpectrum doppler_spectrum(std::span<const ComplexImage> pair_stack,
                                 const AreaOfInterest& aoi, int oversample,
                                 double repetition_interval) {
    const int K = static_cast<int>(pair_stack.size());
    if (K < 2) throw std::invalid_argument("doppler_spectrum: need K >= 2 slices");
    if (oversample < 1) throw std::invalid_argument("doppler_spectrum: oversample >= 1");
    const PixelGrid& grid = pair_stack.front().grid;
    const int P = K * oversample;

    std::vector<size_t> pixels;
    for (int iy = 0; iy < grid.ny(); ++iy) {
        for (int ix = 0; ix < grid.nx(); ++ix) {
            if (aoi.contains(grid.pixel_center(ix, iy))) {
                pixels.push_back(static_cast<size_t>(iy) * grid.nx() + ix);
            }
        }
    }
    if (pixels.empty()) throw std::invalid_argument("doppler_spectrum: empty area of interest");

    std::vector<cplx> buf(P);
    fftw_plan plan = fftw_plan_dft_1d(P, reinterpret_cast<fftw_complex*>(buf.data()),
                                      reinterpret_cast<fftw_complex*>(buf.data()),
                                      FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);

    DopplerSpectrum spec;
    spec.power.assign(P, 0.0);
    spec.oversample = oversample;
    spec.native_resolution = 1.0 / (K * repetition_interval);
    for (size_t px : pixels) {
        std::fill(buf.begin(), buf.end(), cplx{0.0, 0.0});
        for (int k = 0; k < K; ++k) buf[k] = pair_stack[k].values[px];
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()));
        for (int b = 0; b < P; ++b) spec.power[b] += std::norm(buf[b]);
    }
    fftw_destroy_plan(plan);

    spec.axis.resize(P);
    const double bin = 1.0 / (P * repetition_interval);
    for (int b = 0; b < P; ++b) {
        spec.axis[b] = (b < (P + 1) / 2 ? b : b - P) * bin;
    }
    return spec;
}

std::vector<double> cfar_threshold(std::span<const double> power, const CfarParams& params) {
    const int n = static_cast<int>(power.size());
    const int g = params.guard_cells;
    const int w = params.training_cells;
    const int total_train = 2 * w;
    const double alpha =
        total_train * (std::pow(params.pfa, -1.0 / total_train) - 1.0);

    if (n < 2 * (g + w) + 1) {
        throw std::invalid_argument("cfar_threshold: spectrum shorter than CFAR window");
    }
    std::vector<double> threshold(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int d = g + 1; d <= g + w; ++d) {
            acc += power[(i + d) % n];
            acc += power[(i - d + n) % n];
        }
        threshold[i] = alpha * acc / total_train;
    }
    return threshold;
}

std::vector<Peak> detect_peaks(const DopplerSpectrum& spectrum, const CfarParams& params,
                               bool exclude_zero) {
    const int n = static_cast<int>(spectrum.power.size());
    const auto threshold = cfar_threshold(spectrum.power, params);
    const double bin =
        spectrum.native_resolution / static_cast<double>(spectrum.oversample);
    // Frequencies wrap at +-1/(2T) = +-K/2 * native resolution.
    const double half_span =
        0.5 * spectrum.native_resolution * (n / spectrum.oversample);
    auto wrap = [half_span](double f) {
        const double span = 2.0 * half_span;
        double v = std::fmod(f + half_span, span);
        if (v < 0.0) v += span;
        return v - half_span;
    };

    struct Candidate {
        double freq;
        double mag;
    };
    std::vector<Candidate> candidates;
    for (int i = 0; i < n; ++i) {
        const double p = spectrum.power[i];
        if (p <= threshold[i] || p <= 0.0) continue;
        const double prev = spectrum.power[(i - 1 + n) % n];
        const double next = spectrum.power[(i + 1) % n];
        if (p < prev || p < next) continue;
        if (exclude_zero &&
            std::abs(spectrum.axis[i]) < spectrum.native_resolution) {
            continue;
        }
        // Quadratic vertex through the three bins around the maximum.
        double delta = 0.0;
        const double denom = prev - 2.0 * p + next;
        if (denom < 0.0) delta = 0.5 * (prev - next) / denom;
        delta = std::clamp(delta, -0.5, 0.5);
        const double vertex = p - 0.25 * (prev - next) * delta;
        candidates.push_back({wrap(spectrum.axis[i] + delta * bin), vertex});
    }

    // Merge peaks closer than the native resolution, keeping the strongest.
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.mag > b.mag; });
    std::vector<Peak> peaks;
    for (const auto& c : candidates) {
        bool merged = false;
        for (const auto& p : peaks) {
            double d = std::abs(c.freq - p.frequency);
            d = std::min(d, 2.0 * half_span - d);  // circular distance
            if (d < spectrum.native_resolution) {
                merged = true;
                break;
            }
        }
        if (!merged) peaks.push_back({c.freq, c.mag, false});
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const Peak& a, const Peak& b) { return a.frequency < b.frequency; });
    return peaks;
}

int estimate_target_count(const std::vector<std::vector<Peak>>& per_pair_peaks) {
    if (per_pair_peaks.empty()) {
        throw std::invalid_argument("estimate_target_count: no pairs");
    }
    std::map<int, int> occurrences;
    for (const auto& peaks : per_pair_peaks) {
        ++occurrences[static_cast<int>(peaks.size())];
    }
    int best_count = 0;
    int best_occ = 0;
    for (const auto& [count, occ] : occurrences) {
        // >= resolves ties toward the larger count (map iterates ascending).
        if (occ >= best_occ) {
            best_occ = occ;
            best_count = count;
        }
    }
    return best_count;
}

CoarseLocations coarse_localize(const RealImage& magnitude, const SAF& saf, int count) {
    RealImage residual = magnitude;
    const int nx = residual.grid.nx();
    const int ny = residual.grid.ny();

    double initial_max = 0.0;
    for (double v : residual.values) initial_max = std::max(initial_max, v);
    const double floor = 1e-9 * initial_max;

    CoarseLocations out;
    for (int q = 0; q < count; ++q) {
        auto [px, py] = peak_pixel(residual);
        const double peak = residual.at(px, py);
        if (peak <= floor) {
            out.truncated = true;
            break;
        }
        const Vec2 xq = residual.grid.pixel_center(px, py);
        out.locations.push_back(xq);
        out.peak_values.push_back(peak);
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const Vec2 x = residual.grid.pixel_center(ix, iy);
                const double h = saf_magnitude(saf, x - xq);
                if (h <= 0.0) continue;
                double& v = residual.at(ix, iy);
                v = std::max(0.0, v - peak * h);
            }
        }
    }
    return out;
}

}  // namespace mtim
