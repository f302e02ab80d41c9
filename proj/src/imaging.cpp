#include "mtim/imaging.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>

#include "mtim/parallel.hpp"
#include "mtim/rng.hpp"

namespace mtim {

namespace {

// Per-pixel quantities that do not depend on the slow-time index: CIR sample
// index of the differential test TOF, conjugate-steering recurrence step and
// the carrier test phase.
struct BpTables {
    std::vector<int32_t> index;     // -1 when the test delay clips
    std::vector<cplx> steer_step;   // multiply-accumulate step over antennas
    std::vector<cplx> test_phase;   // exp(+j 2 pi f0 dtof)
    int64_t clipped = 0;
};

BpTables build_tables(const CIRCube& dcir, const Scenario& scenario, int pair,
                      const PixelGrid& grid, bool differential) {
    const int N = scenario.device_count();
    const int n = pair / N;
    const int m = pair % N;
    const Device& tx = scenario.devices[n];
    const Device& rx = scenario.devices[m];
    const double f0 = scenario.waveform.carrier_frequency;
    const double los_tof = differential
                               ? (rx.position - tx.position).norm() / kSpeedOfLight
                               : 0.0;
    const double kappa_d = kTwoPi / scenario.waveform.wavelength() * rx.antenna_spacing;
    const Vec2 axis = rx.axis();

    const int nx = grid.nx();
    const int ny = grid.ny();
    BpTables t;
    t.index.resize(static_cast<size_t>(nx) * ny);
    t.steer_step.resize(t.index.size());
    t.test_phase.resize(t.index.size());

    std::atomic<int64_t> clipped{0};
    parallel_for_chunks(0, ny, [&](int64_t y0, int64_t y1) {
        int64_t local_clip = 0;
        for (int64_t iy = y0; iy < y1; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const size_t px = static_cast<size_t>(iy) * nx + ix;
                const Vec2 x = grid.pixel_center(ix, static_cast<int>(iy));
                const double dtof = tof(tx, rx, x, {0.0, 0.0}, 0.0) - los_tof;
                const auto s = std::llround((dtof - dcir.origin) / dcir.delay_step);
                if (s < 0 || s >= dcir.delay_count) {
                    t.index[px] = -1;
                    t.steer_step[px] = {1.0, 0.0};
                    t.test_phase[px] = {0.0, 0.0};
                    ++local_clip;
                    continue;
                }
                t.index[px] = static_cast<int32_t>(s);
                // conj(a_m(x))[l] = exp(+j l kappa d axis'u_rx)
                const Vec2 u_rx = (rx.position - x).normalized();
                t.steer_step[px] = unit_phasor(kappa_d * axis.dot(u_rx));
                t.test_phase[px] = unit_phasor(kTwoPi * f0 * dtof);
            }
        }
        clipped += local_clip;
    });
    t.clipped = clipped.load();
    return t;
}

// [delay][antenna] copy of one (pair, k) slice for contiguous antenna reads.
void transpose_slice(const CIRCube& cube, int pair, int k, std::vector<cplx>& out) {
    const int L = cube.antenna_count;
    const int S = cube.delay_count;
    out.resize(static_cast<size_t>(L) * S);
    for (int l = 0; l < L; ++l) {
        const cplx* src = cube.slice(pair, k, l);
        for (int s = 0; s < S; ++s) out[static_cast<size_t>(s) * L + l] = src[s];
    }
}

ComplexImage bp_slice(const BpTables& t, const std::vector<cplx>& transposed, int L,
                      const PixelGrid& grid, cplx slice_phase) {
    ComplexImage img;
    img.grid = grid;
    img.values.assign(t.index.size(), cplx{0.0, 0.0});
    const int nx = grid.nx();
    parallel_for_chunks(0, grid.ny(), [&](int64_t y0, int64_t y1) {
        for (int64_t iy = y0; iy < y1; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const size_t px = static_cast<size_t>(iy) * nx + ix;
                const int32_t s = t.index[px];
                if (s < 0) continue;
                const cplx* h = transposed.data() + static_cast<size_t>(s) * L;
                const cplx step = t.steer_step[px];
                cplx w{1.0, 0.0};
                cplx acc{0.0, 0.0};
                for (int l = 0; l < L; ++l) {
                    acc += w * h[l];
                    w *= step;
                }
                img.values[px] = acc * t.test_phase[px] * slice_phase;
            }
        }
    });
    return img;
}

}  // namespace

ComplexImage backproject_pair(const CIRCube& dcir, const Scenario& scenario, int pair,
                              const PixelGrid& grid, int k,
                              std::optional<double> doppler_precomp, ClipReport* clip) {
    const auto tables = build_tables(dcir, scenario, pair, grid, true);
    std::vector<cplx> transposed;
    transpose_slice(dcir, pair, k, transposed);
    cplx slice_phase{1.0, 0.0};
    if (doppler_precomp) {
        slice_phase = unit_phasor(kTwoPi * *doppler_precomp * k *
                                  scenario.waveform.repetition_interval);
    }
    if (clip) {
        clip->clipped += tables.clipped;
        clip->total += grid.pixel_count();
    }
    return bp_slice(tables, transposed, dcir.antenna_count, grid, slice_phase);
}

std::vector<ComplexImage> backproject_stack(const CIRCube& dcir, const Scenario& scenario,
                                            int pair, const PixelGrid& grid,
                                            std::optional<double> doppler_precomp,
                                            ClipReport* clip) {
    const auto tables = build_tables(dcir, scenario, pair, grid, true);
    if (clip) {
        clip->clipped += tables.clipped * dcir.slow_time_count;
        clip->total += grid.pixel_count() * dcir.slow_time_count;
    }
    std::vector<ComplexImage> stack;
    stack.reserve(dcir.slow_time_count);
    std::vector<cplx> transposed;
    for (int k = 0; k < dcir.slow_time_count; ++k) {
        transpose_slice(dcir, pair, k, transposed);
        cplx slice_phase{1.0, 0.0};
        if (doppler_precomp) {
            slice_phase = unit_phasor(kTwoPi * *doppler_precomp * k *
                                      scenario.waveform.repetition_interval);
        }
        stack.push_back(bp_slice(tables, transposed, dcir.antenna_count, grid, slice_phase));
    }
    return stack;
}

ComplexImage backproject_pair_absolute(const CIRCube& cir, const Scenario& scenario,
                                       int pair, const PixelGrid& grid, int k,
                                       ClipReport* clip) {
    const auto tables = build_tables(cir, scenario, pair, grid, false);
    std::vector<cplx> transposed;
    transpose_slice(cir, pair, k, transposed);
    if (clip) {
        clip->clipped += tables.clipped;
        clip->total += grid.pixel_count();
    }
    return bp_slice(tables, transposed, cir.antenna_count, grid, {1.0, 0.0});
}

ComplexImage combine_smi(std::span<const ComplexImage> pair_images) {
    if (pair_images.empty()) throw std::invalid_argument("combine_smi: empty input");
    ComplexImage out;
    out.grid = pair_images.front().grid;
    out.values.assign(pair_images.front().values.size(), cplx{0.0, 0.0});
    for (const auto& img : pair_images) {
        if (!(img.grid == out.grid)) {
            throw std::invalid_argument("combine_smi: grid mismatch");
        }
        for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += img.values[i];
    }
    return out;
}

ComplexImage integrate_coherent(std::span<const ComplexImage> stack) {
    if (stack.empty()) throw std::invalid_argument("integrate_coherent: empty stack");
    ComplexImage out;
    out.grid = stack.front().grid;
    out.values.assign(stack.front().values.size(), cplx{0.0, 0.0});
    for (const auto& img : stack) {
        for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += img.values[i];
    }
    return out;
}

RealImage integrate_magnitude(std::span<const ComplexImage> stack) {
    if (stack.empty()) throw std::invalid_argument("integrate_magnitude: empty stack");
    RealImage out;
    out.grid = stack.front().grid;
    out.values.assign(stack.front().values.size(), 0.0);
    for (const auto& img : stack) {
        for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += std::abs(img.values[i]);
    }
    return out;
}

std::pair<int, int> peak_pixel(const ComplexImage& image) {
    size_t best = 0;
    double best_v = -1.0;
    for (size_t i = 0; i < image.values.size(); ++i) {
        const double v = std::norm(image.values[i]);
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    const int nx = image.grid.nx();
    return {static_cast<int>(best % nx), static_cast<int>(best / nx)};
}

std::pair<int, int> peak_pixel(const RealImage& image) {
    size_t best = 0;
    double best_v = image.values.empty() ? 0.0 : image.values[0];
    for (size_t i = 1; i < image.values.size(); ++i) {
        if (image.values[i] > best_v) {
            best_v = image.values[i];
            best = i;
        }
    }
    const int nx = image.grid.nx();
    return {static_cast<int>(best % nx), static_cast<int>(best / nx)};
}

namespace {

double half_power_width(const RealImage& img, int px, int py, bool along_x) {
    const double peak = img.at(px, py);
    const double level = peak / std::sqrt(2.0);
    const int n = along_x ? img.grid.nx() : img.grid.ny();
    const int c = along_x ? px : py;
    auto sample = [&](int i) { return along_x ? img.at(i, py) : img.at(px, i); };

    double lo = 0.0, hi = 0.0;
    bool found_lo = false, found_hi = false;
    for (int i = c; i > 0; --i) {
        if (sample(i - 1) < level) {
            const double f = (sample(i) - level) / (sample(i) - sample(i - 1));
            lo = (c - i) + f;
            found_lo = true;
            break;
        }
    }
    for (int i = c; i < n - 1; ++i) {
        if (sample(i + 1) < level) {
            const double f = (sample(i) - level) / (sample(i) - sample(i + 1));
            hi = (i - c) + f;
            found_hi = true;
            break;
        }
    }
    if (!found_lo) lo = c;
    if (!found_hi) hi = n - 1 - c;
    return (lo + hi) * img.grid.pixel_size;
}

}  // namespace

std::pair<double, double> mainlobe_widths(const RealImage& magnitude) {
    auto [px, py] = peak_pixel(magnitude);
    return {half_power_width(magnitude, px, py, true),
            half_power_width(magnitude, px, py, false)};
}

namespace {

uint64_t hash_double(uint64_t h, double v) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    return splitmix64(h ^ bits);
}

uint64_t saf_key(const Scenario& scenario, const PixelGrid& grid, Vec2 reference,
                 const CirOptions& cir) {
    uint64_t h = fnv1a64("saf");
    for (const auto& d : scenario.devices) {
        h = hash_double(h, d.position.x);
        h = hash_double(h, d.position.y);
        h = hash_double(h, d.orientation);
        h = hash_double(h, d.antenna_spacing);
        h = splitmix64(h ^ static_cast<uint64_t>(d.antenna_count));
    }
    const Waveform& w = scenario.waveform;
    h = hash_double(h, w.carrier_frequency);
    h = hash_double(h, w.bandwidth);
    h = splitmix64(h ^ static_cast<uint64_t>(w.subcarrier_count));
    h = splitmix64(h ^ static_cast<uint64_t>(w.device_count));
    h = hash_double(h, grid.x_min);
    h = hash_double(h, grid.x_max);
    h = hash_double(h, grid.y_min);
    h = hash_double(h, grid.y_max);
    h = hash_double(h, grid.pixel_size);
    h = hash_double(h, reference.x);
    h = hash_double(h, reference.y);
    h = splitmix64(h ^ static_cast<uint64_t>(cir.oversampling));
    return h;
}

std::mutex g_saf_mutex;
std::map<uint64_t, SAF> g_saf_cache;

}  // namespace

SAF compute_saf(const Scenario& scenario, const PixelGrid& grid, Vec2 reference,
                CirOptions cir) {
    const uint64_t key = saf_key(scenario, grid, reference, cir);
    {
        std::lock_guard<std::mutex> lock(g_saf_mutex);
        auto it = g_saf_cache.find(key);
        if (it != g_saf_cache.end()) return it->second;
    }

    Scenario point = scenario;
    point.targets = {Target{reference, {0.0, 0.0}, 1.0, 0.0}};
    point.clock_params = ClockParams{};
    point.noise.enabled = false;
    point.include_los = true;
    point.waveform.slow_time_count = 1;
    point.beam_focus = reference;

    std::vector<ClockTrack> clocks;
    for (int n = 0; n < point.device_count(); ++n) {
        clocks.push_back(sample_clock(point.clock_params, 1, n));
    }
    const auto freq = synthesize_channel(point, clocks);
    const auto cube = estimate_cir(freq, point.waveform, cir);
    const auto sync = estimate_sync(cube, point);
    const auto dcir = compensate(cube, sync);

    std::vector<ComplexImage> images;
    images.reserve(point.pair_count());
    for (int p = 0; p < point.pair_count(); ++p) {
        images.push_back(backproject_pair(dcir, point, p, grid, 0));
    }
    ComplexImage combined = combine_smi(images);

    double peak = 0.0;
    for (const auto& v : combined.values) peak = std::max(peak, std::abs(v));
    if (peak <= 0.0) throw std::runtime_error("compute_saf: degenerate point response");
    for (auto& v : combined.values) v /= peak;

    RealImage mag;
    mag.grid = combined.grid;
    mag.values.resize(combined.values.size());
    for (size_t i = 0; i < mag.values.size(); ++i) mag.values[i] = std::abs(combined.values[i]);
    auto [rho_x, rho_y] = mainlobe_widths(mag);

    SAF saf;
    saf.grid = PixelGrid{grid.x_min - reference.x, grid.x_max - reference.x,
                         grid.y_min - reference.y, grid.y_max - reference.y,
                         grid.pixel_size};
    saf.values = std::move(combined.values);
    saf.rho_x = rho_x;
    saf.rho_y = rho_y;
    saf.reference = reference;

    std::lock_guard<std::mutex> lock(g_saf_mutex);
    g_saf_cache.emplace(key, saf);
    return saf;
}

double saf_magnitude(const SAF& saf, Vec2 offset) {
    const int ix = static_cast<int>(std::floor((offset.x - saf.grid.x_min) / saf.grid.pixel_size));
    const int iy = static_cast<int>(std::floor((offset.y - saf.grid.y_min) / saf.grid.pixel_size));
    if (ix < 0 || iy < 0 || ix >= saf.grid.nx() || iy >= saf.grid.ny()) return 0.0;
    return std::abs(saf.values[static_cast<size_t>(iy) * saf.grid.nx() + ix]);
}

}  // namespace mtim
