#include "mtim/channel.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "mtim/parallel.hpp"
#include "mtim/rng.hpp"

namespace mtim {

Vec2 Scenario::resolved_beam_focus() const {
    if (beam_focus) return *beam_focus;
    if (!targets.empty()) {
        Vec2 c;
        for (const auto& t : targets) c = c + t.position;
        return c / static_cast<double>(targets.size());
    }
    return {0.0, 1.0};
}

void Scenario::validate() const {
    if (devices.empty()) throw ConfigError("scenario: at least one device required");
    if (static_cast<int>(devices.size()) != waveform.device_count) {
        throw ConfigError("scenario: device count does not match waveform.device_count");
    }
    if (waveform.subcarrier_count < waveform.device_count) {
        throw ConfigError("scenario: fewer subcarriers than devices");
    }
    if (waveform.bandwidth <= 0.0 || waveform.carrier_frequency <= 0.0) {
        throw ConfigError("scenario: carrier frequency and bandwidth must be positive");
    }
    if (waveform.repetition_interval < waveform.symbol_duration()) {
        throw ConfigError("scenario: repetition interval shorter than the OFDM symbol");
    }
    if (waveform.slow_time_count < 1) throw ConfigError("scenario: K must be >= 1");
    for (const auto& d : devices) {
        if (d.antenna_count < 1) throw ConfigError("scenario: device with no antennas");
        if (d.antenna_count > 1 && d.antenna_spacing <= 0.0) {
            throw ConfigError("scenario: non-positive antenna spacing");
        }
        if (d.antenna_count != devices.front().antenna_count) {
            throw ConfigError("scenario: all devices must share one antenna count");
        }
    }
    for (const auto& t : targets) {
        if (t.rcs < 0.0) throw ConfigError("scenario: negative RCS");
    }
    if (noise.enabled && !noise.variance && targets.empty()) {
        throw ConfigError("scenario: SNR-referenced noise requires a target or an explicit variance");
    }
}

std::vector<cplx> pilot_symbols(const Waveform& waveform, uint64_t seed, int device_index) {
    auto rng = make_stream(seed, "pilot", static_cast<uint64_t>(device_index));
    std::uniform_real_distribution<double> uphase(0.0, kTwoPi);
    const double scale = std::sqrt(waveform.pilot_power);
    std::vector<cplx> s(waveform.pilot_count(device_index));
    for (auto& v : s) v = scale * unit_phasor(uphase(rng));
    return s;
}

double noise_variance(const Scenario& scenario) {
    if (!scenario.noise.enabled) return 0.0;
    if (scenario.noise.variance) return *scenario.noise.variance;
    // Reference |rho_nm,1|^2 averaged over ordered pairs (target 1 = index 0).
    const auto& ref = scenario.targets.front();
    double mean_rho2 = 0.0;
    for (const auto& dn : scenario.devices) {
        for (const auto& dm : scenario.devices) {
            double rho = amplitude(dn, dm, ref, scenario.waveform.carrier_frequency);
            mean_rho2 += rho * rho;
        }
    }
    mean_rho2 /= scenario.pair_count();
    double snr_lin = std::pow(10.0, scenario.noise.snr_db / 10.0);
    return scenario.waveform.pilot_power * mean_rho2 / snr_lin;
}

std::vector<PropagationPath> propagation_paths(const Scenario& scenario, int n, int m) {
    const double f0 = scenario.waveform.carrier_frequency;
    const double lambda0 = scenario.waveform.wavelength();
    const Device& tx = scenario.devices[n];
    const Device& rx = scenario.devices[m];
    const auto b = tx_beamformer(tx, scenario.resolved_beam_focus(), f0);

    std::vector<PropagationPath> paths;
    if (scenario.include_los) {
        PropagationPath los;
        los.phase = 0.0;
        los.doppler = 0.0;
        if (n == m) {
            // Direct self-coupling: zero delay, boresight arrival, fixed strength.
            los.tof = 0.0;
            los.rho = lambda0 / (4.0 * 3.14159265358979323846);
            los.rx_steering.assign(rx.antenna_count, cplx{1.0, 0.0});
            cplx g = 0.0;
            for (const auto& w : b) g += w;  // a(boresight) is all ones
            los.tx_gain = g;
        } else {
            double dist = (rx.position - tx.position).norm();
            los.tof = dist / kSpeedOfLight;
            los.rho = lambda0 / (4.0 * 3.14159265358979323846 * dist);
            los.rx_steering = steering_vector(rx, tx.position, f0, ArrayRole::rx);
            los.tx_gain = beamformer_gain(tx, rx.position, f0, b);
        }
        paths.push_back(std::move(los));
    }
    for (const auto& t : scenario.targets) {
        PropagationPath p;
        p.tof = tof(tx, rx, t.position, t.velocity, 0.0);
        p.doppler = doppler_shift(tx, rx, t.position, t.velocity, f0);
        p.rho = amplitude(tx, rx, t, f0);
        p.rx_steering = steering_vector(rx, t.position, f0, ArrayRole::rx);
        p.tx_gain = beamformer_gain(tx, t.position, f0, b);
        p.phase = t.scattering_phase;
        paths.push_back(std::move(p));
    }
    return paths;
}

FreqChannel synthesize_channel(const Scenario& scenario,
                               const std::vector<ClockTrack>& clocks) {
    scenario.validate();
    const Waveform& wf = scenario.waveform;
    const int N = scenario.device_count();
    const int K = wf.slow_time_count;
    const double f0 = wf.carrier_frequency;
    const double df = wf.subcarrier_spacing();
    const double T = wf.repetition_interval;
    const double sigma_w2 = noise_variance(scenario);

    FreqChannel out;
    out.waveform = wf;
    out.device_count = N;
    out.seed = scenario.seed;
    out.noise_variance = sigma_w2;
    out.pairs.resize(scenario.pair_count());

    for (int n = 0; n < N; ++n) {
        const auto pilots = pilot_symbols(wf, scenario.seed, n);
        const int J = static_cast<int>(pilots.size());
        for (int m = 0; m < N; ++m) {
            const int p = scenario.pair_index(n, m);
            const int L = scenario.devices[m].antenna_count;
            const auto paths = propagation_paths(scenario, n, m);
            const auto diff = differential(clocks[n], clocks[m], f0);
            auto& buf = out.pairs[p];
            buf.assign(static_cast<size_t>(K) * L * J, cplx{0.0, 0.0});

            parallel_for(0, K, [&](int64_t k) {
                const double beta_n = clocks[n].cfo[k];
                const double beta_nm = diff.dcfo[k];
                const double kt = static_cast<double>(k) * T;
                cplx* slab = buf.data() + static_cast<size_t>(k) * L * J;
                for (const auto& path : paths) {
                    const double tau_bar = (1.0 + beta_n) * path.tof - diff.dto;
                    const double phi = kTwoPi * f0 * beta_nm * kt -
                                       kTwoPi * f0 * (1.0 + beta_n) * path.tof -
                                       kTwoPi * path.doppler * kt + diff.po + path.phase;
                    const cplx base = path.tx_gain * path.rho * unit_phasor(phi) *
                                      unit_phasor(-kTwoPi * n * df * tau_bar);
                    const cplx step = unit_phasor(-kTwoPi * N * df * tau_bar);
                    for (int l = 0; l < L; ++l) {
                        const cplx al = base * path.rx_steering[l];
                        cplx w = al;
                        cplx* row = slab + static_cast<size_t>(l) * J;
                        for (int j = 0; j < J; ++j) {
                            row[j] += w;
                            w *= step;
                        }
                    }
                }
                // Apply Tx pilots, then noise from a per-(pair, k) stream so
                // that parallel and serial synthesis are bit-identical.
                for (int l = 0; l < L; ++l) {
                    cplx* row = slab + static_cast<size_t>(l) * J;
                    for (int j = 0; j < J; ++j) row[j] *= pilots[j];
                }
                if (sigma_w2 > 0.0) {
                    auto rng = make_stream(scenario.seed, "noise",
                                           static_cast<uint64_t>(p),
                                           static_cast<uint64_t>(k));
                    std::normal_distribution<double> g(0.0, std::sqrt(sigma_w2 / 2.0));
                    for (int l = 0; l < L; ++l) {
                        cplx* row = slab + static_cast<size_t>(l) * J;
                        for (int j = 0; j < J; ++j) row[j] += cplx{g(rng), g(rng)};
                    }
                }
            });
        }
    }
    return out;
}

namespace {

// FFTW plan shared by all slices of one estimate_cir call. Plan creation is
// not thread-safe; execution on distinct buffers is.
struct IdftPlan {
    fftw_plan plan = nullptr;
    int size = 0;
    std::mutex mu;

    void ensure(int n) {
        std::lock_guard<std::mutex> lock(mu);
        if (plan && size == n) return;
        if (plan) fftw_destroy_plan(plan);
        std::vector<cplx> tmp(n);
        plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(tmp.data()),
                                reinterpret_cast<fftw_complex*>(tmp.data()),
                                FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        size = n;
    }
    ~IdftPlan() {
        if (plan) fftw_destroy_plan(plan);
    }
};

}  // namespace

CIRCube estimate_cir(const FreqChannel& freq, const Waveform& waveform, CirOptions options) {
    if (options.oversampling < 1) throw ConfigError("estimate_cir: oversampling must be >= 1");
    const int N = freq.device_count;
    const int M = waveform.subcarrier_count;
    const int K = waveform.slow_time_count;
    const int S = M * options.oversampling;
    const double step = 1.0 / (waveform.bandwidth * options.oversampling);

    int window = options.window_count > 0 ? options.window_count : S;
    if (window > S) window = S;
    // Stored sample w corresponds to IDFT bin (w + first_bin) mod S.
    const int64_t first_bin = std::llround(options.window_origin / step);
    const bool full_span = window == S;

    CIRCube cube;
    cube.device_count = N;
    cube.slow_time_count = K;
    cube.delay_count = window;
    cube.delay_step = step;
    cube.origin = full_span ? 0.0 : first_bin * step;
    cube.circular = full_span;
    cube.pairs.resize(static_cast<size_t>(N) * N);

    IdftPlan plan;
    plan.ensure(S);

    for (int n = 0; n < N; ++n) {
        const auto pilots = pilot_symbols(waveform, freq.seed, n);
        const auto idx = waveform.pilot_subcarriers(n);
        const int J = static_cast<int>(idx.size());
        for (int m = 0; m < N; ++m) {
            const int p = n * N + m;
            const auto& buf = freq.pairs[p];
            const int L = static_cast<int>(buf.size() / (static_cast<size_t>(K) * J));
            if (m == 0 || cube.antenna_count == 0) cube.antenna_count = L;
            auto& out = cube.pairs[p];
            out.resize(static_cast<size_t>(K) * L * window);

            parallel_for(0, static_cast<int64_t>(K) * L, [&](int64_t slice) {
                const int k = static_cast<int>(slice / L);
                const int l = static_cast<int>(slice % L);
                const cplx* row = buf.data() + (static_cast<size_t>(k) * L + l) * J;

                // LS estimate at the pilots, then linear interpolation of
                // real/imag over all M subcarriers (constant extrapolation
                // outside the pilot span).
                std::vector<cplx> ls(J);
                for (int j = 0; j < J; ++j) ls[j] = row[j] / pilots[j];
                std::vector<cplx> interp(static_cast<size_t>(S), cplx{0.0, 0.0});
                int j = 0;
                for (int i = 0; i < M; ++i) {
                    while (j + 1 < J && idx[j + 1] <= i) ++j;
                    cplx v;
                    if (i <= idx[0]) {
                        v = ls[0];
                    } else if (i >= idx[J - 1]) {
                        v = ls[J - 1];
                    } else {
                        const double t = double(i - idx[j]) / double(idx[j + 1] - idx[j]);
                        v = ls[j] * (1.0 - t) + ls[j + 1] * t;
                    }
                    interp[i] = v;
                }
                fftw_execute_dft(plan.plan,
                                 reinterpret_cast<fftw_complex*>(interp.data()),
                                 reinterpret_cast<fftw_complex*>(interp.data()));
                const double scale = 1.0 / static_cast<double>(M);
                cplx* dst = out.data() + (static_cast<size_t>(k) * L + l) * window;
                for (int w = 0; w < window; ++w) {
                    const int64_t bin = (((first_bin + w) % S) + S) % S;
                    dst[w] = interp[bin] * scale;
                }
            });
        }
    }
    return cube;
}

}  // namespace mtim
