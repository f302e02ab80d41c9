#include "mtim/sync.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mtim {

namespace {

std::vector<double> power_profile(const CIRCube& cube, int pair) {
    const int K = cube.slow_time_count;
    const int L = cube.antenna_count;
    const int S = cube.delay_count;
    std::vector<double> power(S, 0.0);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            const cplx* h = cube.slice(pair, k, l);
            for (int s = 0; s < S; ++s) power[s] += std::norm(h[s]);
        }
    }
    const double inv_k = 1.0 / K;
    for (auto& v : power) v *= inv_k;
    return power;
}

double median(std::vector<double> v) {
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

}  // namespace

double estimate_los_tof(const CIRCube& cube, int pair, const SyncOptions& options) {
    const auto power = power_profile(cube, pair);
    const int S = static_cast<int>(power.size());
    const double floor = median(power);
    const double threshold = floor * std::pow(10.0, options.peak_threshold_db / 10.0);

    int best = -1;
    if (options.first_peak) {
        for (int s = 0; s < S; ++s) {
            const double prev = cube.circular ? power[(s - 1 + S) % S]
                                              : power[std::max(s - 1, 0)];
            const double next = cube.circular ? power[(s + 1) % S]
                                              : power[std::min(s + 1, S - 1)];
            if (power[s] >= threshold && power[s] >= prev && power[s] >= next) {
                best = s;
                break;
            }
        }
    } else {
        best = static_cast<int>(std::max_element(power.begin(), power.end()) -
                                power.begin());
        if (power[best] < threshold) best = -1;
    }
    if (best < 0) {
        throw SyncFailure("estimate_los_tof: no LOS peak above threshold for pair " +
                          std::to_string(pair));
    }
    return cube.origin + best * cube.delay_step;
}

std::vector<cplx> estimate_los_phase(const CIRCube& cube, int pair, double tof_hat,
                                     std::span<const cplx> rx_steering) {
    const int K = cube.slow_time_count;
    const int L = cube.antenna_count;
    const int S = cube.delay_count;
    int s0 = static_cast<int>(std::lround((tof_hat - cube.origin) / cube.delay_step));
    s0 = ((s0 % S) + S) % S;

    std::vector<cplx> phase(K);
    for (int k = 0; k < K; ++k) {
        cplx acc = 0.0;
        for (int l = 0; l < L; ++l) {
            const cplx h = cube.slice(pair, k, l)[s0];
            const double mag = std::abs(h);
            const cplx unit = mag > 0.0 ? h / mag : cplx{1.0, 0.0};
            acc += std::conj(rx_steering[l]) * unit;
        }
        const double n = std::abs(acc);
        phase[k] = n > 0.0 ? acc / n : cplx{1.0, 0.0};
    }
    return phase;
}

double phase_crlb(double snr_linear, int L, int M, int N) {
    if (snr_linear <= 0.0 || L < 1 || M < 1 || N < 1) {
        throw std::invalid_argument("phase_crlb: positive inputs required");
    }
    const double pilots = static_cast<double>(M) / N;
    return 1.0 / (2.0 * L * pilots * snr_linear);
}

SyncEstimate estimate_sync(const CIRCube& cube, const Scenario& scenario,
                           const SyncOptions& options) {
    const int N = scenario.device_count();
    const double f0 = scenario.waveform.carrier_frequency;
    SyncEstimate est;
    est.pairs.resize(static_cast<size_t>(N) * N);
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < N; ++m) {
            PairSync& ps = est.pairs[cube.pair_index(n, m)];
            if (n == m) {
                // Shared clock: the self-coupling LOS sits exactly at delay 0.
                ps.monostatic = true;
                ps.los_tof = 0.0;
                ps.shift_samples = static_cast<int>(
                    std::lround((0.0 - cube.origin) / cube.delay_step));
                ps.los_phase.assign(cube.slow_time_count, cplx{1.0, 0.0});
                continue;
            }
            ps.monostatic = false;
            ps.los_tof = estimate_los_tof(cube, cube.pair_index(n, m), options);
            ps.shift_samples = static_cast<int>(
                std::lround((ps.los_tof - cube.origin) / cube.delay_step));
            const auto a0 = steering_vector(scenario.devices[m],
                                            scenario.devices[n].position, f0,
                                            ArrayRole::rx);
            ps.los_phase = estimate_los_phase(cube, cube.pair_index(n, m), ps.los_tof,
                                              std::span<const cplx>(a0));
        }
    }
    return est;
}

CIRCube compensate(const CIRCube& cube, const SyncEstimate& sync) {
    if (sync.pairs.size() != cube.pairs.size()) {
        throw std::invalid_argument("compensate: sync estimate missing pairs");
    }
    CIRCube out = cube;
    out.origin = 0.0;
    const int K = cube.slow_time_count;
    const int L = cube.antenna_count;
    const int S = cube.delay_count;
    for (size_t p = 0; p < cube.pairs.size(); ++p) {
        const PairSync& ps = sync.pairs[p];
        const int shift = cube.circular ? ((ps.shift_samples % S) + S) % S
                                        : ps.shift_samples;
        for (int k = 0; k < K; ++k) {
            const cplx rot = ps.monostatic ? cplx{1.0, 0.0} : std::conj(ps.los_phase[k]);
            for (int l = 0; l < L; ++l) {
                const cplx* src = cube.slice(static_cast<int>(p), k, l);
                cplx* dst = out.pairs[p].data() +
                            (static_cast<size_t>(k) * L + l) * S;
                if (cube.circular) {
                    for (int s = 0; s < S; ++s) dst[s] = src[(s + shift) % S] * rot;
                } else {
                    for (int s = 0; s < S; ++s) {
                        const int j = s + shift;
                        dst[s] = (j >= 0 && j < S) ? src[j] * rot : cplx{0.0, 0.0};
                    }
                }
            }
        }
    }
    return out;
}

std::string sync_report_csv(const Scenario& scenario, const SyncEstimate& sync) {
    const int N = scenario.device_count();
    const Waveform& wf = scenario.waveform;
    const double sigma_w2 = noise_variance(scenario);
    std::ostringstream os;
    os << "tx,rx,monostatic,los_tof_s,mean_los_phase_rad,phase_crlb_rad2\n";
    os.setf(std::ios::scientific);
    os.precision(9);
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < N; ++m) {
            const PairSync& ps = sync.pairs[n * N + m];
            cplx mean = 0.0;
            for (const auto& v : ps.los_phase) mean += v;
            double crlb = 0.0;
            if (!ps.monostatic && sigma_w2 > 0.0) {
                const double dist =
                    (scenario.devices[m].position - scenario.devices[n].position).norm();
                const double rho = wf.wavelength() / (4.0 * 3.14159265358979323846 * dist);
                const double snr = wf.pilot_power * rho * rho / sigma_w2;
                crlb = phase_crlb(snr, scenario.devices[m].antenna_count,
                                  wf.subcarrier_count, wf.device_count);
            }
            os << n << ',' << m << ',' << (ps.monostatic ? 1 : 0) << ',' << ps.los_tof
               << ',' << std::arg(mean) << ',' << crlb << '\n';
        }
    }
    return os.str();
}

}  // namespace mtim
