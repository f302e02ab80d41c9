#pragma once

#include <optional>
#include <vector>

#include "mtim/clocks.hpp"
#include "mtim/geometry.hpp"

namespace mtim {

/// Additive noise control. When enabled, the per-antenna noise variance
/// sigma_w^2 is set from snr_db referenced to target 1:
///   SNR = sigma_s^2 * |rho_nm,1|^2 / sigma_w^2,
/// with |rho_nm,1|^2 averaged over the device pairs. An explicit variance
/// overrides the SNR rule (required for target-free scenarios).
struct NoiseSpec {
    bool enabled = true;
    double snr_db = 20.0;
    std::optional<double> variance;  // sigma_w^2 override
};

/// Full experiment description.
struct Scenario {
    std::vector<Device> devices;
    std::vector<Target> targets;
    Waveform waveform;
    ClockParams clock_params;
    NoiseSpec noise;
    bool include_los = true;
    uint64_t seed = 1;
    /// Tx beamformers focus here; defaults to the target centroid when unset.
    std::optional<Vec2> beam_focus;

    int device_count() const { return static_cast<int>(devices.size()); }
    int pair_count() const { return device_count() * device_count(); }
    int pair_index(int n, int m) const { return n * device_count() + m; }
    Vec2 resolved_beam_focus() const;
    void validate() const;  // throws ConfigError
};

/// Raw received pilot tensor in the frequency domain. Entry order per pair
/// p = n*N + m: [k][antenna][pilot j], where pilot j maps to subcarrier
/// i = n + j*N of the transmitting device n. Values include the pilot symbols
/// (they are divided out by estimate_cir).
struct FreqChannel {
    Waveform waveform;
    int device_count = 0;
    uint64_t seed = 0;
    double noise_variance = 0.0;  // sigma_w^2 actually applied
    std::vector<std::vector<cplx>> pairs;  // pairs[p][(k*L + l)*J_n + j]

    int pilot_count(int pair) const {
        return waveform.pilot_count(pair / device_count);
    }
};

/// Estimated noisy CIR tensor: pairs[p][(k*L + l)*delay_count + s]. Delay of
/// sample s is origin + s*delay_step. When the stored window covers the full
/// IDFT period M/B the grid is circular; cropped windows are not.
struct CIRCube {
    int device_count = 0;
    int slow_time_count = 0;
    int antenna_count = 0;
    int delay_count = 0;
    double delay_step = 0.0;  // s
    double origin = 0.0;      // delay of sample 0, s
    bool circular = true;
    std::vector<std::vector<cplx>> pairs;

    int pair_index(int n, int m) const { return n * device_count + m; }
    const cplx* slice(int pair, int k, int l) const {
        return pairs[pair].data() + (static_cast<size_t>(k) * antenna_count + l) *
                                        static_cast<size_t>(delay_count);
    }
    cplx* slice(int pair, int k, int l) {
        return pairs[pair].data() + (static_cast<size_t>(k) * antenna_count + l) *
                                        static_cast<size_t>(delay_count);
    }
    double span() const { return delay_count * delay_step; }
};

/// Per-path physical parameters used by the synthesizer; exposed for tests.
struct PropagationPath {
    double gain = 0.0;            // |chi * rho| is gain * |chi|; see fields below
    cplx tx_gain;                 // chi_{n,q}
    double rho = 0.0;             // scattering/LOS amplitude
    std::vector<cplx> rx_steering;  // a_{m,q}
    double tof = 0.0;             // static TOF at t=0
    double doppler = 0.0;         // f^D_{nm,q}, Hz
    double phase = 0.0;           // theta_q
};

/// Unit-modulus pseudo-random pilot symbols of one device, scaled to
/// sqrt(pilot_power); deterministic in (seed, device_index).
std::vector<cplx> pilot_symbols(const Waveform& waveform, uint64_t seed, int device_index);

/// Resolved noise variance sigma_w^2 for a scenario (0 when disabled).
double noise_variance(const Scenario& scenario);

/// Paths (targets and, if enabled, the LOS) seen by ordered pair (n, m).
std::vector<PropagationPath> propagation_paths(const Scenario& scenario, int n, int m);

/// Synthesizes the received pilot tensor for every ordered device pair, slow
/// time and antenna, applying clock errors, Doppler, beamforming and noise.
FreqChannel synthesize_channel(const Scenario& scenario,
                               const std::vector<ClockTrack>& clocks);

struct CirOptions {
    int oversampling = 2;  // delay grid step becomes 1/(oversampling*B)
    /// Stored delay window. window_count = 0 keeps the full IDFT span M/B
    /// starting at delay 0. A negative origin captures apparent LOS delays
    /// pushed early by the differential timing offset (read circularly from
    /// the periodic IDFT).
    double window_origin = 0.0;  // s
    int window_count = 0;        // samples; 0 = full span
};

/// LS pilot division, linear interpolation over all M subcarriers and
/// zero-padded inverse DFT. A unit-amplitude path on the delay grid yields
/// peak magnitude 1.
CIRCube estimate_cir(const FreqChannel& freq, const Waveform& waveform,
                     CirOptions options = {});

}  // namespace mtim
