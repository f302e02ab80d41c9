#pragma once

#include <span>
#include <string>
#include <vector>

#include "mtim/channel.hpp"

namespace mtim {

struct SyncOptions {
    /// Select the earliest local maximum above threshold instead of the
    /// global maximum (for beams that de-weight the LOS direction).
    bool first_peak = false;
    /// Peak acceptance threshold above the noise floor (median power), dB.
    double peak_threshold_db = 6.0;
};

/// Per-pair LOS reference. Monostatic pairs share one clock, so their LOS
/// delay is exactly zero and no phase rotation is applied.
struct PairSync {
    bool monostatic = false;
    double los_tof = 0.0;          // tau_hat_nm,0, s (grid-quantized)
    int shift_samples = 0;         // los_tof expressed in delay-grid samples
    std::vector<cplx> los_phase;   // Phi_hat_nm,0[k], unit modulus, length K
};

struct SyncEstimate {
    std::vector<PairSync> pairs;  // indexed p = n*N + m
};

/// LOS TOF estimate: argmax over delay of the CIR power summed over antennas
/// and averaged over slow time. Throws SyncFailure when no sample exceeds the
/// threshold above the noise floor.
double estimate_los_tof(const CIRCube& cube, int pair, const SyncOptions& options = {});

/// LOS phase reference per slow-time index: the Rx steering toward the Tx is
/// combined against the per-antenna phase of the CIR at the LOS delay;
/// normalized to unit modulus.
std::vector<cplx> estimate_los_phase(const CIRCube& cube, int pair, double tof_hat,
                                     std::span<const cplx> rx_steering);

/// High-SNR CRLB of the LOS phase estimate, rad^2. `snr_linear` is the
/// per-antenna per-subcarrier-sample SNR sigma_s^2 |rho_nm,0|^2 / sigma_w^2;
/// the M/N pilot integration and the L-antenna combination enter the bound.
double phase_crlb(double snr_linear, int L, int M, int N);

/// Runs LOS TOF and phase estimation for every ordered pair.
SyncEstimate estimate_sync(const CIRCube& cube, const Scenario& scenario,
                           const SyncOptions& options = {});

/// Shifts each pair's delay origin to the estimated LOS TOF (circular,
/// integer-sample) and rotates each slow-time slice by the conjugate LOS
/// phase. The result contains paths at differential TOFs.
CIRCube compensate(const CIRCube& cube, const SyncEstimate& sync);

/// Per-pair sync summary (tau_hat, mean LOS phase angle, CRLB) as CSV text.
std::string sync_report_csv(const Scenario& scenario, const SyncEstimate& sync);

}  // namespace mtim
