#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace mtim {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Malformed or inconsistent configuration input (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Degenerate geometry, e.g. evaluation point coinciding with a device.
struct GeometryError : std::runtime_error {
    explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// LOS reference could not be recovered from the CIR (CLI exit code 3).
struct SyncFailure : std::runtime_error {
    explicit SyncFailure(const std::string& msg) : std::runtime_error(msg) {}
};

/// Doppler-space association could not produce a valid assignment (CLI exit code 4).
struct AssociationError : std::runtime_error {
    explicit AssociationError(const std::string& msg) : std::runtime_error(msg) {}
};

inline cplx unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

}  // namespace mtim
