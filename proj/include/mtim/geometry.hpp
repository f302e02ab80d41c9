#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "mtim/common.hpp"

namespace mtim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    Vec2 normalized() const {
        double n = norm();
        return {x / n, y / n};
    }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

/// ISAC device: uniform linear array of `antenna_count` elements with spacing
/// `antenna_spacing`, oriented at `orientation` rad in global coordinates.
/// Antenna l sits at position + l*spacing*[cos psi, sin psi], l = 0..L-1;
/// element 0 is the phase reference.
struct Device {
    Vec2 position;
    double orientation = 0.0;  // rad
    int antenna_count = 1;
    double antenna_spacing = 0.0;  // m

    Vec2 axis() const { return {std::cos(orientation), std::sin(orientation)}; }
    Vec2 boresight() const { return {-std::sin(orientation), std::cos(orientation)}; }
    Vec2 antenna_position(int l) const { return position + axis() * (l * antenna_spacing); }
};

struct Target {
    Vec2 position;            // m
    Vec2 velocity;            // m/s
    double rcs = 1.0;         // m^2
    double scattering_phase = 0.0;  // rad, common to all device pairs
};

/// OFDM pilot waveform. Device n uses every device_count-th subcarrier
/// starting from n (0-based), so the pilot sets partition 0..M-1.
struct Waveform {
    double carrier_frequency = 26.5e9;  // Hz
    double bandwidth = 400e6;           // Hz
    int subcarrier_count = 1024;        // M
    int device_count = 1;               // N
    double repetition_interval = 0.5e-3;  // T, s
    int slow_time_count = 64;             // K
    double pilot_power = 1.0;             // sigma_s^2

    double subcarrier_spacing() const { return bandwidth / subcarrier_count; }
    double symbol_duration() const { return 1.0 / subcarrier_spacing(); }
    double wavelength() const { return kSpeedOfLight / carrier_frequency; }
    double doppler_resolution() const {
        return 1.0 / (slow_time_count * repetition_interval);
    }
    int pilot_count(int device_index) const {
        return (subcarrier_count - 1 - device_index) / device_count + 1;
    }
    std::vector<int> pilot_subcarriers(int device_index) const {
        std::vector<int> out;
        out.reserve(pilot_count(device_index));
        for (int i = device_index; i < subcarrier_count; i += device_count) out.push_back(i);
        return out;
    }
};

enum class ArrayRole { tx, rx };

/// Unit vectors for a device/point pair: first points from the device center to
/// the point (Tx sense), second from the point back to the device (Rx sense).
/// Throws GeometryError if the point coincides with the device position.
std::pair<Vec2, Vec2> unit_vectors(const Device& device, Vec2 point);

/// Bistatic time of flight via a scattering point moving at `velocity`,
/// evaluated at time t. The LOS TOF is tof(tx, rx, rx.position, {0,0}, 0).
double tof(const Device& tx, const Device& rx, Vec2 point, Vec2 velocity, double t);

/// Doppler shift (f0/c) * (u_tx - u_rx)' v for a scatterer at `point` moving
/// with `velocity`. Positive for a target receding from a monostatic device.
double doppler_shift(const Device& tx, const Device& rx, Vec2 point, Vec2 velocity,
                     double f0);

/// Two-leg scattering amplitude including path loss:
/// sqrt(lambda0^2 * rcs / ((4pi)^3 * d_tx^2 * d_rx^2)).
double amplitude(const Device& tx, const Device& rx, const Target& target, double f0);

/// Array response toward `point`: element l = exp(-j 2pi/lambda (p_l - p)' u),
/// u chosen by role. All elements unit modulus, element 0 equals 1.
std::vector<cplx> steering_vector(const Device& device, Vec2 point, double f0,
                                  ArrayRole role);

/// Transmit beamformer focused at `focus`, normalized so ||b|| = 1 and the
/// gain a(focus)^H b equals sqrt(L).
std::vector<cplx> tx_beamformer(const Device& device, Vec2 focus, double f0);

/// Gain of beamformer `b` evaluated toward `point`: a(point)^H b.
cplx beamformer_gain(const Device& device, Vec2 point, double f0,
                     const std::vector<cplx>& b);

}  // namespace mtim
