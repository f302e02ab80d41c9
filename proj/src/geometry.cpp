#include "mtim/geometry.hpp"

namespace mtim {

std::pair<Vec2, Vec2> unit_vectors(const Device& device, Vec2 point) {
    Vec2 d = point - device.position;
    double n = d.norm();
    if (n <= 0.0 || !std::isfinite(n)) {
        throw GeometryError("unit_vectors: point coincides with device position");
    }
    Vec2 u_tx = d / n;          // device -> point
    Vec2 u_rx = u_tx * -1.0;    // point -> device
    return {u_tx, u_rx};
}

double tof(const Device& tx, const Device& rx, Vec2 point, Vec2 velocity, double t) {
    Vec2 p = point + velocity * t;
    return ((p - tx.position).norm() + (rx.position - p).norm()) / kSpeedOfLight;
}

double doppler_shift(const Device& tx, const Device& rx, Vec2 point, Vec2 velocity,
                     double f0) {
    auto [u_tx, unused_tx] = unit_vectors(tx, point);
    auto [unused_rx, u_rx] = unit_vectors(rx, point);
    return f0 / kSpeedOfLight * (u_tx - u_rx).dot(velocity);
}

double amplitude(const Device& tx, const Device& rx, const Target& target, double f0) {
    double d_tx = (target.position - tx.position).norm();
    double d_rx = (rx.position - target.position).norm();
    if (d_tx <= 0.0 || d_rx <= 0.0) {
        throw GeometryError("amplitude: target coincides with a device position");
    }
    double lambda0 = kSpeedOfLight / f0;
    double four_pi = 4.0 * 3.14159265358979323846;
    double num = lambda0 * lambda0 * target.rcs;
    double den = four_pi * four_pi * four_pi * d_tx * d_tx * d_rx * d_rx;
    return std::sqrt(num / den);
}

namespace {
std::vector<cplx> steering_from_unit(const Device& device, Vec2 u, double f0) {
    // (p_l - p)' u = l * d * axis' u: linear phase progression over elements.
    const double lambda0 = kSpeedOfLight / f0;
    const double step = -kTwoPi / lambda0 * device.antenna_spacing * device.axis().dot(u);
    std::vector<cplx> a(device.antenna_count);
    for (int l = 0; l < device.antenna_count; ++l) a[l] = unit_phasor(step * l);
    return a;
}
}  // namespace

std::vector<cplx> steering_vector(const Device& device, Vec2 point, double f0,
                                  ArrayRole role) {
    auto [u_tx, u_rx] = unit_vectors(device, point);
    return steering_from_unit(device, role == ArrayRole::tx ? u_tx : u_rx, f0);
}

std::vector<cplx> tx_beamformer(const Device& device, Vec2 focus, double f0) {
    auto a = steering_vector(device, focus, f0, ArrayRole::tx);
    const double scale = 1.0 / std::sqrt(static_cast<double>(device.antenna_count));
    for (auto& v : a) v *= scale;
    return a;
}

cplx beamformer_gain(const Device& device, Vec2 point, double f0,
                     const std::vector<cplx>& b) {
    auto a = steering_vector(device, point, f0, ArrayRole::tx);
    cplx g = 0.0;
    for (size_t l = 0; l < a.size(); ++l) g += std::conj(a[l]) * b[l];
    return g;
}

}  // namespace mtim
