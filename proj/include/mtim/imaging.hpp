#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mtim/channel.hpp"
#include "mtim/sync.hpp"

namespace mtim {

struct PixelGrid {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    double pixel_size = 1.0;  // m

    int nx() const { return static_cast<int>(std::llround((x_max - x_min) / pixel_size)); }
    int ny() const { return static_cast<int>(std::llround((y_max - y_min) / pixel_size)); }
    int64_t pixel_count() const { return static_cast<int64_t>(nx()) * ny(); }
    Vec2 pixel_center(int ix, int iy) const {
        return {x_min + (ix + 0.5) * pixel_size, y_min + (iy + 0.5) * pixel_size};
    }
    Vec2 center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }
    static PixelGrid centered(Vec2 c, double half_x, double half_y, double pixel) {
        return {c.x - half_x, c.x + half_x, c.y - half_y, c.y + half_y, pixel};
    }
    bool operator==(const PixelGrid&) const = default;
};

/// Complex pixel values, row-major [iy][ix].
struct ComplexImage {
    PixelGrid grid;
    std::vector<cplx> values;

    cplx& at(int ix, int iy) { return values[static_cast<size_t>(iy) * grid.nx() + ix]; }
    cplx at(int ix, int iy) const { return values[static_cast<size_t>(iy) * grid.nx() + ix]; }
};

struct RealImage {
    PixelGrid grid;
    std::vector<double> values;

    double& at(int ix, int iy) { return values[static_cast<size_t>(iy) * grid.nx() + ix]; }
    double at(int ix, int iy) const { return values[static_cast<size_t>(iy) * grid.nx() + ix]; }
};

/// Spatial ambiguity function: the (peak-normalized) image of a unit point
/// target, on a grid expressed in coordinates relative to the reference point.
/// rho_x / rho_y are the half-power full widths of the main lobe.
struct SAF {
    PixelGrid grid;  // relative coordinates, centered on the reference
    std::vector<cplx> values;
    double rho_x = 0.0;
    double rho_y = 0.0;
    Vec2 reference;
};

struct ClipReport {
    int64_t clipped = 0;
    int64_t total = 0;
};

/// Back-projection of one sync-compensated pair at slow-time index k. Pixels
/// sample the CIR at the nearest delay bin of the differential test TOF and
/// are counter-rotated by the test carrier phase; `doppler_precomp` adds the
/// +2pi f kT counter-rotation of a selected target's Doppler. Pixels whose test
/// delay falls outside the CIR span contribute zero and are counted.
ComplexImage backproject_pair(const CIRCube& dcir, const Scenario& scenario, int pair,
                              const PixelGrid& grid, int k,
                              std::optional<double> doppler_precomp = {},
                              ClipReport* clip = nullptr);

/// All K slices of one pair with shared precomputation. The optional Doppler
/// pre-compensation frequency applies as exp(+j 2 pi f k T) per slice.
std::vector<ComplexImage> backproject_stack(const CIRCube& dcir, const Scenario& scenario,
                                            int pair, const PixelGrid& grid,
                                            std::optional<double> doppler_precomp = {},
                                            ClipReport* clip = nullptr);

/// Back-projection without sync compensation: samples the raw CIR at absolute
/// test TOFs assuming ideal clocks. Renders the pre-synchronization failure
/// images; not part of the estimation chain.
ComplexImage backproject_pair_absolute(const CIRCube& cir, const Scenario& scenario,
                                       int pair, const PixelGrid& grid, int k,
                                       ClipReport* clip = nullptr);

/// Pixelwise sum of the per-pair images of one slow-time instant.
ComplexImage combine_smi(std::span<const ComplexImage> pair_images);

/// Pixelwise sum over slow time.
ComplexImage integrate_coherent(std::span<const ComplexImage> stack);

/// Pixelwise sum of magnitudes over slow time.
RealImage integrate_magnitude(std::span<const ComplexImage> stack);

/// Numerically computed SAF: a noiseless ideal-clock unit point target at
/// `reference` is run through synthesis, sync and combined back-projection on
/// `grid` (absolute coordinates); the result is peak-normalized and the
/// -3 dB main-lobe widths are measured. Results are cached per
/// (geometry, waveform, grid, reference, oversampling) hash.
SAF compute_saf(const Scenario& scenario, const PixelGrid& grid, Vec2 reference,
                CirOptions cir = {});

/// Magnitude of the SAF at relative offset (nearest pixel; 0 outside).
double saf_magnitude(const SAF& saf, Vec2 offset);

/// Argmax of |values|, returned as pixel indices.
std::pair<int, int> peak_pixel(const ComplexImage& image);
std::pair<int, int> peak_pixel(const RealImage& image);

/// Half-power (-3 dB) full widths of |values| around its peak, measured along
/// the x and y axes through the peak with linear interpolation.
std::pair<double, double> mainlobe_widths(const RealImage& magnitude);

}  // namespace mtim
