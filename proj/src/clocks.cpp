#include "mtim/clocks.hpp"

#include <cmath>
#include <stdexcept>

#include "mtim/rng.hpp"

namespace mtim {

ClockTrack sample_clock(const ClockParams& params, int slow_time_count, int device_index) {
    if (slow_time_count < 1) throw std::invalid_argument("sample_clock: K must be >= 1");
    auto rng = make_stream(params.seed, "clock", static_cast<uint64_t>(device_index));
    std::uniform_real_distribution<double> uto(0.0, params.to_max);
    std::normal_distribution<double> gauss(0.0, params.cfo_std);

    ClockTrack track;
    track.to = params.to_max > 0.0 ? uto(rng) : 0.0;
    track.cfo.resize(slow_time_count);
    track.cfo[0] = params.cfo_std > 0.0 ? gauss(rng) : 0.0;
    for (int k = 1; k < slow_time_count; ++k) {
        double w = params.cfo_std > 0.0 ? gauss(rng) : 0.0;
        track.cfo[k] = params.ar_coefficient * track.cfo[k - 1] + params.innovation_scale * w;
    }
    return track;
}

ClockDifferential differential(const ClockTrack& clock_n, const ClockTrack& clock_m,
                               double f0) {
    if (clock_n.cfo.size() != clock_m.cfo.size()) {
        throw std::invalid_argument("differential: CFO track length mismatch");
    }
    ClockDifferential d;
    d.dto = clock_n.to - clock_m.to;
    d.dcfo.resize(clock_n.cfo.size());
    for (size_t k = 0; k < d.dcfo.size(); ++k) d.dcfo[k] = clock_n.cfo[k] - clock_m.cfo[k];
    d.po = kTwoPi * f0 * d.dto;
    return d;
}

SmallCfoReport check_small_cfo(const Waveform& waveform,
                               const std::vector<ClockTrack>& tracks, double margin) {
    SmallCfoReport report;
    report.margin = margin;
    report.limit = margin * waveform.subcarrier_spacing();
    const int n_dev = static_cast<int>(tracks.size());
    for (int n = 0; n < n_dev; ++n) {
        for (int m = 0; m < n_dev; ++m) {
            if (n == m) continue;  // same clock, differential identically zero
            const auto& bn = tracks[n].cfo;
            const auto& bm = tracks[m].cfo;
            for (size_t k = 0; k < bn.size(); ++k) {
                double v = std::abs(waveform.carrier_frequency * (bn[k] - bm[k]));
                if (v > report.worst_value) {
                    report.worst_value = v;
                    report.worst_n = n;
                    report.worst_m = m;
                    report.worst_k = static_cast<int>(k);
                }
            }
        }
    }
    report.ok = report.worst_value < report.limit;
    return report;
}

}  // namespace mtim
