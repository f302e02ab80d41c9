#include "mtim/association.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace mtim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

VelocityRegression::VelocityRegression(std::span<const Device> devices, Vec2 location,
                                       double f0) {
    const int N = static_cast<int>(devices.size());
    rows_ = N * N;
    Eigen::MatrixXd U(rows_, 2);
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < N; ++m) {
            auto [u_tx, d1] = unit_vectors(devices[n], location);
            auto [d2, u_rx] = unit_vectors(devices[m], location);
            const Vec2 row = (u_tx - u_rx) * (f0 / kSpeedOfLight);
            U(n * N + m, 0) = row.x;
            U(n * N + m, 1) = row.y;
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    rank2_ = sv.size() == 2 && sv(1) > 1e-12 * sv(0) && sv(0) > 0.0;

    u_.resize(static_cast<size_t>(rows_) * 2);
    for (int r = 0; r < rows_; ++r) {
        u_[2 * r] = U(r, 0);
        u_[2 * r + 1] = U(r, 1);
    }
    pinv_.assign(static_cast<size_t>(rows_) * 2, 0.0);
    if (rank2_) {
        Eigen::MatrixXd P =
            svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
        for (int r = 0; r < rows_; ++r) {
            pinv_[r] = P(0, r);
            pinv_[rows_ + r] = P(1, r);
        }
    }
}

Vec2 VelocityRegression::solve(std::span<const double> freqs) const {
    Vec2 v;
    for (int r = 0; r < rows_; ++r) {
        v.x += pinv_[r] * freqs[r];
        v.y += pinv_[rows_ + r] * freqs[r];
    }
    return v;
}

double VelocityRegression::cost(std::span<const double> freqs) const {
    if (!rank2_) return kInf;
    const Vec2 v = solve(freqs);
    double acc = 0.0;
    for (int r = 0; r < rows_; ++r) {
        const double res = freqs[r] - (u_[2 * r] * v.x + u_[2 * r + 1] * v.y);
        acc += res * res;
    }
    return acc;
}

Vec2 VelocityRegression::resolution(double doppler_resolution) const {
    Vec2 v;
    for (int r = 0; r < rows_; ++r) {
        v.x += pinv_[r];
        v.y += pinv_[rows_ + r];
    }
    return {std::abs(v.x) * doppler_resolution, std::abs(v.y) * doppler_resolution};
}

std::vector<DopplerTuple> enumerate_tuples(const DopplerPeakSet& peaks, int count,
                                           std::span<const Device> devices, double f0,
                                           const std::optional<TupleFilterOptions>& filter,
                                           size_t cap) {
    if (count < 1) throw AssociationError("enumerate_tuples: target count must be >= 1");
    const int pairs = static_cast<int>(peaks.per_pair.size());

    // Candidate list per pair: the `count` strongest peaks sorted by frequency,
    // padded with a 0 Hz pseudo-peak when a pair detected fewer.
    std::vector<std::vector<Peak>> candidates(pairs);
    for (int p = 0; p < pairs; ++p) {
        auto list = peaks.per_pair[p];
        std::sort(list.begin(), list.end(),
                  [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
        if (static_cast<int>(list.size()) > count) list.resize(count);
        while (static_cast<int>(list.size()) < count) list.push_back({0.0, 0.0, true});
        std::sort(list.begin(), list.end(),
                  [](const Peak& a, const Peak& b) { return a.frequency < b.frequency; });
        candidates[p] = std::move(list);
    }

    const double total = std::pow(static_cast<double>(count), pairs);
    if (!filter && total > static_cast<double>(cap)) {
        throw AssociationError(
            "enumerate_tuples: " + std::to_string(total) +
            " tuples exceed the cap; enable the feasibility prefilter");
    }
    if (total > 1e8) {
        throw AssociationError("enumerate_tuples: tuple space too large to enumerate");
    }

    std::vector<VelocityRegression> regressions;
    if (filter) {
        for (const Vec2& x : filter->locations) {
            regressions.emplace_back(devices, x, f0);
        }
    }

    std::vector<DopplerTuple> out;
    std::vector<int> odo(pairs, 0);
    std::vector<double> freqs(pairs);
    while (true) {
        bool padded = false;
        for (int p = 0; p < pairs; ++p) {
            const Peak& pk = candidates[p][odo[p]];
            freqs[p] = pk.frequency;
            padded = padded || pk.padded;
        }
        bool keep = true;
        if (filter && !regressions.empty()) {
            double best = kInf;
            for (const auto& reg : regressions) {
                best = std::min(best, reg.cost(freqs));
            }
            keep = best <= filter->threshold;
        }
        if (keep) {
            if (out.size() >= cap) {
                throw AssociationError("enumerate_tuples: tuple cap exceeded");
            }
            out.push_back({odo, freqs, padded});
        }
        // Lexicographic odometer, first pair most significant.
        int p = pairs - 1;
        while (p >= 0 && ++odo[p] == count) odo[p--] = 0;
        if (p < 0) break;
    }
    return out;
}

CostResult association_cost(const DopplerTuple& tuple, Vec2 location,
                            std::span<const Device> devices, double f0) {
    VelocityRegression reg(devices, location, f0);
    if (!reg.rank2()) return {kInf, {}, false};
    return {reg.cost(tuple.frequencies), reg.solve(tuple.frequencies), true};
}

namespace {

// Shortest augmenting path assignment over the transposed problem: algorithm
// rows are the targets (few), algorithm columns the tuples. Potentials keep
// reduced costs nonnegative, so every augmentation is optimal.
struct SspResult {
    std::vector<int> row_for_target;
    std::vector<double> u;  // target potentials
    std::vector<double> v;  // tuple potentials
};

SspResult ssp_solve(const CostMatrix& costs) {
    const int nt = costs.cols;  // targets
    const int nr = costs.rows;  // tuples
    if (nr < nt) {
        throw AssociationError("solve_assignment: fewer tuples than targets");
    }
    std::vector<double> u(nt, 0.0), v(nr, 0.0);
    std::vector<int> target_for_row(nr, -1), row_for_target(nt, -1);
    std::vector<double> dist(nr);
    std::vector<int> pred(nr);
    std::vector<char> scanned_t(nt), scanned_r(nr);

    for (int cur = 0; cur < nt; ++cur) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(pred.begin(), pred.end(), -1);
        std::fill(scanned_t.begin(), scanned_t.end(), 0);
        std::fill(scanned_r.begin(), scanned_r.end(), 0);
        int t = cur;
        double min_val = 0.0;
        int sink = -1;
        while (sink == -1) {
            scanned_t[t] = 1;
            double lowest = kInf;
            int lowest_r = -1;
            for (int r = 0; r < nr; ++r) {
                if (scanned_r[r]) continue;
                const double red = min_val + costs.at(r, t) - u[t] - v[r];
                if (red < dist[r]) {
                    dist[r] = red;
                    pred[r] = t;
                }
                if (dist[r] < lowest ||
                    (dist[r] == lowest && lowest_r != -1 &&
                     target_for_row[r] == -1 && target_for_row[lowest_r] != -1)) {
                    lowest = dist[r];
                    lowest_r = r;
                }
            }
            if (!std::isfinite(lowest)) {
                throw AssociationError("solve_assignment: target " + std::to_string(cur) +
                                       " has no feasible tuple");
            }
            min_val = lowest;
            scanned_r[lowest_r] = 1;
            if (target_for_row[lowest_r] == -1) {
                sink = lowest_r;
            } else {
                t = target_for_row[lowest_r];
            }
        }
        u[cur] += min_val;
        for (int tt = 0; tt < nt; ++tt) {
            if (scanned_t[tt] && tt != cur) {
                u[tt] += min_val - dist[row_for_target[tt]];
            }
        }
        for (int r = 0; r < nr; ++r) {
            if (scanned_r[r]) v[r] -= min_val - dist[r];
        }
        int r = sink;
        while (true) {
            const int tt = pred[r];
            target_for_row[r] = tt;
            std::swap(row_for_target[tt], r);
            if (tt == cur) break;
        }
    }
    return {row_for_target, u, v};
}

// Kuhn matching feasibility: can every target in `adj` take a distinct row
// not marked in `used_rows`?
bool feasible_completion(const std::vector<std::vector<int>>& adj,
                         const std::vector<char>& used_rows, int nr) {
    const int nt = static_cast<int>(adj.size());
    std::vector<int> match_row(nr, -1);
    std::vector<char> seen(nr, 0);
    std::function<bool(int)> aug = [&](int t) -> bool {
        for (int r : adj[t]) {
            if (used_rows[r] || seen[r]) continue;
            seen[r] = 1;
            if (match_row[r] == -1 || aug(match_row[r])) {
                match_row[r] = t;
                return true;
            }
        }
        return false;
    };
    for (int t = 0; t < nt; ++t) {
        std::fill(seen.begin(), seen.end(), 0);
        if (!aug(t)) return false;
    }
    return true;
}

}  // namespace

Assignment solve_assignment(const CostMatrix& costs) {
    if (costs.cols < 1 || costs.rows < 1) {
        throw AssociationError("solve_assignment: empty cost matrix");
    }
    auto ssp = ssp_solve(costs);
    const int nt = costs.cols;
    const int nr = costs.rows;

    double max_cost = 0.0;
    for (double c : costs.values) {
        if (std::isfinite(c)) max_cost = std::max(max_cost, std::abs(c));
    }
    const double eps = 1e-9 * (1.0 + max_cost);

    // Zero-reduced-cost adjacency per target, rows ascending.
    std::vector<std::vector<int>> adj(nt);
    for (int t = 0; t < nt; ++t) {
        for (int r = 0; r < nr; ++r) {
            const double red = costs.at(r, t) - ssp.u[t] - ssp.v[r];
            if (std::isfinite(costs.at(r, t)) && red <= eps) adj[t].push_back(r);
        }
    }
    std::vector<int> polished(nt, -1);
    std::vector<char> used(nr, 0);
    bool ok = true;
    for (int t = 0; t < nt && ok; ++t) {
        ok = false;
        for (int r : adj[t]) {
            if (used[r]) continue;
            used[r] = 1;
            polished[t] = r;
            // Check the remaining targets can still be completed.
            std::vector<std::vector<int>> rest(adj.begin() + t + 1, adj.end());
            if (feasible_completion(rest, used, nr)) {
                ok = true;
                break;
            }
            used[r] = 0;
            polished[t] = -1;
        }
    }

    Assignment out;
    out.tuple_for_target = ssp.row_for_target;
    if (ok) {
        double ssp_total = 0.0, pol_total = 0.0;
        for (int t = 0; t < nt; ++t) {
            ssp_total += costs.at(ssp.row_for_target[t], t);
            pol_total += costs.at(polished[t], t);
        }
        if (pol_total <= ssp_total + nt * eps) out.tuple_for_target = polished;
    }
    out.total_cost = 0.0;
    for (int t = 0; t < nt; ++t) out.total_cost += costs.at(out.tuple_for_target[t], t);
    return out;
}

Vec2 velocity_resolution(Vec2 location, std::span<const Device> devices, double f0,
                         double doppler_resolution) {
    VelocityRegression reg(devices, location, f0);
    if (!reg.rank2()) {
        throw AssociationError("velocity_resolution: rank-deficient geometry");
    }
    return reg.resolution(doppler_resolution);
}

AssociationResult associate(const DopplerPeakSet& peaks, std::span<const Vec2> locations,
                            std::span<const Device> devices, double f0, bool prefilter,
                            size_t cap) {
    if (peaks.target_count < 1) {
        throw AssociationError("associate: no targets detected");
    }
    if (locations.empty()) {
        throw AssociationError("associate: no candidate locations");
    }
    AssociationResult result;
    result.target_count = peaks.target_count;

    std::optional<TupleFilterOptions> filter;
    if (prefilter) {
        const int pairs = static_cast<int>(peaks.per_pair.size());
        filter = TupleFilterOptions{
            locations, 10.0 * peaks.doppler_resolution * peaks.doppler_resolution * pairs};
    }
    result.tuples = enumerate_tuples(peaks, peaks.target_count, devices, f0, filter, cap);

    const int nq = static_cast<int>(locations.size());
    std::vector<VelocityRegression> regs;
    regs.reserve(nq);
    for (const Vec2& x : locations) regs.emplace_back(devices, x, f0);

    result.costs.rows = static_cast<int>(result.tuples.size());
    result.costs.cols = nq;
    result.costs.values.resize(static_cast<size_t>(result.costs.rows) * nq);
    for (int r = 0; r < result.costs.rows; ++r) {
        for (int q = 0; q < nq; ++q) {
            result.costs.at(r, q) = regs[q].cost(result.tuples[r].frequencies);
        }
    }
    result.assignment = solve_assignment(result.costs);

    result.velocities.resize(nq);
    result.velocity_resolution.resize(nq);
    for (int q = 0; q < nq; ++q) {
        const auto& tuple = result.tuples[result.assignment.tuple_for_target[q]];
        result.velocities[q] = regs[q].solve(tuple.frequencies);
        result.velocity_resolution[q] = regs[q].resolution(peaks.doppler_resolution);
    }
    return result;
}

std::string association_table_csv(const AssociationResult& result,
                                  std::span<const Vec2> locations,
                                  std::span<const Device> devices, double f0,
                                  int max_rows_per_target) {
    std::ostringstream os;
    const int pairs = result.tuples.empty()
                          ? 0
                          : static_cast<int>(result.tuples.front().frequencies.size());
    os << "tuple,target";
    for (int p = 0; p < pairs; ++p) os << ",f_hz_" << p;
    os << ",loc_x_m,loc_y_m,vel_x_mps,vel_y_mps,cost,chosen\n";
    os.precision(10);
    for (int q = 0; q < result.costs.cols; ++q) {
        VelocityRegression reg(devices, locations[q], f0);
        std::vector<int> order(result.costs.rows);
        for (int r = 0; r < result.costs.rows; ++r) order[r] = r;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return result.costs.at(a, q) < result.costs.at(b, q);
        });
        const int limit = std::min<int>(max_rows_per_target, result.costs.rows);
        for (int i = 0; i < limit; ++i) {
            const int r = order[i];
            const Vec2 v = reg.rank2() ? reg.solve(result.tuples[r].frequencies) : Vec2{};
            const bool chosen = result.assignment.tuple_for_target[q] == r;
            os << r << ',' << q;
            for (double f : result.tuples[r].frequencies) os << ',' << f;
            os << ',' << locations[q].x << ',' << locations[q].y << ',' << v.x << ','
               << v.y << ',' << result.costs.at(r, q) << ',' << (chosen ? 1 : 0) << '\n';
        }
    }
    return os.str();
}

}  // namespace mtim
