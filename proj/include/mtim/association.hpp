#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtim/detection.hpp"

namespace mtim {

/// One hypothesis: a Doppler frequency per ordered pair (n, m), drawn from
/// that pair's detected peak list.
struct DopplerTuple {
    std::vector<int> peak_choice;      // per-pair index into the candidate list
    std::vector<double> frequencies;   // Hz, length N^2
    bool has_padded = false;           // uses a 0 Hz pseudo-peak
};

/// Dense row-major cost matrix, rows = tuples, cols = targets.
struct CostMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
    double& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
};

struct Assignment {
    std::vector<int> tuple_for_target;  // A(q)
    double total_cost = 0.0;
};

struct CostResult {
    double cost = 0.0;
    Vec2 velocity;
    bool feasible = true;
};

struct TupleFilterOptions {
    std::span<const Vec2> locations;
    double threshold = 0.0;  // keep tuples with min-location cost <= threshold
};

struct AssociationResult {
    int target_count = 0;
    std::vector<DopplerTuple> tuples;
    CostMatrix costs;
    Assignment assignment;
    std::vector<Vec2> velocities;           // per target
    std::vector<Vec2> velocity_resolution;  // per target
};

/// Least-squares velocity fit machinery at a fixed location: rows of U are
/// (f0/c)(u_n - u_m)' over ordered pairs. Rank-deficient geometries are
/// flagged and produce infinite costs.
class VelocityRegression {
  public:
    VelocityRegression(std::span<const Device> devices, Vec2 location, double f0);

    bool rank2() const { return rank2_; }
    Vec2 solve(std::span<const double> freqs) const;   // pinv(U) f
    double cost(std::span<const double> freqs) const;  // ||f - U pinv(U) f||^2
    Vec2 resolution(double doppler_resolution) const;  // |pinv(U) 1| dfD

  private:
    int rows_ = 0;
    bool rank2_ = false;
    std::vector<double> u_;     // row-major N^2 x 2
    std::vector<double> pinv_;  // row-major 2 x N^2
};

/// All count^(N^2) per-pair peak combinations in lexicographic order (pair 0
/// most significant). Pairs with fewer than `count` peaks are padded with a
/// 0 Hz pseudo-peak; pairs with more contribute their `count` strongest.
/// Without a filter, exceeding `cap` raises AssociationError advising the
/// prefilter; with a filter, only kept tuples count against the cap.
std::vector<DopplerTuple> enumerate_tuples(const DopplerPeakSet& peaks, int count,
                                           std::span<const Device> devices, double f0,
                                           const std::optional<TupleFilterOptions>& filter = {},
                                           size_t cap = 1'000'000);

CostResult association_cost(const DopplerTuple& tuple, Vec2 location,
                            std::span<const Device> devices, double f0);

/// Exact minimum-cost rectangular assignment: every column (target) gets
/// exactly one distinct row (tuple). Shortest-augmenting-path with potentials;
/// ties are broken toward lexicographically smallest row indices. Throws
/// AssociationError naming the first infeasible target.
Assignment solve_assignment(const CostMatrix& costs);

Vec2 velocity_resolution(Vec2 location, std::span<const Device> devices, double f0,
                         double doppler_resolution);

/// End-to-end step C: tuples, costs, assignment and per-target velocities.
AssociationResult associate(const DopplerPeakSet& peaks, std::span<const Vec2> locations,
                            std::span<const Device> devices, double f0,
                            bool prefilter = false, size_t cap = 1'000'000);

/// Association table (tuple shifts, location, fitted velocity, cost, chosen
/// flag) as CSV; rows limited to the cheapest `max_rows_per_target`.
std::string association_table_csv(const AssociationResult& result,
                                  std::span<const Vec2> locations,
                                  std::span<const Device> devices, double f0,
                                  int max_rows_per_target = 32);

}  // namespace mtim
