#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bcnet/flops.hpp"
#include "bcnet/population.hpp"
#include "bcnet/supernet.hpp"
#include "bcnet/width_space.hpp"

// Brute-force reference implementations. They share no code path with the
// routines they check beyond the data types.
namespace bcnet::oracle {

// For every width c in [1, l], marks the channels the principle uses for c
// (both index sets under BC) and returns the per-channel totals.
std::vector<int> enumerate_cardinalities(int l, Principle principle);

// Expected updates each channel of `layer` receives per sampled width (per
// sampled pair under the complementary strategy) when group indices are drawn
// uniformly, by enumerating the K group indices.
std::vector<double> expected_update_profile(const WidthSpace& space, int layer,
                                            Principle principle, Strategy strategy);

inline constexpr std::uint64_t kExhaustiveLimit = 1'000'000;

// Feasible argmax of the evaluator over every width of the space; ties go to
// the lexicographically smaller genome. Throws std::invalid_argument above
// kExhaustiveLimit widths and InfeasibleError when nothing fits the budget.
Genome exhaustive_best_width(const WidthSpace& space,
                             const std::function<double(const Genome&)>& evaluator,
                             const FlopsTable& table, double flops_budget);

struct ParetoPoint {
  double accuracy = 0.0;
  double flops = 0.0;
  bool feasible = true;
  double violation = 0.0;
};

// O(n^2) peeling: a point is in the current front when no remaining point
// dominates it (same feasibility-first rule as the search).
std::vector<std::vector<std::size_t>> brute_pareto(std::span<const ParetoPoint> points);

// Central difference of f at x for each coordinate.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double eps);

// One scalar parameter of the supernet.
struct ParamRef {
  std::size_t layer = 0;
  bool bias = false;
  int row = 0;
  int col = 0;
};

// Central differences of the path loss at each probed parameter.
std::vector<double> finite_diff_grad(const SupernetWeights& weights, const NetworkWidth& width,
                                     const Dataset& batch, PathSide side, double eps,
                                     std::span<const ParamRef> probes);

// Same for every parameter; returned in the Gradients layout.
Gradients finite_diff_grad(const SupernetWeights& weights, const NetworkWidth& width,
                           const Dataset& batch, PathSide side, double eps);

// Kendall tau-b. Throws std::invalid_argument on length < 2, unequal
// lengths, or when either ranking is entirely tied.
double kendall_tau(std::span<const double> a, std::span<const double> b);

}  // namespace bcnet::oracle
