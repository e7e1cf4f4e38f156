#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bcnet/flops.hpp"
#include "bcnet/population.hpp"
#include "bcnet/supernet.hpp"
#include "bcnet/width_space.hpp"

namespace bcnet {

// E(l, c_i): mean ledger loss of widths whose layer l takes option i.
// Indexed [layer][group - 1].
struct PotentialErrorMatrix {
  std::vector<std::vector<double>> errors;
  std::vector<std::vector<int>> visits;
};

// Per-layer categorical distributions over the width options.
struct SamplingDistribution {
  std::vector<std::vector<double>> probs;

  static SamplingDistribution uniform(const WidthSpace& space);
  static SamplingDistribution point_mass(const WidthSpace& space, const Genome& genome);
  bool operator==(const SamplingDistribution&) const = default;
};

struct PipsConfig {
  int max_iterations = 20000;
  double step_size = 1.0;        // initial step of the backtracking line search
  double penalty_weight = 10.0;  // initial mu
  double penalty_growth = 10.0;
  double tolerance = 1e-10;      // inner stationarity tolerance on the iterate change
  // Constraint residual (relative to the budget) below which the penalty
  // loop stops and the iterate is pulled onto the feasible set exactly.
  double restore_threshold = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PipsIteration {
  int iteration = 0;
  double objective = 0.0;
  double constraint_residual = 0.0;  // expected_flops / budget - 1 (negative when slack)
  double step_size = 0.0;
};

struct PipsResult {
  SamplingDistribution distribution;
  double objective = 0.0;
  double expected_flops = 0.0;
  double constraint_residual = 0.0;  // max(0, expected_flops - budget)
  std::vector<PipsIteration> log;
};

// Raised when the penalty loop runs out of iterations; carries the best
// iterate found.
class PipsConvergenceError : public std::runtime_error {
 public:
  PipsConvergenceError(const std::string& what, PipsResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const PipsResult& best() const { return best_; }

 private:
  PipsResult best_;
};

// Unvisited cells take the largest observed potential error. Throws
// std::invalid_argument on an empty ledger.
PotentialErrorMatrix potential_errors(const LossLedger& ledger, const WidthSpace& space);

double expected_flops(const SamplingDistribution& dist, const FlopsTable& table);

// d expected_flops / d P(l, i), same layout as dist.probs.
std::vector<std::vector<double>> expected_flops_gradient(const SamplingDistribution& dist,
                                                         const FlopsTable& table);

double expected_error(const SamplingDistribution& dist, const PotentialErrorMatrix& e);

// Euclidean projection onto the probability simplex (sort-and-threshold).
std::vector<double> project_simplex(std::span<const double> v);

// Minimizes the expected potential error over per-layer simplices subject to
// expected_flops <= budget (penalty method with projected gradient steps).
// Throws InfeasibleError when even the all-minimum distribution exceeds the
// budget, PipsConvergenceError when max_iterations is exhausted.
PipsResult optimize_distribution(const PotentialErrorMatrix& e, const FlopsTable& table,
                                 double flops_budget, const PipsConfig& config);

Genome sample_genome(const SamplingDistribution& dist, Rng& rng);
NetworkWidth sample_width(const SamplingDistribution& dist, const WidthSpace& space,
                          std::uint64_t seed);

// Draws `size` distinct feasible genomes. A draw over budget is redrawn up to
// rejection_limit times and then repaired by repair_to_budget. Duplicates are
// redrawn; if the space cannot supply enough distinct feasible widths the
// population keeps duplicates and sets dedup_relaxed.
Population initial_population(const SamplingDistribution& dist, const WidthSpace& space,
                              const FlopsTable& table, double flops_budget, int size,
                              int rejection_limit, std::uint64_t seed);

// Same procedure with uniform draws; the random-initialization baseline.
Population random_population(const WidthSpace& space, const FlopsTable& table,
                             double flops_budget, int size, int rejection_limit,
                             std::uint64_t seed);

}  // namespace bcnet
