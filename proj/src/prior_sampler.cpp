#include "bcnet/prior_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "bcnet/errors.hpp"

namespace bcnet {

namespace {

using Probs = std::vector<std::vector<double>>;

const std::vector<double> kPointMass{1.0};

// Distribution on the input side / output side of boundary b.
const std::vector<double>& input_side(const Probs& p, int b) {
  return b == 0 ? kPointMass : p[static_cast<std::size_t>(b - 1)];
}
const std::vector<double>& output_side(const Probs& p, int b, int num_layers) {
  return b == num_layers ? kPointMass : p[static_cast<std::size_t>(b)];
}

void check_shape(const Probs& p, const FlopsTable& table) {
  if (static_cast<int>(p.size()) != table.num_layers()) {
    throw std::invalid_argument("distribution has the wrong number of layers");
  }
  for (const auto& layer : p) {
    if (static_cast<int>(layer.size()) != table.group_count()) {
      throw std::invalid_argument("distribution has the wrong number of width options");
    }
  }
}

double max_abs_diff(const Probs& a, const Probs& b) {
  double d = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    for (std::size_t i = 0; i < a[l].size(); ++i) d = std::max(d, std::abs(a[l][i] - b[l][i]));
  }
  return d;
}

struct Penalized {
  const PotentialErrorMatrix& e;
  const FlopsTable& table;
  double budget;
  double mu;

  double objective(const Probs& p) const {
    return expected_error(SamplingDistribution{p}, e);
  }
  double residual(const Probs& p) const {
    return expected_flops(SamplingDistribution{p}, table) / budget - 1.0;
  }
  double value(const Probs& p) const {
    const double h = std::max(0.0, residual(p));
    return objective(p) + mu * h * h;
  }
  Probs gradient(const Probs& p) const {
    Probs g = e.errors;
    const double h = std::max(0.0, residual(p));
    if (h > 0.0) {
      const Probs gf = expected_flops_gradient(SamplingDistribution{p}, table);
      for (std::size_t l = 0; l < g.size(); ++l) {
        for (std::size_t i = 0; i < g[l].size(); ++i) g[l][i] += 2.0 * mu * h * gf[l][i] / budget;
      }
    }
    return g;
  }
};

Probs projected_step(const Probs& p, const Probs& grad, double t) {
  Probs out(p.size());
  std::vector<double> v;
  for (std::size_t l = 0; l < p.size(); ++l) {
    v.resize(p[l].size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = p[l][i] - t * grad[l][i];
    out[l] = project_simplex(v);
  }
  return out;
}

// Moves p toward the all-minimum distribution just far enough to meet the
// budget. Requires the all-minimum distribution to be feasible.
Probs restore_feasibility(const Probs& p, const Probs& minimum, const FlopsTable& table,
                          double budget) {
  auto mix = [&](double t) {
    Probs q = p;
    for (std::size_t l = 0; l < q.size(); ++l) {
      for (std::size_t i = 0; i < q[l].size(); ++i) q[l][i] = (1.0 - t) * p[l][i] + t * minimum[l][i];
    }
    return q;
  };
  if (expected_flops(SamplingDistribution{p}, table) <= budget) return p;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_flops(SamplingDistribution{mix(mid)}, table) <= budget) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return mix(hi);
}

Population draw_population(const std::function<Genome(Rng&)>& draw, const WidthSpace& space,
                           const FlopsTable& table, double flops_budget, int size,
                           int rejection_limit, std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("population size must be >= 1");
  if (rejection_limit < 0) throw std::invalid_argument("rejection limit must be >= 0");
  if (min_flops(space, table) > flops_budget) {
    throw InfeasibleError("flops budget " + std::to_string(flops_budget) +
                          " is below the minimum-width cost " +
                          std::to_string(min_flops(space, table)));
  }
  Rng rng(seed);
  auto feasible_draw = [&]() {
    Genome g = draw(rng);
    for (int r = 0; r < rejection_limit && table.cost(g) > flops_budget; ++r) g = draw(rng);
    if (table.cost(g) > flops_budget) g = repair_to_budget(space, table, std::move(g), flops_budget);
    return g;
  };

  constexpr int kDedupAttempts = 200;
  Population pop;
  std::set<Genome> seen;
  for (int n = 0; n < size; ++n) {
    Genome g = feasible_draw();
    for (int a = 0; a < kDedupAttempts && seen.contains(g); ++a) g = feasible_draw();
    if (seen.contains(g)) pop.dedup_relaxed = true;
    seen.insert(g);
    pop.individuals.push_back(Individual{std::move(g), std::nullopt, true, 0.0});
  }
  return pop;
}

}  // namespace

SamplingDistribution SamplingDistribution::uniform(const WidthSpace& space) {
  const auto k = static_cast<std::size_t>(space.group_count());
  return {Probs(static_cast<std::size_t>(space.num_layers()),
                std::vector<double>(k, 1.0 / static_cast<double>(k)))};
}

SamplingDistribution SamplingDistribution::point_mass(const WidthSpace& space,
                                                      const Genome& genome) {
  if (!space.contains_genome(genome)) throw std::invalid_argument("genome outside the space");
  Probs p(genome.size(), std::vector<double>(static_cast<std::size_t>(space.group_count()), 0.0));
  for (std::size_t l = 0; l < genome.size(); ++l) p[l][static_cast<std::size_t>(genome[l] - 1)] = 1.0;
  return {p};
}

void PipsConfig::validate() const {
  if (max_iterations < 1 || !(step_size > 0) || !(penalty_weight > 0) || !(penalty_growth > 1) ||
      !(tolerance > 0) || !(restore_threshold > 0)) {
    throw std::invalid_argument("pips config: iterations, step size, penalty, tolerance must be "
                                "positive and penalty growth > 1");
  }
}

PotentialErrorMatrix potential_errors(const LossLedger& ledger, const WidthSpace& space) {
  if (ledger.empty()) throw std::invalid_argument("potential errors need a nonempty loss ledger");
  const auto num_layers = static_cast<std::size_t>(space.num_layers());
  const auto k = static_cast<std::size_t>(space.group_count());
  PotentialErrorMatrix m{Probs(num_layers, std::vector<double>(k, 0.0)),
                         std::vector<std::vector<int>>(num_layers, std::vector<int>(k, 0))};
  for (const auto& entry : ledger.entries()) {
    const Genome g = space.to_genome(entry.width);
    for (std::size_t l = 0; l < num_layers; ++l) {
      const auto i = static_cast<std::size_t>(g[l] - 1);
      m.errors[l][i] += entry.loss;
      ++m.visits[l][i];
    }
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < num_layers; ++l) {
    for (std::size_t i = 0; i < k; ++i) {
      if (m.visits[l][i] > 0) {
        m.errors[l][i] /= m.visits[l][i];
        worst = std::max(worst, m.errors[l][i]);
      }
    }
  }
  for (std::size_t l = 0; l < num_layers; ++l) {
    for (std::size_t i = 0; i < k; ++i) {
      if (m.visits[l][i] == 0) m.errors[l][i] = worst;
    }
  }
  return m;
}

double expected_flops(const SamplingDistribution& dist, const FlopsTable& table) {
  check_shape(dist.probs, table);
  const int num_layers = table.num_layers();
  double total = 0.0;
  for (int b = 0; b <= num_layers; ++b) {
    const auto& pin = input_side(dist.probs, b);
    const auto& pout = output_side(dist.probs, b, num_layers);
    for (int i = 0; i < table.rows(b); ++i) {
      double row = 0.0;
      for (int j = 0; j < table.cols(b); ++j) row += table.at(b, i, j) * pout[static_cast<std::size_t>(j)];
      total += pin[static_cast<std::size_t>(i)] * row;
    }
  }
  return total;
}

std::vector<std::vector<double>> expected_flops_gradient(const SamplingDistribution& dist,
                                                         const FlopsTable& table) {
  check_shape(dist.probs, table);
  const int num_layers = table.num_layers();
  Probs g(dist.probs.size(), std::vector<double>(static_cast<std::size_t>(table.group_count()), 0.0));
  for (int b = 0; b <= num_layers; ++b) {
    const auto& pin = input_side(dist.probs, b);
    const auto& pout = output_side(dist.probs, b, num_layers);
    for (int i = 0; i < table.rows(b); ++i) {
      for (int j = 0; j < table.cols(b); ++j) {
        const double f = table.at(b, i, j);
        if (b > 0) g[static_cast<std::size_t>(b - 1)][static_cast<std::size_t>(i)] += f * pout[static_cast<std::size_t>(j)];
        if (b < num_layers) g[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)] += pin[static_cast<std::size_t>(i)] * f;
      }
    }
  }
  return g;
}

double expected_error(const SamplingDistribution& dist, const PotentialErrorMatrix& e) {
  if (dist.probs.size() != e.errors.size()) {
    throw std::invalid_argument("distribution and error matrix disagree on layer count");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < e.errors.size(); ++l) {
    if (dist.probs[l].size() != e.errors[l].size()) {
      throw std::invalid_argument("distribution and error matrix disagree on option count");
    }
    for (std::size_t i = 0; i < e.errors[l].size(); ++i) total += dist.probs[l][i] * e.errors[l][i];
  }
  return total;
}

std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("cannot project an empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cumulative += u[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  // Remove the rounding drift so the sum is 1 to the last bit or two.
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  if (sum > 0.0) {
    for (double& x : out) x /= sum;
  }
  return out;
}

PipsResult optimize_distribution(const PotentialErrorMatrix& e, const FlopsTable& table,
                                 double flops_budget, const PipsConfig& config) {
  config.validate();
  if (!(flops_budget > 0.0)) throw std::invalid_argument("flops budget must be positive");
  const auto num_layers = static_cast<std::size_t>(table.num_layers());
  const auto k = static_cast<std::size_t>(table.group_count());
  if (e.errors.size() != num_layers) throw std::invalid_argument("error matrix layer mismatch");

  Probs minimum(num_layers, std::vector<double>(k, 0.0));
  for (auto& layer : minimum) layer[0] = 1.0;
  if (expected_flops(SamplingDistribution{minimum}, table) > flops_budget) {
    throw InfeasibleError("flops budget " + std::to_string(flops_budget) +
                          " is below the expected cost of the all-minimum distribution");
  }

  Probs p(num_layers, std::vector<double>(k, 1.0 / static_cast<double>(k)));
  Penalized f{e, table, flops_budget, config.penalty_weight};
  PipsResult result;
  double step = config.step_size;
  int iteration = 0;
  bool within_threshold = false;
  const int inner_cap = std::max(1, config.max_iterations / 8);

  while (iteration < config.max_iterations) {
    for (int inner = 0; inner < inner_cap && iteration < config.max_iterations; ++inner) {
      const Probs grad = f.gradient(p);
      const double value = f.value(p);
      step = std::min(step * 2.0, config.step_size * 1e6);
      Probs next;
      for (;;) {
        next = projected_step(p, grad, step);
        double lin = 0.0;
        double sq = 0.0;
        for (std::size_t l = 0; l < num_layers; ++l) {
          for (std::size_t i = 0; i < k; ++i) {
            const double d = next[l][i] - p[l][i];
            lin += grad[l][i] * d;
            sq += d * d;
          }
        }
        if (f.value(next) <= value + lin + sq / (2.0 * step) + 1e-15 * std::abs(value) ||
            step < 1e-300) {
          break;
        }
        step *= 0.5;
      }
      const double change = max_abs_diff(next, p);
      p = std::move(next);
      ++iteration;
      result.log.push_back({iteration, f.objective(p), f.residual(p), step});
      if (change < config.tolerance) break;
    }
    if (f.residual(p) <= config.restore_threshold) {
      within_threshold = true;
      break;
    }
    f.mu *= config.penalty_growth;
  }

  auto finish = [&](Probs q) {
    result.distribution = SamplingDistribution{std::move(q)};
    result.objective = expected_error(result.distribution, e);
    result.expected_flops = expected_flops(result.distribution, table);
    result.constraint_residual = std::max(0.0, result.expected_flops - flops_budget);
  };
  if (!within_threshold) {
    finish(restore_feasibility(p, minimum, table, flops_budget));
    throw PipsConvergenceError("expected-flops constraint not met within " +
                                   std::to_string(config.max_iterations) + " iterations",
                               std::move(result));
  }
  finish(restore_feasibility(p, minimum, table, flops_budget));
  return result;
}

Genome sample_genome(const SamplingDistribution& dist, Rng& rng) {
  Genome g(dist.probs.size());
  for (std::size_t l = 0; l < dist.probs.size(); ++l) {
    const auto& p = dist.probs[l];
    const double u = uniform01(rng);
    double cumulative = 0.0;
    int choice = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      choice = static_cast<int>(i) + 1;
      cumulative += p[i];
      if (u < cumulative) break;
    }
    if (choice == 0) throw std::invalid_argument("layer distribution has no positive mass");
    g[l] = choice;
  }
  return g;
}

NetworkWidth sample_width(const SamplingDistribution& dist, const WidthSpace& space,
                          std::uint64_t seed) {
  Rng rng(seed);
  return space.to_width(sample_genome(dist, rng));
}

Population initial_population(const SamplingDistribution& dist, const WidthSpace& space,
                              const FlopsTable& table, double flops_budget, int size,
                              int rejection_limit, std::uint64_t seed) {
  return draw_population([&](Rng& rng) { return sample_genome(dist, rng); }, space, table,
                         flops_budget, size, rejection_limit, seed);
}

Population random_population(const WidthSpace& space, const FlopsTable& table,
                             double flops_budget, int size, int rejection_limit,
                             std::uint64_t seed) {
  return draw_population([&](Rng& rng) { return uniform_sample_genome(space, rng); }, space, table,
                         flops_budget, size, rejection_limit, seed);
}

}  // namespace bcnet
