#include "bcnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bcnet/errors.hpp"

namespace bcnet::oracle {

std::vector<int> enumerate_cardinalities(int l, Principle principle) {
  if (l < 1) throw std::invalid_argument("layer width must be >= 1");
  std::vector<int> counts(static_cast<std::size_t>(l), 0);
  for (int c = 1; c <= l; ++c) {
    for (int ch = 1; ch <= c; ++ch) ++counts[static_cast<std::size_t>(ch - 1)];
    if (principle == Principle::BC) {
      for (int ch = l - c + 1; ch <= l; ++ch) ++counts[static_cast<std::size_t>(ch - 1)];
    }
  }
  return counts;
}

std::vector<double> expected_update_profile(const WidthSpace& space, int layer,
                                            Principle principle, Strategy strategy) {
  const int l = space.layer(layer).max_channels;
  const int k = space.group_count();
  std::vector<double> profile(static_cast<std::size_t>(l), 0.0);
  auto mark = [&](int g) {
    const int c = space.channels_for(layer, g);
    for (int ch = 1; ch <= c; ++ch) profile[static_cast<std::size_t>(ch - 1)] += 1.0;
    if (principle == Principle::BC) {
      for (int ch = l - c + 1; ch <= l; ++ch) profile[static_cast<std::size_t>(ch - 1)] += 1.0;
    }
  };
  for (int g = 1; g <= k; ++g) {
    mark(g);
    if (strategy == Strategy::Complementary) mark(std::max(1, k - g));
  }
  for (double& v : profile) v /= k;
  return profile;
}

Genome exhaustive_best_width(const WidthSpace& space,
                             const std::function<double(const Genome&)>& evaluator,
                             const FlopsTable& table, double flops_budget) {
  const auto size = space.size();
  if (!size.exact || *size.exact > kExhaustiveLimit) {
    throw std::invalid_argument("space too large for exhaustive search (limit " +
                                std::to_string(kExhaustiveLimit) + " widths)");
  }
  const int k = space.group_count();
  Genome g(static_cast<std::size_t>(space.num_layers()), 1);
  Genome best;
  double best_score = -std::numeric_limits<double>::infinity();
  // Odometer over genomes in lexicographic order; strict > keeps the first.
  for (;;) {
    if (table.cost(g) <= flops_budget) {
      const double s = evaluator(g);
      if (best.empty() || s > best_score) {
        best_score = s;
        best = g;
      }
    }
    int pos = static_cast<int>(g.size()) - 1;
    while (pos >= 0 && g[static_cast<std::size_t>(pos)] == k) {
      g[static_cast<std::size_t>(pos)] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++g[static_cast<std::size_t>(pos)];
  }
  if (best.empty()) throw InfeasibleError("no width of the space meets the flops budget");
  return best;
}

namespace {

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.violation < b.violation;
  return a.accuracy >= b.accuracy && a.flops <= b.flops &&
         (a.accuracy > b.accuracy || a.flops < b.flops);
}

}  // namespace

std::vector<std::vector<std::size_t>> brute_pareto(std::span<const ParetoPoint> points) {
  std::vector<bool> removed(points.size(), false);
  std::size_t remaining = points.size();
  std::vector<std::vector<std::size_t>> fronts;
  while (remaining > 0) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (removed[i]) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
        dominated = !removed[j] && j != i && dominates(points[j], points[i]);
      }
      if (!dominated) front.push_back(i);
    }
    for (std::size_t i : front) removed[i] = true;
    remaining -= front.size();
    fronts.push_back(std::move(front));
  }
  return fronts;
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = point[i];
    point[i] = orig + eps;
    const double up = f(point);
    point[i] = orig - eps;
    const double down = f(point);
    point[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

namespace {

double& param(SupernetWeights& w, const ParamRef& p) {
  auto& layer = w.layers.at(p.layer);
  if (p.bias) return layer.bias.at(static_cast<std::size_t>(p.row));
  if (p.row < 0 || p.row >= layer.weight.rows || p.col < 0 || p.col >= layer.weight.cols) {
    throw std::out_of_range("parameter reference outside the weight matrix");
  }
  return layer.weight(p.row, p.col);
}

}  // namespace

std::vector<double> finite_diff_grad(const SupernetWeights& weights, const NetworkWidth& width,
                                     const Dataset& batch, PathSide side, double eps,
                                     std::span<const ParamRef> probes) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  SupernetWeights w = weights;
  std::vector<double> out;
  out.reserve(probes.size());
  for (const auto& p : probes) {
    double& v = param(w, p);
    const double orig = v;
    v = orig + eps;
    const double up = forward_path(w, width, side, batch).loss;
    v = orig - eps;
    const double down = forward_path(w, width, side, batch).loss;
    v = orig;
    out.push_back((up - down) / (2.0 * eps));
  }
  return out;
}

Gradients finite_diff_grad(const SupernetWeights& weights, const NetworkWidth& width,
                           const Dataset& batch, PathSide side, double eps) {
  std::vector<ParamRef> probes;
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    const auto& layer = weights.layers[l];
    for (int r = 0; r < layer.weight.rows; ++r) {
      for (int c = 0; c < layer.weight.cols; ++c) probes.push_back({l, false, r, c});
      probes.push_back({l, true, r, 0});
    }
  }
  const auto values = finite_diff_grad(weights, width, batch, side, eps, probes);
  Gradients g = weights;
  for (std::size_t i = 0; i < probes.size(); ++i) param(g, probes[i]) = values[i];
  return g;
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kendall tau needs equal-length rankings");
  if (a.size() < 2) throw std::invalid_argument("kendall tau needs at least two items");
  double concordant = 0.0;
  double discordant = 0.0;
  double ties_a = 0.0;  // pairs tied in a only
  double ties_b = 0.0;  // pairs tied in b only
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ties_a += 1.0;
      } else if (db == 0.0) {
        ties_b += 1.0;
      } else if ((da > 0.0) == (db > 0.0)) {
        concordant += 1.0;
      } else {
        discordant += 1.0;
      }
    }
  }
  const double denom =
      std::sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b));
  if (denom == 0.0) throw std::invalid_argument("kendall tau undefined for an all-tied ranking");
  return (concordant - discordant) / denom;
}

}  // namespace bcnet::oracle
