#include "bcnet/evo_search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "bcnet/errors.hpp"

namespace bcnet {

namespace {

const Fitness& fitness_of(const Individual& ind) {
  if (!ind.fitness) throw std::invalid_argument("individual has no fitness");
  return *ind.fitness;
}

bool pareto_dominates(const Fitness& a, const Fitness& b) {
  return a.accuracy >= b.accuracy && a.flops <= b.flops &&
         (a.accuracy > b.accuracy || a.flops < b.flops);
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i - 1)));
    std::swap(v[i - 1], v[j]);
  }
}

// Tournament order: true when a beats b.
bool beats(const Population& pop, const RankedPopulation& ranked, std::size_t a, std::size_t b) {
  if (ranked.rank[a] != ranked.rank[b]) return ranked.rank[a] < ranked.rank[b];
  if (ranked.crowding[a] != ranked.crowding[b]) return ranked.crowding[a] > ranked.crowding[b];
  const auto& fa = fitness_of(pop.individuals[a]);
  const auto& fb = fitness_of(pop.individuals[b]);
  if (fa.accuracy != fb.accuracy) return fa.accuracy > fb.accuracy;
  if (pop.individuals[a].genome != pop.individuals[b].genome) {
    return pop.individuals[a].genome < pop.individuals[b].genome;
  }
  return a < b;
}

void set_fitness(Individual& ind, double accuracy, double flops, double budget) {
  ind.fitness = Fitness{accuracy, flops};
  ind.violation = std::max(0.0, flops - budget);
  ind.feasible = flops <= budget;
}

// Best = feasible, highest accuracy, then fewer flops, then smaller genome.
const Individual* best_feasible(const std::vector<Individual>& individuals) {
  const Individual* best = nullptr;
  for (const auto& ind : individuals) {
    if (!ind.feasible || !ind.fitness) continue;
    if (best == nullptr) {
      best = &ind;
      continue;
    }
    const auto& f = *ind.fitness;
    const auto& fb = *best->fitness;
    if (f.accuracy > fb.accuracy ||
        (f.accuracy == fb.accuracy &&
         (f.flops < fb.flops || (f.flops == fb.flops && ind.genome < best->genome)))) {
      best = &ind;
    }
  }
  return best;
}

class EvaluationCache {
 public:
  EvaluationCache(const GenomeEvaluator& evaluator, const FlopsTable& table, double budget,
                  SearchLog& log)
      : evaluator_(evaluator), table_(table), budget_(budget), log_(log) {}

  // Fills every unset fitness in pop; new genomes are evaluated concurrently
  // and logged in population order.
  void evaluate(Population& pop) {
    std::vector<Genome> pending;
    for (const auto& ind : pop.individuals) {
      if (!ind.fitness && !cache_.contains(ind.genome) &&
          std::find(pending.begin(), pending.end(), ind.genome) == pending.end()) {
        pending.push_back(ind.genome);
      }
    }
    std::vector<double> scores(pending.size());
    const int n = static_cast<int>(pending.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = evaluator_(pending[static_cast<std::size_t>(i)]);
    }
    for (std::size_t i = 0; i < pending.size(); ++i) {
      cache_.emplace(pending[i], scores[i]);
      const double flops = table_.cost(pending[i]);
      log_.records.push_back({pop.generation, pending[i], scores[i], flops, flops <= budget_});
    }
    for (auto& ind : pop.individuals) {
      if (!ind.fitness) set_fitness(ind, cache_.at(ind.genome), table_.cost(ind.genome), budget_);
    }
  }

  double evaluate(const Genome& g, int generation) {
    auto it = cache_.find(g);
    if (it != cache_.end()) return it->second;
    const double score = evaluator_(g);
    cache_.emplace(g, score);
    const double flops = table_.cost(g);
    log_.records.push_back({generation, g, score, flops, flops <= budget_});
    return score;
  }

 private:
  const GenomeEvaluator& evaluator_;
  const FlopsTable& table_;
  double budget_;
  SearchLog& log_;
  std::map<Genome, double> cache_;
};

}  // namespace

void EvoConfig::validate() const {
  if (population_size < 1 || generations < 1 || parents_kept < 1 ||
      parents_kept > population_size) {
    throw std::invalid_argument("evo config: need 1 <= parents_kept <= population_size and "
                                "generations >= 1");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("evo config: eta must be positive");
  if (mutation_prob > 1.0) throw std::invalid_argument("evo config: mutation_prob must be <= 1");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) {
    throw std::invalid_argument("evo config: crossover_prob must be in [0, 1]");
  }
  if (tournament_size < 2) throw std::invalid_argument("evo config: tournament_size must be >= 2");
}

double EvoConfig::gene_mutation_prob(int num_layers) const {
  return mutation_prob > 0.0 ? mutation_prob : 1.0 / static_cast<double>(num_layers);
}

GenomeEvaluator supernet_evaluator(const SupernetWeights& weights, const Dataset& valset) {
  return [&weights, &valset](const Genome& g) {
    return evaluate_width(weights, weights.space.to_width(g), valset);
  };
}

bool constrained_dominates(const Individual& a, const Individual& b) {
  const auto& fa = fitness_of(a);
  const auto& fb = fitness_of(b);
  if (a.feasible && !b.feasible) return true;
  if (!a.feasible && b.feasible) return false;
  if (!a.feasible) return a.violation < b.violation;
  return pareto_dominates(fa, fb);
}

std::vector<std::vector<std::size_t>> nondominated_sort(const Population& pop) {
  const std::size_t n = pop.individuals.size();
  for (const auto& ind : pop.individuals) fitness_of(ind);
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<int> dominators(n, 0);
  std::vector<std::vector<std::size_t>> fronts(1);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (constrained_dominates(pop.individuals[p], pop.individuals[q])) {
        dominated[p].push_back(q);
      } else if (constrained_dominates(pop.individuals[q], pop.individuals[p])) {
        ++dominators[p];
      }
    }
    if (dominators[p] == 0) fronts[0].push_back(p);
  }
  while (!fronts.back().empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : fronts.back()) {
      for (std::size_t q : dominated[p]) {
        if (--dominators[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
  }
  fronts.pop_back();
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<Individual>& front) {
  const std::size_t n = front.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), kInf);
    return dist;
  }
  for (int objective = 0; objective < 2; ++objective) {
    auto value = [&](std::size_t i) {
      const auto& f = fitness_of(front[i]);
      return objective == 0 ? f.accuracy : f.flops;
    };
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    dist[order.front()] = kInf;
    dist[order.back()] = kInf;
    const double range = value(order.back()) - value(order.front());
    if (range <= 0.0) continue;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
    }
  }
  return dist;
}

RankedPopulation rank_population(const Population& pop) {
  RankedPopulation r;
  r.rank.assign(pop.size(), 0);
  r.crowding.assign(pop.size(), 0.0);
  const auto fronts = nondominated_sort(pop);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<Individual> members;
    for (std::size_t i : fronts[f]) members.push_back(pop.individuals[i]);
    const auto cd = crowding_distance(members);
    for (std::size_t k = 0; k < fronts[f].size(); ++k) {
      r.rank[fronts[f][k]] = static_cast<int>(f);
      r.crowding[fronts[f][k]] = cd[k];
    }
  }
  return r;
}

std::vector<std::size_t> tournament_select(const Population& pop, const RankedPopulation& ranked,
                                           const EvoConfig& config, Rng& rng) {
  const auto keep = static_cast<std::size_t>(config.parents_kept);
  if (pop.size() < keep) {
    throw std::invalid_argument("population smaller than parents_kept");
  }
  std::vector<std::size_t> pool(pop.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  const auto group = static_cast<std::size_t>(config.tournament_size);
  while (pool.size() > keep) {
    shuffle(pool, rng);
    std::size_t to_eliminate = pool.size() - keep;
    std::vector<std::size_t> next;
    std::size_t pos = 0;
    while (to_eliminate > 0 && pos < pool.size()) {
      const std::size_t m = std::min({group, to_eliminate + 1, pool.size() - pos});
      if (m < 2) break;
      std::size_t winner = pool[pos];
      for (std::size_t j = pos + 1; j < pos + m; ++j) {
        if (beats(pop, ranked, pool[j], winner)) winner = pool[j];
      }
      next.push_back(winner);
      to_eliminate -= m - 1;
      pos += m;
    }
    next.insert(next.end(), pool.begin() + static_cast<std::ptrdiff_t>(pos), pool.end());
    pool = std::move(next);
  }
  return pool;
}

CrossoverResult two_point_crossover(const Genome& a, const Genome& b, int p, int q) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover needs equal-length genomes");
  const int len = static_cast<int>(a.size());
  if (len < 2) return {a, b, true};
  if (p < 1 || p >= q || q > len) throw std::invalid_argument("crossover cuts need 1 <= p < q <= L");
  CrossoverResult r{a, b, false};
  for (int i = p; i < q; ++i) {
    std::swap(r.first[static_cast<std::size_t>(i)], r.second[static_cast<std::size_t>(i)]);
  }
  return r;
}

CrossoverResult two_point_crossover(const Genome& a, const Genome& b, Rng& rng) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover needs equal-length genomes");
  const int len = static_cast<int>(a.size());
  if (len < 2) return {a, b, true};
  int x = 0;
  int y = 0;
  do {
    x = uniform_int(rng, 1, len);
    y = uniform_int(rng, 1, len);
  } while (x == y);
  return two_point_crossover(a, b, std::min(x, y), std::max(x, y));
}

Genome polynomial_mutation(Genome genome, double eta, double prob, int k, Rng& rng) {
  if (!(eta > 0.0)) throw std::invalid_argument("mutation eta must be positive");
  if (k <= 1 || prob <= 0.0) return genome;
  const double lo = 1.0;
  const double hi = static_cast<double>(k);
  const double power = 1.0 / (eta + 1.0);
  for (int& gene : genome) {
    if (uniform01(rng) >= prob) continue;
    const double y = static_cast<double>(gene);
    const double delta1 = (y - lo) / (hi - lo);
    const double delta2 = (hi - y) / (hi - lo);
    const double u = uniform01(rng);
    double deltaq;
    if (u <= 0.5) {
      const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - delta1, eta + 1.0);
      deltaq = std::pow(val, power) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - delta2, eta + 1.0);
      deltaq = 1.0 - std::pow(val, power);
    }
    const double mutated = std::clamp(y + deltaq * (hi - lo), lo, hi);
    gene = std::clamp(static_cast<int>(std::lround(mutated)), 1, k);
  }
  return genome;
}

std::string SearchLog::to_csv() const {
  std::string out = "generation,genome,estimated_accuracy,flops,feasible\n";
  char buf[96];
  for (const auto& r : records) {
    out += std::to_string(r.generation);
    out += ',';
    for (std::size_t i = 0; i < r.genome.size(); ++i) {
      if (i > 0) out += ';';
      out += std::to_string(r.genome[i]);
    }
    std::snprintf(buf, sizeof buf, ",%.12g,%.12g,%d\n", r.accuracy, r.flops, r.feasible ? 1 : 0);
    out += buf;
  }
  return out;
}

std::uint64_t SearchLog::hash() const { return fnv1a(to_csv()); }

SearchResult evolve(const GenomeEvaluator& evaluator, const WidthSpace& space,
                    const FlopsTable& table, double flops_budget, Population init_pop,
                    const EvoConfig& config) {
  config.validate();
  if (init_pop.individuals.empty()) throw std::invalid_argument("empty initial population");
  Rng rng(derive_seed(config.seed, "evolve"));
  const double mutation_prob = config.gene_mutation_prob(space.num_layers());

  SearchResult result;
  EvaluationCache cache(evaluator, table, flops_budget, result.log);

  Population pop = std::move(init_pop);
  pop.generation = 0;
  for (auto& ind : pop.individuals) {
    if (!space.contains_genome(ind.genome)) {
      throw std::invalid_argument("initial population holds a genome outside the space");
    }
    if (table.cost(ind.genome) > flops_budget) {
      ind.genome = repair_to_budget(space, table, std::move(ind.genome), flops_budget);
    }
    ind.fitness.reset();
  }

  for (int gen = 0;; ++gen) {
    pop.generation = gen;
    cache.evaluate(pop);
    const Individual* best = best_feasible(pop.individuals);
    result.log.best_per_generation.push_back(best ? best->fitness->accuracy
                                                  : std::numeric_limits<double>::quiet_NaN());
    if (gen + 1 >= config.generations) break;

    const RankedPopulation ranked = rank_population(pop);
    EvoConfig select_config = config;
    select_config.parents_kept =
        std::min(config.parents_kept, static_cast<int>(pop.individuals.size()));
    const auto survivors = tournament_select(pop, ranked, select_config, rng);

    Population next;
    next.generation = gen + 1;
    for (std::size_t i : survivors) next.individuals.push_back(pop.individuals[i]);
    const auto target = static_cast<std::size_t>(config.population_size);
    while (next.individuals.size() < target) {
      const auto pick = [&]() {
        return survivors[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(survivors.size()) - 1))];
      };
      const std::size_t ia = pick();
      std::size_t ib = pick();
      for (int tries = 0; ib == ia && survivors.size() > 1 && tries < 16; ++tries) ib = pick();
      const Genome& a = pop.individuals[ia].genome;
      const Genome& b = pop.individuals[ib].genome;
      CrossoverResult children = uniform01(rng) < config.crossover_prob
                                     ? two_point_crossover(a, b, rng)
                                     : CrossoverResult{a, b, true};
      for (Genome* child : {&children.first, &children.second}) {
        if (next.individuals.size() >= target) break;
        Genome g = polynomial_mutation(std::move(*child), config.eta, mutation_prob,
                                       space.group_count(), rng);
        g = repair_to_budget(space, table, std::move(g), flops_budget);
        next.individuals.push_back(Individual{std::move(g), std::nullopt, true, 0.0});
      }
    }
    pop = std::move(next);
  }

  const Individual* best = best_feasible(pop.individuals);
  if (best == nullptr) throw InfeasibleError("no feasible individual in the final generation");
  result.best = *best;
  result.final_population = std::move(pop);
  return result;
}

SearchResult evolve(const SupernetWeights& weights, const FlopsTable& table, double flops_budget,
                    Population init_pop, const EvoConfig& config, const Dataset& valset) {
  return evolve(supernet_evaluator(weights, valset), weights.space, table, flops_budget,
                std::move(init_pop), config);
}

Individual greedy_search(const GenomeEvaluator& evaluator, const WidthSpace& space,
                         const FlopsTable& table, double flops_budget) {
  if (min_flops(space, table) > flops_budget) {
    throw InfeasibleError("flops budget " + std::to_string(flops_budget) +
                          " is below the minimum-width cost");
  }
  SearchLog scratch;
  EvaluationCache cache(evaluator, table, flops_budget, scratch);
  Genome current(static_cast<std::size_t>(space.num_layers()), space.group_count());
  double current_score = cache.evaluate(current, 0);
  int step = 0;
  while (table.cost(current) > flops_budget) {
    ++step;
    Genome best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (current[i] <= 1) continue;
      Genome candidate = current;
      --candidate[i];
      const double score = cache.evaluate(candidate, step);
      if (score > best_score) {
        best_score = score;
        best = std::move(candidate);
      }
    }
    current = std::move(best);
    current_score = best_score;
  }
  Individual out{current, std::nullopt, true, 0.0};
  set_fitness(out, current_score, table.cost(current), flops_budget);
  return out;
}

Individual greedy_search(const SupernetWeights& weights, const FlopsTable& table,
                         double flops_budget, const Dataset& valset) {
  return greedy_search(supernet_evaluator(weights, valset), weights.space, table, flops_budget);
}

}  // namespace bcnet
