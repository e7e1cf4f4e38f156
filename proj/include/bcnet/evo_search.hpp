#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bcnet/flops.hpp"
#include "bcnet/population.hpp"
#include "bcnet/rng.hpp"
#include "bcnet/supernet.hpp"
#include "bcnet/width_space.hpp"

namespace bcnet {

struct EvoConfig {
  int population_size = 40;
  int generations = 50;
  int parents_kept = 10;
  double eta = 20.0;               // polynomial-mutation distribution index
  double mutation_prob = -1.0;     // per gene; <= 0 means 1 / L
  double crossover_prob = 1.0;
  int tournament_size = 2;
  std::uint64_t seed = 0;

  void validate() const;
  double gene_mutation_prob(int num_layers) const;
};

// Estimated accuracy of a genome. Must be thread-safe and deterministic:
// a search evaluates the unevaluated members of a generation concurrently.
using GenomeEvaluator = std::function<double(const Genome&)>;

// Bilateral supernet accuracy on `valset` (the weights must stay frozen).
GenomeEvaluator supernet_evaluator(const SupernetWeights& weights, const Dataset& valset);

// Feasibility-first domination: a feasible individual dominates an infeasible
// one, a smaller violation dominates a larger one, and feasible individuals
// compare by Pareto domination on (max accuracy, min flops).
bool constrained_dominates(const Individual& a, const Individual& b);

// Fronts of indices into pop.individuals, best front first. Throws
// std::invalid_argument when a fitness is unset.
std::vector<std::vector<std::size_t>> nondominated_sort(const Population& pop);

std::vector<double> crowding_distance(const std::vector<Individual>& front);

// Rank and crowding distance of every individual, as nondominated_sort and
// crowding_distance assign them.
struct RankedPopulation {
  std::vector<int> rank;
  std::vector<double> crowding;
};
RankedPopulation rank_population(const Population& pop);

// Knockout tournaments: contestants are drawn without replacement in groups
// of tournament_size, and the winner of each group (lower rank, then larger
// crowding distance, then higher accuracy, then smaller genome) stays in the
// pool until only parents_kept remain. Returns indices into pop.individuals.
std::vector<std::size_t> tournament_select(const Population& pop, const RankedPopulation& ranked,
                                           const EvoConfig& config, Rng& rng);

struct CrossoverResult {
  Genome first;
  Genome second;
  bool noop = false;  // set when the genomes are too short to cut
};

// Swaps positions [p, q) with 1 <= p < q <= L drawn uniformly.
CrossoverResult two_point_crossover(const Genome& a, const Genome& b, Rng& rng);
// Same with explicit cut points.
CrossoverResult two_point_crossover(const Genome& a, const Genome& b, int p, int q);

// Bounded polynomial mutation on the continuous relaxation [1, K], then
// rounding to the nearest group index.
Genome polynomial_mutation(Genome genome, double eta, double prob, int k, Rng& rng);

struct SearchRecord {
  int generation = 0;
  Genome genome;
  double accuracy = 0.0;
  double flops = 0.0;
  bool feasible = true;
  bool operator==(const SearchRecord&) const = default;
};

struct SearchLog {
  std::vector<SearchRecord> records;
  // Best feasible estimated accuracy of each generation's population.
  std::vector<double> best_per_generation;

  std::string to_csv() const;
  std::uint64_t hash() const;
};

struct SearchResult {
  Individual best;
  SearchLog log;
  Population final_population;
};

// NSGA-II style search under a hard flops budget. Every generation is
// evaluated (each genome at most once per run), ranked, and reduced to
// parents_kept survivors by tournament; the next generation is the survivors
// plus two-point-crossover and polynomial-mutation offspring repaired to the
// budget. Returns the feasible individual with the highest estimated accuracy
// in the final generation.
SearchResult evolve(const GenomeEvaluator& evaluator, const WidthSpace& space,
                    const FlopsTable& table, double flops_budget, Population init_pop,
                    const EvoConfig& config);

SearchResult evolve(const SupernetWeights& weights, const FlopsTable& table, double flops_budget,
                    Population init_pop, const EvoConfig& config, const Dataset& valset);

// Starts from the full width and repeatedly applies the single-layer,
// single-group decrement with the highest estimated accuracy until the
// budget is met.
Individual greedy_search(const GenomeEvaluator& evaluator, const WidthSpace& space,
                         const FlopsTable& table, double flops_budget);

Individual greedy_search(const SupernetWeights& weights, const FlopsTable& table,
                         double flops_budget, const Dataset& valset);

}  // namespace bcnet
