#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bcnet/dataset.hpp"
#include "bcnet/evo_search.hpp"
#include "bcnet/flops.hpp"
#include "bcnet/prior_sampler.hpp"
#include "bcnet/serialization.hpp"
#include "bcnet/supernet.hpp"

namespace bcnet {

enum class InitPopulation { Prior, Random };

struct FlopsBudget {
  bool is_fraction = true;
  double value = 0.5;

  double resolve(const WidthSpace& space, const FlopsTable& table) const;
};

struct AnalyzeOptions {
  bool rank_fidelity = true;
  std::uint64_t exhaustive_limit = 100'000;
  Strategy ua_strategy = Strategy::Plain;
  int histogram_population = 40;
};

// Everything a command needs, parsed from the JSON config file.
//
// {
//   "space":   {"layers": [{"max_channels": 16, "cost_multiplier": 1}, ...],
//               "group_count": 4, "input_dim": 16, "output_dim": 10},
//   "dataset": {"synthetic": {"num_classes": 10, "n_per_class": 300,
//                             "cluster_spread": 0.3, "modes_per_class": 1}}
//           or {"csv": {"train": "...", "val": "...", "test": "..."}},
//   "train":   {"epochs", "batch_size", "learning_rate", "schedule",
//               "weight_decay", "ledger_size"},
//   "retrain": same keys as "train" (defaults to "train"),
//   "pips":    {"max_iterations", "step_size", "penalty_weight",
//               "penalty_growth", "tolerance", "restore_threshold",
//               "rejection_limit"},
//   "evo":     {"population_size", "generations", "parents_kept", "eta",
//               "mutation_prob", "crossover_prob", "tournament_size"},
//   "flops_budget": {"fraction": 0.5} or {"absolute": 1234.0},
//   "principle": "BC" | "UA", "strategy": "complementary" | "plain",
//   "init_population": "prior" | "random",
//   "seed": 0, "output_dir": "out",
//   "analyze": {"rank_fidelity": true, "exhaustive_limit": 100000,
//               "ua_strategy": "plain", "histogram_population": 40},
//   "plot": {"histogram": "<csv>", "widths": ["<width json>", ...]}
// }
struct RunConfig {
  Json raw;  // effective config, including command-line overrides
  WidthSpace space{{LayerSpec{}}, 1, 1, 1};
  Json dataset;
  std::filesystem::path base_dir;  // relative dataset paths resolve here
  TrainConfig train;
  TrainConfig retrain;
  PipsConfig pips;
  int rejection_limit = 100;
  EvoConfig evo;
  FlopsBudget budget;
  Principle principle = Principle::BC;
  Strategy strategy = Strategy::Complementary;
  InitPopulation init_population = InitPopulation::Prior;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  AnalyzeOptions analyze;
  std::string config_hash;

  Json provenance() const;
};

RunConfig parse_run_config(Json raw, std::optional<std::uint64_t> seed_override = std::nullopt,
                           std::optional<std::filesystem::path> out_override = std::nullopt,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt,
                          std::optional<std::filesystem::path> out_override = std::nullopt);

DatasetSplits load_dataset(const RunConfig& config);

// Stage functions shared by the commands and the acceptance suite.
TrainResult run_training(const RunConfig& config, const DatasetSplits& data, Principle principle,
                         Strategy strategy);

struct SearchOutcome {
  Population initial;
  std::optional<PipsResult> pips;
  SearchResult search;
  double budget = 0.0;
};

Population build_initial_population(const RunConfig& config, const SupernetWeights& weights,
                                    const LossLedger& ledger, const FlopsTable& table,
                                    double budget, InitPopulation kind,
                                    std::optional<PipsResult>* pips_out = nullptr);

SearchOutcome run_search(const RunConfig& config, const SupernetWeights& weights,
                         const LossLedger& ledger, const DatasetSplits& data);

// Command entry points. Each writes its artifacts into config.output_dir and
// returns the paths written.
std::vector<std::filesystem::path> cmd_train(const RunConfig& config);
std::vector<std::filesystem::path> cmd_search(const RunConfig& config);
std::vector<std::filesystem::path> cmd_retrain(const RunConfig& config,
                                               const std::optional<std::filesystem::path>& width);
std::vector<std::filesystem::path> cmd_analyze(const RunConfig& config);
std::vector<std::filesystem::path> cmd_plot(const RunConfig& config,
                                            const std::optional<std::filesystem::path>& width);

}  // namespace bcnet
