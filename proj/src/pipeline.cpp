#include "bcnet/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bcnet/errors.hpp"
#include "bcnet/oracle.hpp"
#include "bcnet/rng.hpp"
#include "bcnet/svg.hpp"

namespace bcnet {

namespace fs = std::filesystem;

namespace {

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const Json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(std::string(section) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
        allowed.end()) {
      throw std::invalid_argument("unknown key '" + key + "' in " + section);
    }
  }
}

TrainConfig parse_train(const Json& j, const char* section, TrainConfig base) {
  check_keys(j, section,
             {"epochs", "batch_size", "learning_rate", "schedule", "weight_decay", "ledger_size"});
  read_field(j, "epochs", base.epochs);
  read_field(j, "batch_size", base.batch_size);
  read_field(j, "learning_rate", base.learning_rate);
  read_field(j, "weight_decay", base.weight_decay);
  read_field(j, "ledger_size", base.ledger_size);
  if (j.contains("schedule")) {
    const auto s = j.at("schedule").get<std::string>();
    if (s == "cosine") {
      base.schedule = LrSchedule::Cosine;
    } else if (s == "constant") {
      base.schedule = LrSchedule::Constant;
    } else {
      throw std::invalid_argument("unknown schedule '" + s + "'");
    }
  }
  base.validate();
  return base;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string provenance_line(const RunConfig& config) {
  return "# config_hash=" + config.config_hash + " seed=" + std::to_string(config.seed) + "\n";
}

Json with_provenance(const RunConfig& config, Json body) {
  Json out = config.provenance();
  for (auto& [key, value] : body.items()) out[key] = std::move(value);
  return out;
}

void ensure_output_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir)) {
    throw std::runtime_error("cannot create output directory " + config.output_dir.string());
  }
}

fs::path require_artifact(const RunConfig& config, const char* name, const char* producer) {
  const fs::path p = config.output_dir / name;
  if (!fs::exists(p)) {
    throw std::runtime_error("missing artifact " + p.string() + " (run '" + producer + "' first)");
  }
  return p;
}

struct TrainedState {
  SupernetWeights weights;
  LossLedger ledger;
};

TrainedState load_trained(const RunConfig& config) {
  auto weights = load_weights(require_artifact(config, "weights.bcnw", "train"));
  if (!(weights.space == config.space)) {
    throw std::invalid_argument("weights file space does not match the config space");
  }
  const Json ledger_json = read_json(require_artifact(config, "ledger.json", "train"));
  return {std::move(weights), ledger_from_json(ledger_json.at("ledger"))};
}

std::string genome_string(const Genome& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(g[i]);
  }
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Json retrain_entry(const WidthSpace& space, const NetworkWidth& width, const FlopsTable& table,
                   const DatasetSplits& data, const TrainConfig& config) {
  const auto result = retrain_from_scratch(space, width, data, config);
  Json j;
  j["width"] = width_to_json(width);
  j["flops"] = table.cost(width);
  j["params"] = result.weights.parameter_count();
  j["test_accuracy"] = result.test_accuracy;
  j["val_accuracy"] = result.val_accuracy;
  return j;
}

void check_exhaustive_size(const RunConfig& config) {
  const auto size = config.space.size();
  if (!size.exact || *size.exact > config.analyze.exhaustive_limit) {
    throw std::invalid_argument("space has 10^" + fmt(size.log10) +
                                " widths; exhaustive analysis is limited to " +
                                std::to_string(config.analyze.exhaustive_limit));
  }
}

std::vector<Genome> all_genomes(const WidthSpace& space) {
  std::vector<Genome> out;
  Genome g(static_cast<std::size_t>(space.num_layers()), 1);
  for (;;) {
    out.push_back(g);
    int pos = space.num_layers() - 1;
    while (pos >= 0 && g[static_cast<std::size_t>(pos)] == space.group_count()) {
      g[static_cast<std::size_t>(pos)] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++g[static_cast<std::size_t>(pos)];
  }
  return out;
}

}  // namespace

double FlopsBudget::resolve(const WidthSpace& space, const FlopsTable& table) const {
  if (!(value > 0.0)) throw std::invalid_argument("flops budget must be positive");
  const double b = is_fraction ? value * full_flops(space, table) : value;
  if (b < min_flops(space, table)) {
    throw InfeasibleError("flops budget " + fmt(b) + " is below the minimum width cost " +
                          fmt(min_flops(space, table)));
  }
  return b;
}

Json RunConfig::provenance() const {
  Json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  return j;
}

RunConfig parse_run_config(Json raw, std::optional<std::uint64_t> seed_override,
                           std::optional<fs::path> out_override, const fs::path& base_dir) {
  check_keys(raw, "config",
             {"space", "dataset", "train", "retrain", "pips", "evo", "flops_budget", "principle",
              "strategy", "init_population", "seed", "output_dir", "analyze", "plot"});
  if (!raw.contains("space")) throw std::invalid_argument("config needs a 'space' section");
  if (seed_override) raw["seed"] = *seed_override;
  if (out_override) raw["output_dir"] = out_override->string();

  RunConfig c;
  c.raw = raw;
  c.base_dir = base_dir;
  c.space = space_from_json(raw.at("space"));
  c.seed = raw.value("seed", std::uint64_t{0});
  c.output_dir = raw.value("output_dir", std::string("out"));
  if (c.output_dir.is_relative() && !out_override) c.output_dir = base_dir / c.output_dir;

  c.dataset = raw.value("dataset", Json{{"synthetic", Json::object()}});
  if (c.dataset.contains("synthetic") == c.dataset.contains("csv")) {
    throw std::invalid_argument("dataset needs exactly one of 'synthetic' or 'csv'");
  }

  c.train = parse_train(raw.value("train", Json::object()), "train", TrainConfig{});
  c.train.seed = derive_seed(c.seed, "train");
  c.retrain = parse_train(raw.value("retrain", Json::object()), "retrain", c.train);
  c.retrain.seed = derive_seed(c.seed, "retrain");

  const Json pips = raw.value("pips", Json::object());
  check_keys(pips, "pips",
             {"max_iterations", "step_size", "penalty_weight", "penalty_growth", "tolerance",
              "restore_threshold", "rejection_limit"});
  read_field(pips, "max_iterations", c.pips.max_iterations);
  read_field(pips, "step_size", c.pips.step_size);
  read_field(pips, "penalty_weight", c.pips.penalty_weight);
  read_field(pips, "penalty_growth", c.pips.penalty_growth);
  read_field(pips, "tolerance", c.pips.tolerance);
  read_field(pips, "restore_threshold", c.pips.restore_threshold);
  read_field(pips, "rejection_limit", c.rejection_limit);
  c.pips.seed = derive_seed(c.seed, "pips");
  c.pips.validate();
  if (c.rejection_limit < 0) throw std::invalid_argument("rejection_limit must be >= 0");

  const Json evo = raw.value("evo", Json::object());
  check_keys(evo, "evo",
             {"population_size", "generations", "parents_kept", "eta", "mutation_prob",
              "crossover_prob", "tournament_size"});
  read_field(evo, "population_size", c.evo.population_size);
  read_field(evo, "generations", c.evo.generations);
  read_field(evo, "parents_kept", c.evo.parents_kept);
  read_field(evo, "eta", c.evo.eta);
  read_field(evo, "mutation_prob", c.evo.mutation_prob);
  read_field(evo, "crossover_prob", c.evo.crossover_prob);
  read_field(evo, "tournament_size", c.evo.tournament_size);
  c.evo.seed = derive_seed(c.seed, "evolve");
  c.evo.validate();

  if (raw.contains("flops_budget")) {
    const Json& b = raw.at("flops_budget");
    check_keys(b, "flops_budget", {"fraction", "absolute"});
    if (b.contains("fraction") == b.contains("absolute")) {
      throw std::invalid_argument("flops_budget needs exactly one of 'fraction' or 'absolute'");
    }
    c.budget.is_fraction = b.contains("fraction");
    c.budget.value = c.budget.is_fraction ? b.at("fraction").get<double>()
                                          : b.at("absolute").get<double>();
    if (c.budget.is_fraction && !(c.budget.value > 0.0 && c.budget.value <= 1.0)) {
      throw std::invalid_argument("flops_budget fraction must lie in (0, 1]");
    }
  }
  c.budget.resolve(c.space, build_flops_table(c.space));

  c.principle = parse_principle(raw.value("principle", std::string("BC")));
  c.strategy = parse_strategy(raw.value("strategy", std::string("complementary")));
  const auto init = raw.value("init_population", std::string("prior"));
  if (init == "prior") {
    c.init_population = InitPopulation::Prior;
  } else if (init == "random") {
    c.init_population = InitPopulation::Random;
  } else {
    throw std::invalid_argument("init_population must be 'prior' or 'random'");
  }

  const Json analyze = raw.value("analyze", Json::object());
  check_keys(analyze, "analyze",
             {"rank_fidelity", "exhaustive_limit", "ua_strategy", "histogram_population"});
  read_field(analyze, "rank_fidelity", c.analyze.rank_fidelity);
  read_field(analyze, "exhaustive_limit", c.analyze.exhaustive_limit);
  read_field(analyze, "histogram_population", c.analyze.histogram_population);
  if (analyze.contains("ua_strategy")) {
    c.analyze.ua_strategy = parse_strategy(analyze.at("ua_strategy").get<std::string>());
  }
  if (c.analyze.histogram_population < 1) {
    throw std::invalid_argument("histogram_population must be >= 1");
  }

  // The output location does not change any result, so it stays out of the hash.
  Json hashed = raw;
  hashed.erase("output_dir");
  c.config_hash = hex64(fnv1a(hashed.dump()));
  return c;
}

RunConfig load_run_config(const fs::path& path, std::optional<std::uint64_t> seed_override,
                          std::optional<fs::path> out_override) {
  return parse_run_config(read_json(path), seed_override, std::move(out_override),
                          path.parent_path());
}

DatasetSplits load_dataset(const RunConfig& config) {
  DatasetSplits data;
  const int classes = config.space.output_dim();
  if (config.dataset.contains("synthetic")) {
    const Json& s = config.dataset.at("synthetic");
    check_keys(s, "dataset.synthetic",
               {"num_classes", "input_dim", "n_per_class", "cluster_spread", "modes_per_class",
                "seed"});
    SynthParams p;
    p.num_classes = classes;
    p.input_dim = config.space.input_dim();
    read_field(s, "n_per_class", p.n_per_class);
    read_field(s, "cluster_spread", p.cluster_spread);
    read_field(s, "modes_per_class", p.modes_per_class);
    p.seed = s.contains("seed") ? s.at("seed").get<std::uint64_t>()
                                : derive_seed(config.seed, "dataset");
    if (s.value("num_classes", classes) != classes || s.value("input_dim", p.input_dim) != p.input_dim) {
      throw std::invalid_argument("synthetic dataset dimensions disagree with the space");
    }
    data = synth_dataset(p);
  } else {
    const Json& s = config.dataset.at("csv");
    check_keys(s, "dataset.csv", {"train", "val", "test"});
    auto resolve = [&](const char* key) {
      fs::path p = s.at(key).get<std::string>();
      return p.is_relative() ? config.base_dir / p : p;
    };
    data.train = read_csv(resolve("train"), classes);
    data.val = read_csv(resolve("val"), classes);
    data.test = read_csv(resolve("test"), classes);
  }
  for (const Dataset* d : {&data.train, &data.val, &data.test}) {
    if (d->empty()) throw std::invalid_argument("dataset split is empty");
    if (d->input_dim() != config.space.input_dim()) {
      throw std::invalid_argument("dataset feature count disagrees with the space input_dim");
    }
  }
  return data;
}

TrainResult run_training(const RunConfig& config, const DatasetSplits& data, Principle principle,
                         Strategy strategy) {
  auto init = init_supernet(config.space, derive_seed(config.seed, "supernet-init"));
  return train_supernet(std::move(init), data.train, config.train, strategy, principle);
}

Population build_initial_population(const RunConfig& config, const SupernetWeights& weights,
                                    const LossLedger& ledger, const FlopsTable& table,
                                    double budget, InitPopulation kind,
                                    std::optional<PipsResult>* pips_out) {
  const std::uint64_t seed = derive_seed(config.seed, "population");
  const int size = config.evo.population_size;
  Population pop;
  if (kind == InitPopulation::Prior) {
    const auto e = potential_errors(ledger, weights.space);
    PipsResult pips;
    try {
      pips = optimize_distribution(e, table, budget, config.pips);
    } catch (const PipsConvergenceError& err) {
      std::cerr << "warning: " << err.what() << "; using the best iterate\n";
      pips = err.best();
    }
    pop = initial_population(pips.distribution, weights.space, table, budget, size,
                             config.rejection_limit, seed);
    if (pips_out) *pips_out = std::move(pips);
  } else {
    pop = random_population(weights.space, table, budget, size, config.rejection_limit, seed);
  }
  if (pop.dedup_relaxed) {
    std::cerr << "warning: initial population contains duplicate widths\n";
  }
  return pop;
}

SearchOutcome run_search(const RunConfig& config, const SupernetWeights& weights,
                         const LossLedger& ledger, const DatasetSplits& data) {
  const auto table = build_flops_table(weights.space);
  SearchOutcome out;
  out.budget = config.budget.resolve(weights.space, table);
  out.initial = build_initial_population(config, weights, ledger, table, out.budget,
                                         config.init_population, &out.pips);
  out.search = evolve(weights, table, out.budget, out.initial, config.evo, data.val);
  return out;
}

std::vector<fs::path> cmd_train(const RunConfig& config) {
  ensure_output_dir(config);
  const auto data = load_dataset(config);
  const auto result = run_training(config, data, config.principle, config.strategy);

  Json meta = config.provenance();
  meta["principle"] = std::string(to_string(config.principle));
  meta["strategy"] = std::string(to_string(config.strategy));

  const fs::path weights_path = config.output_dir / "weights.bcnw";
  save_weights(result.weights, weights_path, meta);

  const fs::path ledger_path = config.output_dir / "ledger.json";
  Json ledger = meta;
  ledger["ledger"] = ledger_to_json(result.ledger);
  write_json(ledger_path, ledger);

  const fs::path counters_path = config.output_dir / "counters.json";
  Json counters = meta;
  counters["counters"] = counters_to_json(result.counters);
  write_json(counters_path, counters);
  return {weights_path, ledger_path, counters_path};
}

std::vector<fs::path> cmd_search(const RunConfig& config) {
  ensure_output_dir(config);
  const auto [weights, ledger] = load_trained(config);
  const auto data = load_dataset(config);
  const auto outcome = run_search(config, weights, ledger, data);
  const auto& best = outcome.search.best;
  const auto best_width = config.space.to_width(best.genome);

  std::vector<fs::path> written;
  const fs::path best_path = config.output_dir / "best_width.json";
  write_json(best_path, width_to_json(best_width));
  written.push_back(best_path);

  const fs::path log_path = config.output_dir / "search_log.csv";
  write_text(log_path, provenance_line(config) + outcome.search.log.to_csv());
  written.push_back(log_path);

  const fs::path init_path = config.output_dir / "initial_population.json";
  write_json(init_path, with_provenance(config, {{"init_population",
                                                   config.init_population == InitPopulation::Prior
                                                       ? "prior"
                                                       : "random"},
                                                  {"population", population_to_json(
                                                                     outcome.initial,
                                                                     config.space)}}));
  written.push_back(init_path);

  if (outcome.pips) {
    const fs::path dist_path = config.output_dir / "pips_distribution.json";
    Json dist = with_provenance(config, distribution_to_json(outcome.pips->distribution));
    dist["objective"] = outcome.pips->objective;
    dist["expected_flops"] = outcome.pips->expected_flops;
    dist["constraint_residual"] = outcome.pips->constraint_residual;
    write_json(dist_path, dist);
    written.push_back(dist_path);

    const fs::path pips_log = config.output_dir / "pips_log.csv";
    std::string csv = provenance_line(config) + "iteration,objective,constraint_residual,step_size\n";
    for (const auto& it : outcome.pips->log) {
      csv += std::to_string(it.iteration) + "," + fmt(it.objective) + "," +
             fmt(it.constraint_residual) + "," + fmt(it.step_size) + "\n";
    }
    write_text(pips_log, csv);
    written.push_back(pips_log);
  }

  const fs::path summary_path = config.output_dir / "search_summary.json";
  Json summary = config.provenance();
  summary["budget"] = outcome.budget;
  summary["full_flops"] = full_flops(config.space, build_flops_table(config.space));
  summary["best_width"] = width_to_json(best_width);
  summary["best_genome"] = best.genome;
  summary["estimated_accuracy"] = best.fitness ? best.fitness->accuracy : 0.0;
  summary["flops"] = best.fitness ? best.fitness->flops : 0.0;
  summary["evaluations"] = outcome.search.log.records.size();
  summary["best_per_generation"] = outcome.search.log.best_per_generation;
  summary["log_hash"] = hex64(outcome.search.log.hash());
  write_json(summary_path, summary);
  written.push_back(summary_path);
  return written;
}

std::vector<fs::path> cmd_retrain(const RunConfig& config,
                                  const std::optional<fs::path>& width) {
  ensure_output_dir(config);
  const fs::path width_path =
      width ? *width : require_artifact(config, "best_width.json", "search");
  const auto w = width_from_json(read_json(width_path));
  if (!config.space.contains(w)) {
    throw std::invalid_argument("width " + width_path.string() + " is not in the space");
  }
  const auto data = load_dataset(config);
  const auto table = build_flops_table(config.space);
  const double budget = config.budget.resolve(config.space, table);

  Json report = config.provenance();
  report["budget"] = budget;
  report["full_flops"] = full_flops(config.space, table);
  report["searched"] = retrain_entry(config.space, w, table, data, config.retrain);
  report["uniform_baseline"] = retrain_entry(
      config.space, uniform_scale_width(config.space, budget, table), table, data, config.retrain);
  const fs::path out = config.output_dir / "retrain_report.json";
  write_json(out, report);
  return {out};
}

std::vector<fs::path> cmd_analyze(const RunConfig& config) {
  if (config.analyze.rank_fidelity) check_exhaustive_size(config);
  ensure_output_dir(config);
  std::vector<fs::path> written;

  std::set<int> widths;
  for (const auto& l : config.space.layers()) widths.insert(l.max_channels);
  Json tables = Json::array();
  for (int l : widths) {
    const auto ua = oracle::enumerate_cardinalities(l, Principle::UA);
    const auto bc = oracle::enumerate_cardinalities(l, Principle::BC);
    bool consistent = true;
    for (int c = 1; c <= l; ++c) {
      consistent = consistent && ua[static_cast<std::size_t>(c - 1)] == cardinality_ua(l, c) &&
                   bc[static_cast<std::size_t>(c - 1)] == cardinality_bc(l, c);
    }
    tables.push_back({{"l", l}, {"UA", ua}, {"BC", bc}, {"matches_closed_form", consistent}});
  }
  const fs::path card_path = config.output_dir / "cardinality.json";
  write_json(card_path, with_provenance(config, {{"tables", tables}}));
  written.push_back(card_path);

  const fs::path counters_path = config.output_dir / "counters.json";
  if (fs::exists(counters_path)) {
    const Json report = read_json(counters_path);
    const auto principle = parse_principle(report.at("principle").get<std::string>());
    const auto strategy = parse_strategy(report.at("strategy").get<std::string>());
    const Json& counters = report.at("counters");
    const auto steps = counters.at("steps").get<std::int64_t>();
    const double samples =
        strategy == Strategy::Complementary ? static_cast<double>(steps) / 2.0 : steps;
    Json layers = Json::array();
    bool fair = true;
    for (int i = 0; i < config.space.num_layers(); ++i) {
      const auto counts = counters.at("counts").at(i).get<std::vector<std::int64_t>>();
      const auto audited = counters.at("audited_counts").at(i).get<std::vector<std::int64_t>>();
      const auto expected = oracle::expected_update_profile(config.space, i, principle, strategy);
      const auto [amin, amax] = std::minmax_element(audited.begin(), audited.end());
      std::vector<double> observed;
      double deviation = 0.0;
      for (std::size_t ch = 0; ch < counts.size(); ++ch) {
        observed.push_back(samples > 0 ? static_cast<double>(counts[ch]) / samples : 0.0);
        deviation = std::max(deviation, std::abs(observed.back() - expected[ch]));
      }
      fair = fair && *amin == *amax;
      layers.push_back({{"layer", i},
                        {"audited_spread", *amax - *amin},
                        {"expected_profile", expected},
                        {"observed_profile", observed},
                        {"max_profile_deviation", deviation}});
    }
    const fs::path audit_path = config.output_dir / "fairness_audit.json";
    write_json(audit_path, with_provenance(config, {{"principle", std::string(to_string(principle))},
                                                    {"strategy", std::string(to_string(strategy))},
                                                    {"steps", steps},
                                                    {"clamped_pairs", counters.at("clamped_pairs")},
                                                    {"fair_on_audited_updates", fair},
                                                    {"layers", layers}}));
    written.push_back(audit_path);
  }

  const bool trained = fs::exists(config.output_dir / "weights.bcnw") &&
                       fs::exists(config.output_dir / "ledger.json");
  std::optional<DatasetSplits> data;
  auto dataset = [&]() -> const DatasetSplits& {
    if (!data) data = load_dataset(config);
    return *data;
  };

  if (config.analyze.rank_fidelity) {
    const auto genomes = all_genomes(config.space);
    std::vector<double> truth;
    for (const auto& g : genomes) {
      truth.push_back(
          retrain_from_scratch(config.space, config.space.to_width(g), dataset(), config.retrain)
              .test_accuracy);
    }
    Json principles = Json::object();
    const std::pair<Principle, Strategy> setups[] = {
        {Principle::BC, Strategy::Complementary}, {Principle::UA, config.analyze.ua_strategy}};
    for (const auto& [principle, strategy] : setups) {
      const auto trained_net = run_training(config, dataset(), principle, strategy);
      std::vector<double> estimates;
      for (const auto& g : genomes) {
        estimates.push_back(estimate_accuracy(trained_net.weights, config.space.to_width(g),
                                              dataset().val, principle));
      }
      Json entry;
      entry["strategy"] = std::string(to_string(strategy));
      entry["estimates"] = estimates;
      try {
        entry["kendall_tau"] = oracle::kendall_tau(estimates, truth);
      } catch (const std::invalid_argument& e) {
        entry["kendall_tau"] = nullptr;
        entry["kendall_tau_error"] = e.what();
      }
      principles[std::string(to_string(principle))] = entry;
    }
    Json ws = Json::array();
    for (const auto& g : genomes) ws.push_back(width_to_json(config.space.to_width(g)));
    const fs::path rank_path = config.output_dir / "rank_fidelity.json";
    write_json(rank_path, with_provenance(config, {{"widths", ws},
                                                   {"ground_truth_test_accuracy", truth},
                                                   {"principles", principles}}));
    written.push_back(rank_path);
  }

  if (trained) {
    const auto [weights, ledger] = load_trained(config);
    const auto table = build_flops_table(config.space);
    const double budget = config.budget.resolve(config.space, table);
    RunConfig sized = config;
    sized.evo.population_size = config.analyze.histogram_population;
    std::string csv = provenance_line(config) + "series,genome,estimated_accuracy,flops\n";
    for (const auto kind : {InitPopulation::Prior, InitPopulation::Random}) {
      const auto pop = build_initial_population(sized, weights, ledger, table, budget, kind);
      const char* label = kind == InitPopulation::Prior ? "prior" : "random";
      for (const auto& ind : pop.individuals) {
        const auto w = config.space.to_width(ind.genome);
        csv += std::string(label) + "," + genome_string(ind.genome) + "," +
               fmt(estimate_accuracy(weights, w, dataset().val, config.principle)) + "," +
               fmt(table.cost(w)) + "\n";
      }
    }
    const fs::path hist_path = config.output_dir / "population_histogram.csv";
    write_text(hist_path, csv);
    written.push_back(hist_path);
  }
  return written;
}

namespace {

std::vector<svg::Series> read_histogram_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::map<std::string, std::vector<double>> by_label;
  std::vector<std::string> order;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "series,genome,estimated_accuracy,flops") {
        throw std::invalid_argument("malformed histogram report " + path.string());
      }
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw std::invalid_argument("malformed row in " + path.string());
    double v = 0.0;
    try {
      v = std::stod(cells[2]);
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed accuracy in " + path.string());
    }
    if (!by_label.count(cells[0])) order.push_back(cells[0]);
    by_label[cells[0]].push_back(v);
  }
  if (!header) throw std::invalid_argument("malformed histogram report " + path.string());
  std::vector<svg::Series> series;
  for (const auto& label : order) series.push_back({label, by_label[label]});
  if (series.empty()) throw std::invalid_argument("histogram report has no series");
  return series;
}

}  // namespace

std::vector<fs::path> cmd_plot(const RunConfig& config, const std::optional<fs::path>& width) {
  const Json plot = config.raw.value("plot", Json::object());
  check_keys(plot, "plot", {"histogram", "widths"});
  auto resolve = [&](const std::string& p) {
    fs::path path = p;
    return path.is_relative() ? config.base_dir / path : path;
  };

  std::optional<fs::path> histogram;
  if (plot.contains("histogram")) {
    histogram = resolve(plot.at("histogram").get<std::string>());
  } else if (fs::exists(config.output_dir / "population_histogram.csv")) {
    histogram = config.output_dir / "population_histogram.csv";
  }
  std::vector<fs::path> widths;
  if (width) {
    widths.push_back(*width);
  } else if (plot.contains("widths")) {
    for (const auto& p : plot.at("widths")) widths.push_back(resolve(p.get<std::string>()));
  } else if (fs::exists(config.output_dir / "best_width.json")) {
    widths.push_back(config.output_dir / "best_width.json");
  }
  if (!histogram && widths.empty()) {
    throw std::invalid_argument("nothing to plot: no histogram report or width file");
  }

  // Render everything before writing so a malformed input leaves no files.
  std::vector<std::pair<fs::path, std::string>> documents;
  const std::string comment = "config_hash=" + config.config_hash +
                              " seed=" + std::to_string(config.seed);
  if (histogram) {
    documents.emplace_back(config.output_dir / "histogram.svg",
                           svg::histogram(read_histogram_csv(*histogram), 12,
                                          "Initial population: estimated accuracy",
                                          "estimated accuracy", comment));
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const auto w = width_from_json(read_json(widths[i]));
    if (!config.space.contains(w)) {
      throw std::invalid_argument("width " + widths[i].string() + " is not in the space");
    }
    std::vector<double> ratios;
    for (int l = 0; l < config.space.num_layers(); ++l) {
      ratios.push_back(static_cast<double>(w.channels[static_cast<std::size_t>(l)]) /
                       config.space.layer(l).max_channels);
    }
    const std::string name =
        widths.size() == 1 ? "width_ratio.svg" : "width_ratio_" + std::to_string(i) + ".svg";
    documents.emplace_back(config.output_dir / name,
                           svg::width_ratio_bars(ratios, "Retained width ratio per layer",
                                                 comment + " width=" + widths[i].filename().string()));
  }
  ensure_output_dir(config);
  std::vector<fs::path> written;
  for (const auto& [path, text] : documents) {
    write_text(path, text);
    written.push_back(path);
  }
  return written;
}

}  // namespace bcnet
