// bcnet {train|search|retrain|analyze|plot} --config <path> [--out <dir>]
//       [--seed <u64>] [--width <path>]
//
// Prints the written artifact paths on stdout. On failure prints one JSON
// line {"error": <kind>, "message": <text>} on stderr and exits nonzero.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bcnet/errors.hpp"
#include "bcnet/pipeline.hpp"
#include "bcnet/prior_sampler.hpp"

namespace {

int fail(const char* kind, const std::string& message, int code = 1) {
  std::cerr << bcnet::Json{{"error", kind}, {"message", message}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network width search with a bilaterally coupled supernet"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> width_path;

  const char* commands[] = {"train", "search", "retrain", "analyze", "plot"};
  for (const char* name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "master seed (overrides seed)");
    if (std::string(name) == "retrain" || std::string(name) == "plot") {
      sub->add_option("--width", width_path, "width JSON file");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    std::optional<std::filesystem::path> out;
    if (out_dir) out = *out_dir;
    std::optional<std::filesystem::path> width;
    if (width_path) width = *width_path;
    const auto config = bcnet::load_run_config(config_path, seed, out);

    const std::string command = app.get_subcommands().front()->get_name();
    std::vector<std::filesystem::path> written;
    if (command == "train") {
      written = bcnet::cmd_train(config);
    } else if (command == "search") {
      written = bcnet::cmd_search(config);
    } else if (command == "retrain") {
      written = bcnet::cmd_retrain(config, width);
    } else if (command == "analyze") {
      written = bcnet::cmd_analyze(config);
    } else {
      written = bcnet::cmd_plot(config, width);
    }
    for (const auto& p : written) std::cout << p.string() << "\n";
    return 0;
  } catch (const bcnet::InfeasibleError& e) {
    return fail("infeasible", e.what());
  } catch (const bcnet::DivergenceError& e) {
    return fail("divergence", e.what());
  } catch (const bcnet::PipsConvergenceError& e) {
    return fail("convergence", e.what());
  } catch (const bcnet::Json::exception& e) {
    return fail("config", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_input", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
}
