#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "bcnet/population.hpp"
#include "bcnet/prior_sampler.hpp"
#include "bcnet/supernet.hpp"
#include "bcnet/width_space.hpp"

namespace bcnet {

using Json = nlohmann::ordered_json;

// {layers:[{max_channels, cost_multiplier}], group_count, input_dim, output_dim}
Json space_to_json(const WidthSpace& space);
WidthSpace space_from_json(const Json& j);

// Plain integer array of channel counts.
Json width_to_json(const NetworkWidth& width);
NetworkWidth width_from_json(const Json& j);

// {layers:[[p, ...], ...]}
Json distribution_to_json(const SamplingDistribution& dist);
SamplingDistribution distribution_from_json(const Json& j);

Json ledger_to_json(const LossLedger& ledger);
LossLedger ledger_from_json(const Json& j);

Json counters_to_json(const UpdateCounters& counters);

Json population_to_json(const Population& pop, const WidthSpace& space);

// Versioned binary weights file:
//   "BCNW" | u32 version | u32 descriptor length | descriptor JSON |
//   per dense layer in declaration order: weight (row-major) then bias,
//   each as little-endian f32.
// The descriptor holds {"space": ..., plus any provenance fields}.
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

void save_weights(const SupernetWeights& weights, const std::filesystem::path& path,
                  const Json& provenance = Json::object());
SupernetWeights load_weights(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
// Truncates and rewrites the file.
void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace bcnet
