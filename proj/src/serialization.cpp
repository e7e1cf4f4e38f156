#include "bcnet/serialization.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bcnet {

Json space_to_json(const WidthSpace& space) {
  Json layers = Json::array();
  for (const auto& l : space.layers()) {
    layers.push_back({{"max_channels", l.max_channels}, {"cost_multiplier", l.cost_multiplier}});
  }
  return {{"layers", layers},
          {"group_count", space.group_count()},
          {"input_dim", space.input_dim()},
          {"output_dim", space.output_dim()}};
}

WidthSpace space_from_json(const Json& j) {
  std::vector<LayerSpec> layers;
  for (const auto& l : j.at("layers")) {
    layers.push_back({l.at("max_channels").get<int>(), l.value("cost_multiplier", 1.0)});
  }
  return WidthSpace(std::move(layers), j.at("group_count").get<int>(),
                    j.at("input_dim").get<int>(), j.at("output_dim").get<int>());
}

Json width_to_json(const NetworkWidth& width) { return Json(width.channels); }

NetworkWidth width_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("width must be a JSON integer array");
  return NetworkWidth{j.get<std::vector<int>>()};
}

Json distribution_to_json(const SamplingDistribution& dist) { return {{"layers", dist.probs}}; }

SamplingDistribution distribution_from_json(const Json& j) {
  return {j.at("layers").get<std::vector<std::vector<double>>>()};
}

Json ledger_to_json(const LossLedger& ledger) {
  Json entries = Json::array();
  for (const auto& e : ledger.entries()) {
    entries.push_back({{"width", width_to_json(e.width)}, {"loss", e.loss}});
  }
  return {{"capacity", ledger.capacity()}, {"entries", entries}};
}

LossLedger ledger_from_json(const Json& j) {
  LossLedger ledger(j.at("capacity").get<std::size_t>());
  for (const auto& e : j.at("entries")) {
    ledger.record(width_from_json(e.at("width")), e.at("loss").get<double>());
  }
  return ledger;
}

Json counters_to_json(const UpdateCounters& counters) {
  auto spread = [](const std::vector<std::vector<std::int64_t>>& table) {
    Json out = Json::array();
    for (const auto& layer : table) {
      const auto [mn, mx] = std::minmax_element(layer.begin(), layer.end());
      out.push_back(layer.empty() ? 0 : *mx - *mn);
    }
    return out;
  };
  return {{"steps", counters.steps},
          {"clamped_pairs", counters.clamped_pairs},
          {"unclamped_pairs", counters.unclamped_pairs},
          {"counts", counters.counts},
          {"audited_counts", counters.audited},
          {"spread", spread(counters.counts)},
          {"audited_spread", spread(counters.audited)}};
}

Json population_to_json(const Population& pop, const WidthSpace& space) {
  Json members = Json::array();
  for (const auto& ind : pop.individuals) {
    Json m = {{"genome", ind.genome}, {"width", width_to_json(space.to_width(ind.genome))}};
    if (ind.fitness) {
      m["estimated_accuracy"] = ind.fitness->accuracy;
      m["flops"] = ind.fitness->flops;
    }
    members.push_back(std::move(m));
  }
  return {{"generation", pop.generation},
          {"dedup_relaxed", pop.dedup_relaxed},
          {"individuals", members}};
}

namespace {

constexpr char kMagic[4] = {'B', 'C', 'N', 'W'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw std::runtime_error("weights file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)]))
         << (8 * i);
  }
  pos += 4;
  return v;
}

void put_f32(std::string& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

double get_f32(const std::string& in, std::size_t& pos) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in, pos)));
}

}  // namespace

void save_weights(const SupernetWeights& weights, const std::filesystem::path& path,
                  const Json& provenance) {
  Json descriptor = {{"space", space_to_json(weights.space)}};
  for (const auto& [k, v] : provenance.items()) descriptor[k] = v;
  const std::string desc = descriptor.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kWeightsFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(desc.size()));
  out += desc;
  for (const auto& layer : weights.layers) {
    for (double v : layer.weight.data) put_f32(out, v);
    for (double v : layer.bias) put_f32(out, v);
  }
  write_text(path, out);
}

SupernetWeights load_weights(const std::filesystem::path& path) {
  const std::string in = read_text(path);
  if (in.size() < 12 || std::memcmp(in.data(), kMagic, 4) != 0) {
    throw std::runtime_error(path.string() + ": not a BCNW weights file");
  }
  std::size_t pos = 4;
  const std::uint32_t version = get_u32(in, pos);
  if (version != kWeightsFormatVersion) {
    throw std::runtime_error(path.string() + ": unsupported weights format version " +
                             std::to_string(version));
  }
  const std::uint32_t len = get_u32(in, pos);
  if (pos + len > in.size()) throw std::runtime_error(path.string() + ": truncated descriptor");
  const Json descriptor = Json::parse(in.substr(pos, len));
  pos += len;

  SupernetWeights w = init_supernet(space_from_json(descriptor.at("space")), 0);
  for (auto& layer : w.layers) {
    for (double& v : layer.weight.data) v = get_f32(in, pos);
    for (double& v : layer.bias) v = get_f32(in, pos);
  }
  if (pos != in.size()) throw std::runtime_error(path.string() + ": trailing bytes");
  return w;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace bcnet
