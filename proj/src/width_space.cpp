#include "bcnet/width_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcnet {

namespace {

void check_channel(int l, int c) {
  if (l < 1 || c < 1 || c > l) {
    throw std::invalid_argument("channel count " + std::to_string(c) + " outside [1, " +
                                std::to_string(l) + "]");
  }
}

}  // namespace

WidthSpace::WidthSpace(std::vector<LayerSpec> layers, int group_count, int input_dim,
                       int output_dim)
    : layers_(std::move(layers)),
      group_count_(group_count),
      input_dim_(input_dim),
      output_dim_(output_dim) {
  if (layers_.empty()) throw std::invalid_argument("width space needs at least one layer");
  if (group_count_ < 1) throw std::invalid_argument("group count must be >= 1");
  if (input_dim_ < 1 || output_dim_ < 1) {
    throw std::invalid_argument("input_dim and output_dim must be >= 1");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    const std::string name = "layer " + std::to_string(i);
    if (spec.max_channels < 1) throw std::invalid_argument(name + ": max_channels must be >= 1");
    if (!(spec.cost_multiplier > 0.0) || !std::isfinite(spec.cost_multiplier)) {
      throw std::invalid_argument(name + ": cost_multiplier must be positive");
    }
    if (spec.max_channels % group_count_ != 0) {
      throw std::invalid_argument(name + ": max_channels " + std::to_string(spec.max_channels) +
                                  " is not divisible by group count " +
                                  std::to_string(group_count_));
    }
  }
}

std::vector<int> WidthSpace::options(int layer) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(group_count_));
  for (int g = 1; g <= group_count_; ++g) out.push_back(channels_for(layer, g));
  return out;
}

SpaceSize WidthSpace::size() const {
  SpaceSize s;
  s.log10 = num_layers() * std::log10(static_cast<double>(group_count_));
  std::uint64_t acc = 1;
  const auto k = static_cast<std::uint64_t>(group_count_);
  for (int i = 0; i < num_layers(); ++i) {
    if (acc > static_cast<std::uint64_t>(INT64_MAX) / k) return s;
    acc *= k;
  }
  s.exact = acc;
  return s;
}

NetworkWidth WidthSpace::full_width() const {
  NetworkWidth w;
  for (const auto& l : layers_) w.channels.push_back(l.max_channels);
  return w;
}

NetworkWidth WidthSpace::min_width() const {
  NetworkWidth w;
  for (int i = 0; i < num_layers(); ++i) w.channels.push_back(group_size(i));
  return w;
}

Genome WidthSpace::to_genome(const NetworkWidth& width) const {
  if (!contains(width)) throw std::invalid_argument("width is not a point of the search space");
  Genome g(width.channels.size());
  for (int i = 0; i < num_layers(); ++i) {
    g[static_cast<std::size_t>(i)] = width.channels[static_cast<std::size_t>(i)] / group_size(i);
  }
  return g;
}

NetworkWidth WidthSpace::to_width(std::span<const int> genome) const {
  if (!contains_genome(genome)) {
    throw std::invalid_argument("genome is not a point of the search space");
  }
  NetworkWidth w;
  w.channels.reserve(genome.size());
  for (int i = 0; i < num_layers(); ++i) {
    w.channels.push_back(channels_for(i, genome[static_cast<std::size_t>(i)]));
  }
  return w;
}

bool WidthSpace::contains(const NetworkWidth& width) const {
  if (static_cast<int>(width.channels.size()) != num_layers()) return false;
  for (int i = 0; i < num_layers(); ++i) {
    const int c = width.channels[static_cast<std::size_t>(i)];
    const int gs = group_size(i);
    if (c < gs || c > layer(i).max_channels || c % gs != 0) return false;
  }
  return true;
}

bool WidthSpace::contains_genome(std::span<const int> genome) const {
  if (static_cast<int>(genome.size()) != num_layers()) return false;
  return std::all_of(genome.begin(), genome.end(),
                     [&](int g) { return g >= 1 && g <= group_count_; });
}

Genome uniform_sample_genome(const WidthSpace& space, Rng& rng) {
  Genome g(static_cast<std::size_t>(space.num_layers()));
  for (auto& gi : g) gi = uniform_int(rng, 1, space.group_count());
  return g;
}

NetworkWidth uniform_sample(const WidthSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  return space.to_width(uniform_sample_genome(space, rng));
}

bool Complement::any_clamped() const {
  return std::find(clamped.begin(), clamped.end(), true) != clamped.end();
}

Complement complement(const WidthSpace& space, const NetworkWidth& width) {
  const Genome g = space.to_genome(width);
  const int k = space.group_count();
  Genome out(g.size());
  Complement result;
  result.clamped.assign(g.size(), false);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[i] = k - g[i];
    if (out[i] < 1) {
      out[i] = 1;
      result.clamped[i] = true;
    }
  }
  result.width = space.to_width(out);
  return result;
}

IndexSet::IndexSet(std::vector<Interval> ranges) : ranges_(std::move(ranges)) {
  std::erase_if(ranges_, [](const Interval& r) { return r.length() <= 0; });
  std::sort(ranges_.begin(), ranges_.end());
}

int IndexSet::size() const {
  int n = 0;
  for (const auto& r : ranges_) n += r.length();
  return n;
}

int IndexSet::count(int position) const {
  int n = 0;
  for (const auto& r : ranges_) n += (position >= r.lo && position <= r.hi) ? 1 : 0;
  return n;
}

std::vector<int> IndexSet::positions() const {
  std::vector<int> out;
  for (const auto& r : ranges_) {
    for (int p = r.lo; p <= r.hi; ++p) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

IndexSet IndexSet::merged(const IndexSet& other) const {
  std::vector<Interval> all = ranges_;
  all.insert(all.end(), other.ranges_.begin(), other.ranges_.end());
  return IndexSet(std::move(all));
}

IndexSet ua_index_set(int l, int c) {
  check_channel(l, c);
  return IndexSet({Interval{1, c}});
}

BilateralSets bc_index_sets(int l, int c) {
  check_channel(l, c);
  return {IndexSet({Interval{1, c}}), IndexSet({Interval{l - c + 1, l}})};
}

int cardinality_ua(int l, int c) {
  check_channel(l, c);
  return l - c + 1;
}

int cardinality_bc(int l, int c) {
  check_channel(l, c);
  return l + 1;
}

}  // namespace bcnet
