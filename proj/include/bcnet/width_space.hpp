#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcnet/rng.hpp"

namespace bcnet {

struct LayerSpec {
  int max_channels = 1;
  double cost_multiplier = 1.0;

  bool operator==(const LayerSpec&) const = default;
};

// Group indices, one per layer, each in [1, K].
using Genome = std::vector<int>;

// Per-layer channel counts of one sub-network.
struct NetworkWidth {
  std::vector<int> channels;

  bool operator==(const NetworkWidth&) const = default;
  auto operator<=>(const NetworkWidth&) const = default;
};

// |C_K| = K^L. `exact` is empty when the value does not fit in 63 bits.
struct SpaceSize {
  std::optional<std::uint64_t> exact;
  double log10 = 0.0;
};

// Grouped width search space: layer i may keep g * (l_i / K) channels for
// g in [1, K]. Immutable after construction.
class WidthSpace {
 public:
  // Throws std::invalid_argument naming the first offending layer.
  WidthSpace(std::vector<LayerSpec> layers, int group_count, int input_dim, int output_dim);

  int num_layers() const { return static_cast<int>(layers_.size()); }
  int group_count() const { return group_count_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(int i) const { return layers_.at(static_cast<std::size_t>(i)); }

  int group_size(int layer) const { return this->layer(layer).max_channels / group_count_; }
  int channels_for(int layer, int group) const { return group * group_size(layer); }

  // Width options of one layer in ascending order.
  std::vector<int> options(int layer) const;

  SpaceSize size() const;

  NetworkWidth full_width() const;
  NetworkWidth min_width() const;

  // Throws std::invalid_argument when the width is not a point of the space.
  Genome to_genome(const NetworkWidth& width) const;
  NetworkWidth to_width(std::span<const int> genome) const;
  bool contains(const NetworkWidth& width) const;
  bool contains_genome(std::span<const int> genome) const;

  bool operator==(const WidthSpace&) const = default;

 private:
  std::vector<LayerSpec> layers_;
  int group_count_;
  int input_dim_;
  int output_dim_;
};

inline WidthSpace new_space(std::vector<LayerSpec> layers, int group_count, int input_dim,
                            int output_dim) {
  return WidthSpace(std::move(layers), group_count, input_dim, output_dim);
}

inline SpaceSize space_size(const WidthSpace& space) { return space.size(); }

NetworkWidth uniform_sample(const WidthSpace& space, std::uint64_t seed);
Genome uniform_sample_genome(const WidthSpace& space, Rng& rng);

struct Complement {
  NetworkWidth width;
  // clamped[i] is set when layer i was at full width, so its raw complement
  // (zero channels) was replaced by group index 1.
  std::vector<bool> clamped;

  bool any_clamped() const;
};

Complement complement(const WidthSpace& space, const NetworkWidth& width);

// 1-based inclusive interval of channel positions.
struct Interval {
  int lo = 1;
  int hi = 0;

  int length() const { return hi - lo + 1; }
  bool operator==(const Interval&) const = default;
  auto operator<=>(const Interval&) const = default;
};

// A multiset of channel positions kept as sorted intervals. Merging two sets
// keeps repeated positions (the merge of two lists with repeatable elements).
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<Interval> ranges);

  const std::vector<Interval>& ranges() const { return ranges_; }
  int size() const;
  int count(int position) const;
  std::vector<int> positions() const;

  IndexSet merged(const IndexSet& other) const;

  bool operator==(const IndexSet&) const = default;

 private:
  std::vector<Interval> ranges_;
};

IndexSet ua_index_set(int l, int c);

struct BilateralSets {
  IndexSet left;
  IndexSet right;
};

// left = [1:c], right = [(l-c+1):l].
BilateralSets bc_index_sets(int l, int c);

int cardinality_ua(int l, int c);
int cardinality_bc(int l, int c);

}  // namespace bcnet
