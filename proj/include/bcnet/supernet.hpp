#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "bcnet/dataset.hpp"
#include "bcnet/kernels.hpp"
#include "bcnet/tensor.hpp"
#include "bcnet/width_space.hpp"

namespace bcnet {

enum class PathSide { Left, Right };

// UA: a width uses its leftmost channels only. BC: a width is the average of
// its leftmost-channel and rightmost-channel sub-networks.
enum class Principle { UA, BC };

enum class Strategy { Plain, Complementary };

std::string_view to_string(PathSide side);
std::string_view to_string(Principle p);
std::string_view to_string(Strategy s);
Principle parse_principle(std::string_view s);
Strategy parse_strategy(std::string_view s);

struct DenseParams {
  Matrix weight;  // out_max x in_max
  std::vector<double> bias;

  bool operator==(const DenseParams&) const = default;
};

// Shared weights at maximal width: one dense layer per searchable layer plus
// the classifier head (last entry). Gradients use the same structure.
struct SupernetWeights {
  WidthSpace space;
  std::vector<DenseParams> layers;

  std::size_t parameter_count() const;
  bool all_finite() const;
  bool operator==(const SupernetWeights&) const = default;
};

using Gradients = SupernetWeights;

// Uniform in +-sqrt(3 / fan_in_max) (unit variance scaled by 1/sqrt(fan_in)),
// zero bias. Deterministic per seed.
SupernetWeights init_supernet(const WidthSpace& space, std::uint64_t seed);

Gradients zeros_like(const SupernetWeights& weights);

// Rows a path uses in layer `layer` for `channels` active channels.
ChannelRange path_range(int max_channels, int channels, PathSide side);

struct PathOutput {
  Matrix logits;
  double loss = 0.0;
};

// Throws std::invalid_argument when the width is not in the space or the
// batch does not match the space dimensions.
PathOutput forward_path(const SupernetWeights& weights, const NetworkWidth& width, PathSide side,
                        const Dataset& batch);

double bilateral_loss(const SupernetWeights& weights, const NetworkWidth& width,
                      const Dataset& batch);

// Exact gradient of one path's mean cross-entropy; zero outside the path.
Gradients analytic_gradient(const SupernetWeights& weights, const NetworkWidth& width,
                            const Dataset& batch, PathSide side);

double path_accuracy(const SupernetWeights& weights, const NetworkWidth& width, PathSide side,
                     const Dataset& data);

// Average of the left-path and right-path accuracies. Throws on an empty set.
double evaluate_width(const SupernetWeights& weights, const NetworkWidth& width,
                      const Dataset& valset);

// Accuracy estimate a supernet trained under `principle` assigns to a width:
// evaluate_width under BC, the left path alone under UA.
double estimate_accuracy(const SupernetWeights& weights, const NetworkWidth& width,
                         const Dataset& valset, Principle principle);

// Per layer, per channel gradient-update tallies.
struct UpdateCounters {
  std::vector<std::vector<std::int64_t>> counts;
  // Same tallies restricted to steps that belong to an unclamped pair
  // (every step under the plain strategy).
  std::vector<std::vector<std::int64_t>> audited;
  std::int64_t steps = 0;
  std::int64_t clamped_pairs = 0;
  std::int64_t unclamped_pairs = 0;

  static UpdateCounters for_space(const WidthSpace& space);
  void reset();
  bool operator==(const UpdateCounters&) const = default;
};

// The m smallest-loss widths seen during training, sorted by ascending loss.
// A revisited width keeps its smaller loss.
class LossLedger {
 public:
  struct Entry {
    NetworkWidth width;
    double loss = 0.0;
    bool operator==(const Entry&) const = default;
  };

  explicit LossLedger(std::size_t capacity = 100);

  void record(const NetworkWidth& width, double loss);
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const LossLedger&) const = default;

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
};

// One SGD step on the training loss of `width` (bilateral under BC, left path
// only under UA). Only entries used by a trained path move; weight decay is
// applied to the same entries. Each trained path adds one update to every
// channel it uses. Returns the loss before the step; throws DivergenceError
// when it is not finite.
double train_step(SupernetWeights& weights, const NetworkWidth& width, const Dataset& batch,
                  double lr, double weight_decay, UpdateCounters& counters,
                  Principle principle = Principle::BC);

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 0.1;
  LrSchedule schedule = LrSchedule::Cosine;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  std::size_t ledger_size = 100;

  void validate() const;
};

struct TrainResult {
  SupernetWeights weights;
  LossLedger ledger;
  UpdateCounters counters;
};

double learning_rate_at(const TrainConfig& config, std::int64_t step, std::int64_t total_steps);

// Stochastic supernet training: per batch, sample a width uniformly and take
// a train_step on it; under the complementary strategy also train its
// complement on the same batch. Both widths enter the loss ledger.
TrainResult train_supernet(SupernetWeights weights, const Dataset& train, const TrainConfig& config,
                           Strategy strategy, Principle principle);

struct RetrainResult {
  SupernetWeights weights;
  double test_accuracy = 0.0;
  double val_accuracy = 0.0;
};

// The standalone space whose only point is `width` at full width.
WidthSpace standalone_space(const WidthSpace& space, const NetworkWidth& width);

// Trains a fresh network of exactly `width` channels (no masking).
RetrainResult retrain_from_scratch(const WidthSpace& space, const NetworkWidth& width,
                                   const DatasetSplits& data, const TrainConfig& config);

}  // namespace bcnet
