#include "bcnet/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bcnet/errors.hpp"
#include "bcnet/rng.hpp"

namespace bcnet {

std::string_view to_string(PathSide side) { return side == PathSide::Left ? "left" : "right"; }
std::string_view to_string(Principle p) { return p == Principle::UA ? "UA" : "BC"; }
std::string_view to_string(Strategy s) {
  return s == Strategy::Plain ? "plain" : "complementary";
}

Principle parse_principle(std::string_view s) {
  if (s == "UA" || s == "ua") return Principle::UA;
  if (s == "BC" || s == "bc") return Principle::BC;
  throw std::invalid_argument("unknown principle '" + std::string(s) + "' (expected UA or BC)");
}

Strategy parse_strategy(std::string_view s) {
  if (s == "plain") return Strategy::Plain;
  if (s == "complementary") return Strategy::Complementary;
  throw std::invalid_argument("unknown strategy '" + std::string(s) +
                              "' (expected plain or complementary)");
}

std::size_t SupernetWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
  return n;
}

bool SupernetWeights::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(layers.begin(), layers.end(), [&](const DenseParams& l) {
    return std::all_of(l.weight.data.begin(), l.weight.data.end(), finite) &&
           std::all_of(l.bias.begin(), l.bias.end(), finite);
  });
}

namespace {

// (out_max, in_max) of every dense layer including the head.
std::vector<std::pair<int, int>> layer_shapes(const WidthSpace& space) {
  std::vector<std::pair<int, int>> shapes;
  int fan_in = space.input_dim();
  for (const auto& l : space.layers()) {
    shapes.emplace_back(l.max_channels, fan_in);
    fan_in = l.max_channels;
  }
  shapes.emplace_back(space.output_dim(), fan_in);
  return shapes;
}

std::vector<PathSide> trained_sides(Principle principle) {
  if (principle == Principle::UA) return {PathSide::Left};
  return {PathSide::Left, PathSide::Right};
}

struct LayerRanges {
  ChannelRange out;
  ChannelRange in;
};

std::vector<LayerRanges> path_ranges(const WidthSpace& space, const NetworkWidth& width,
                                     PathSide side) {
  std::vector<LayerRanges> r;
  ChannelRange in{0, space.input_dim()};
  for (int i = 0; i < space.num_layers(); ++i) {
    const ChannelRange out = path_range(space.layer(i).max_channels,
                                        width.channels[static_cast<std::size_t>(i)], side);
    r.push_back({out, in});
    in = out;
  }
  r.push_back({ChannelRange{0, space.output_dim()}, in});
  return r;
}

void check_inputs(const SupernetWeights& weights, const NetworkWidth& width,
                  const Dataset& batch) {
  const auto& space = weights.space;
  if (!space.contains(width)) throw std::invalid_argument("width is not a point of the space");
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (batch.input_dim() != space.input_dim()) {
    throw std::invalid_argument("batch has " + std::to_string(batch.input_dim()) +
                                " features but the space expects " +
                                std::to_string(space.input_dim()));
  }
  for (int label : batch.labels) {
    if (label < 0 || label >= space.output_dim()) {
      throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(space.output_dim()) + ")");
    }
  }
}

struct Trace {
  std::vector<LayerRanges> ranges;
  std::vector<Matrix> inputs;  // inputs[i] feeds dense layer i
  Matrix logits;
};

Trace run_forward(const SupernetWeights& weights, const NetworkWidth& width, PathSide side,
                  const Dataset& batch) {
  Trace t;
  t.ranges = path_ranges(weights.space, width, side);
  t.inputs.reserve(weights.layers.size());
  t.inputs.push_back(batch.features);
  const std::size_t num_dense = weights.layers.size();
  for (std::size_t i = 0; i < num_dense; ++i) {
    const bool head = i + 1 == num_dense;
    Matrix y;
    const auto& p = weights.layers[i];
    kernels::parallel::dense_forward(p.weight, p.bias, t.ranges[i].out, t.ranges[i].in,
                                     t.inputs.back(), y, !head);
    if (head) {
      t.logits = std::move(y);
    } else {
      t.inputs.push_back(std::move(y));
    }
  }
  return t;
}

// Mean softmax cross-entropy; fills dlogits with d(loss)/d(logits) if given.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels, Matrix* dlogits) {
  const int n = logits.rows;
  const int k = logits.cols;
  if (dlogits != nullptr) *dlogits = Matrix(n, k);
  double total = 0.0;
  for (int r = 0; r < n; ++r) {
    const auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    const int y = labels[static_cast<std::size_t>(r)];
    total += log_z - row[static_cast<std::size_t>(y)];
    if (dlogits != nullptr) {
      for (int c = 0; c < k; ++c) {
        (*dlogits)(r, c) = (std::exp(row[static_cast<std::size_t>(c)] - log_z) -
                            (c == y ? 1.0 : 0.0)) /
                           n;
      }
    }
  }
  return total / n;
}

// Backpropagates one path and accumulates scale * gradient into grads.
double accumulate_path_gradient(const SupernetWeights& weights, const NetworkWidth& width,
                                PathSide side, const Dataset& batch, double scale,
                                Gradients& grads) {
  Trace t = run_forward(weights, width, side, batch);
  Matrix delta;
  const double loss = cross_entropy(t.logits, batch.labels, &delta);
  for (std::size_t i = weights.layers.size(); i-- > 0;) {
    const auto& p = weights.layers[i];
    auto& g = grads.layers[i];
    Matrix dx;
    kernels::parallel::dense_backward(p.weight, t.ranges[i].out, t.ranges[i].in, t.inputs[i],
                                      delta, scale, g.weight, g.bias, i > 0 ? &dx : nullptr);
    if (i > 0) {
      // ReLU of the previous layer: its output is inputs[i].
      const Matrix& h = t.inputs[i];
      for (std::size_t e = 0; e < dx.data.size(); ++e) {
        if (h.data[e] <= 0.0) dx.data[e] = 0.0;
      }
      delta = std::move(dx);
    }
  }
  return loss;
}

void add_path_counts(std::vector<std::vector<std::int64_t>>& counts, const WidthSpace& space,
                     const NetworkWidth& width, PathSide side) {
  for (int i = 0; i < space.num_layers(); ++i) {
    const ChannelRange r = path_range(space.layer(i).max_channels,
                                      width.channels[static_cast<std::size_t>(i)], side);
    auto& layer = counts[static_cast<std::size_t>(i)];
    for (int c = r.begin; c < r.end; ++c) ++layer[static_cast<std::size_t>(c)];
  }
}

void add_trained_counts(std::vector<std::vector<std::int64_t>>& counts, const WidthSpace& space,
                        const NetworkWidth& width, Principle principle) {
  for (PathSide side : trained_sides(principle)) add_path_counts(counts, space, width, side);
}

}  // namespace

SupernetWeights init_supernet(const WidthSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  SupernetWeights w{space, {}};
  for (const auto& [out, in] : layer_shapes(space)) {
    DenseParams p{Matrix(out, in), std::vector<double>(static_cast<std::size_t>(out), 0.0)};
    const double bound = std::sqrt(3.0) / std::sqrt(static_cast<double>(in));
    for (double& v : p.weight.data) v = bound * (2.0 * uniform01(rng) - 1.0);
    w.layers.push_back(std::move(p));
  }
  return w;
}

Gradients zeros_like(const SupernetWeights& weights) {
  Gradients g{weights.space, {}};
  for (const auto& l : weights.layers) {
    g.layers.push_back({Matrix(l.weight.rows, l.weight.cols), std::vector<double>(l.bias.size())});
  }
  return g;
}

ChannelRange path_range(int max_channels, int channels, PathSide side) {
  if (channels < 1 || channels > max_channels) {
    throw std::invalid_argument("channel count outside [1, max_channels]");
  }
  if (side == PathSide::Left) return {0, channels};
  return {max_channels - channels, max_channels};
}

PathOutput forward_path(const SupernetWeights& weights, const NetworkWidth& width, PathSide side,
                        const Dataset& batch) {
  check_inputs(weights, width, batch);
  Trace t = run_forward(weights, width, side, batch);
  PathOutput out;
  out.loss = cross_entropy(t.logits, batch.labels, nullptr);
  out.logits = std::move(t.logits);
  return out;
}

double bilateral_loss(const SupernetWeights& weights, const NetworkWidth& width,
                      const Dataset& batch) {
  return 0.5 * (forward_path(weights, width, PathSide::Left, batch).loss +
                forward_path(weights, width, PathSide::Right, batch).loss);
}

Gradients analytic_gradient(const SupernetWeights& weights, const NetworkWidth& width,
                            const Dataset& batch, PathSide side) {
  check_inputs(weights, width, batch);
  Gradients g = zeros_like(weights);
  accumulate_path_gradient(weights, width, side, batch, 1.0, g);
  return g;
}

double path_accuracy(const SupernetWeights& weights, const NetworkWidth& width, PathSide side,
                     const Dataset& data) {
  check_inputs(weights, width, data);
  const Trace t = run_forward(weights, width, side, data);
  int correct = 0;
  for (int r = 0; r < t.logits.rows; ++r) {
    const auto row = t.logits.row(r);
    const auto pred = std::max_element(row.begin(), row.end()) - row.begin();
    if (pred == data.labels[static_cast<std::size_t>(r)]) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

double evaluate_width(const SupernetWeights& weights, const NetworkWidth& width,
                      const Dataset& valset) {
  if (valset.empty()) throw std::invalid_argument("empty validation set");
  return 0.5 * (path_accuracy(weights, width, PathSide::Left, valset) +
                path_accuracy(weights, width, PathSide::Right, valset));
}

double estimate_accuracy(const SupernetWeights& weights, const NetworkWidth& width,
                         const Dataset& valset, Principle principle) {
  if (principle == Principle::BC) return evaluate_width(weights, width, valset);
  if (valset.empty()) throw std::invalid_argument("empty validation set");
  return path_accuracy(weights, width, PathSide::Left, valset);
}

UpdateCounters UpdateCounters::for_space(const WidthSpace& space) {
  UpdateCounters c;
  for (const auto& l : space.layers()) {
    c.counts.emplace_back(static_cast<std::size_t>(l.max_channels), 0);
  }
  c.audited = c.counts;
  return c;
}

void UpdateCounters::reset() {
  for (auto* table : {&counts, &audited}) {
    for (auto& layer : *table) std::fill(layer.begin(), layer.end(), 0);
  }
  steps = clamped_pairs = unclamped_pairs = 0;
}

LossLedger::LossLedger(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ledger size must be >= 1");
}

void LossLedger::record(const NetworkWidth& width, double loss) {
  auto by_loss = [](double l, const Entry& e) { return l < e.loss; };
  auto existing = std::find_if(entries_.begin(), entries_.end(),
                               [&](const Entry& e) { return e.width == width; });
  if (existing != entries_.end()) {
    if (loss >= existing->loss) return;
    entries_.erase(existing);
  } else if (entries_.size() == capacity_ && loss >= entries_.back().loss) {
    return;
  }
  entries_.insert(std::upper_bound(entries_.begin(), entries_.end(), loss, by_loss),
                  Entry{width, loss});
  if (entries_.size() > capacity_) entries_.pop_back();
}

double train_step(SupernetWeights& weights, const NetworkWidth& width, const Dataset& batch,
                  double lr, double weight_decay, UpdateCounters& counters, Principle principle) {
  check_inputs(weights, width, batch);
  const auto sides = trained_sides(principle);
  const double scale = 1.0 / static_cast<double>(sides.size());

  Gradients g = zeros_like(weights);
  std::vector<std::vector<char>> active_w(weights.layers.size());
  std::vector<std::vector<char>> active_b(weights.layers.size());
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    active_w[i].assign(weights.layers[i].weight.data.size(), 0);
    active_b[i].assign(weights.layers[i].bias.size(), 0);
  }

  double loss = 0.0;
  for (PathSide side : sides) {
    loss += scale * accumulate_path_gradient(weights, width, side, batch, scale, g);
    const auto ranges = path_ranges(weights.space, width, side);
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      const int cols = weights.layers[i].weight.cols;
      for (int r = ranges[i].out.begin; r < ranges[i].out.end; ++r) {
        active_b[i][static_cast<std::size_t>(r)] = 1;
        for (int c = ranges[i].in.begin; c < ranges[i].in.end; ++c) {
          active_w[i][static_cast<std::size_t>(r * cols + c)] = 1;
        }
      }
    }
  }
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite training loss at step " + std::to_string(counters.steps));
  }

  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    auto& p = weights.layers[i];
    const auto& gp = g.layers[i];
    for (std::size_t e = 0; e < p.weight.data.size(); ++e) {
      if (active_w[i][e]) p.weight.data[e] -= lr * (gp.weight.data[e] + weight_decay * p.weight.data[e]);
    }
    for (std::size_t e = 0; e < p.bias.size(); ++e) {
      if (active_b[i][e]) p.bias[e] -= lr * gp.bias[e];
    }
  }
  add_trained_counts(counters.counts, weights.space, width, principle);
  ++counters.steps;
  return loss;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0) || weight_decay < 0.0 ||
      ledger_size < 1) {
    throw std::invalid_argument("train config: epochs, batch_size, learning_rate and ledger_size "
                                "must be positive, weight_decay nonnegative");
  }
}

double learning_rate_at(const TrainConfig& config, std::int64_t step, std::int64_t total_steps) {
  if (config.schedule == LrSchedule::Constant || total_steps <= 0) return config.learning_rate;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return 0.5 * config.learning_rate * (1.0 + std::cos(3.141592653589793 * progress));
}

TrainResult train_supernet(SupernetWeights weights, const Dataset& train, const TrainConfig& config,
                           Strategy strategy, Principle principle) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("empty training set");
  auto counters = UpdateCounters::for_space(weights.space);
  TrainResult result{std::move(weights), LossLedger(config.ledger_size), std::move(counters)};
  auto& w = result.weights;
  const WidthSpace& space = w.space;

  Rng width_rng(derive_seed(config.seed, "width-sampler"));
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));

  const auto n = static_cast<std::size_t>(train.size());
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::int64_t batches_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  const std::int64_t total_steps = batches_per_epoch * config.epochs;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(shuffle_rng, 0, static_cast<int>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < n; start += batch) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(batch, n - start));
      const Dataset b = train.subset(idx);
      const double lr = learning_rate_at(config, step, total_steps);

      const NetworkWidth c = space.to_width(uniform_sample_genome(space, width_rng));
      result.ledger.record(c, train_step(w, c, b, lr, config.weight_decay, result.counters, principle));

      if (strategy == Strategy::Complementary) {
        const Complement comp = complement(space, c);
        result.ledger.record(comp.width, train_step(w, comp.width, b, lr, config.weight_decay,
                                                    result.counters, principle));
        if (comp.any_clamped()) {
          ++result.counters.clamped_pairs;
        } else {
          ++result.counters.unclamped_pairs;
          add_trained_counts(result.counters.audited, space, c, principle);
          add_trained_counts(result.counters.audited, space, comp.width, principle);
        }
      } else {
        add_trained_counts(result.counters.audited, space, c, principle);
      }
      ++step;
    }
  }
  if (!w.all_finite()) throw DivergenceError("non-finite weights after training");
  return result;
}

WidthSpace standalone_space(const WidthSpace& space, const NetworkWidth& width) {
  if (!space.contains(width)) throw std::invalid_argument("width is not a point of the space");
  std::vector<LayerSpec> layers;
  for (int i = 0; i < space.num_layers(); ++i) {
    layers.push_back({width.channels[static_cast<std::size_t>(i)], space.layer(i).cost_multiplier});
  }
  return WidthSpace(std::move(layers), 1, space.input_dim(), space.output_dim());
}

RetrainResult retrain_from_scratch(const WidthSpace& space, const NetworkWidth& width,
                                   const DatasetSplits& data, const TrainConfig& config) {
  const WidthSpace standalone = standalone_space(space, width);
  SupernetWeights init = init_supernet(standalone, derive_seed(config.seed, "retrain-init"));
  TrainResult trained =
      train_supernet(std::move(init), data.train, config, Strategy::Plain, Principle::UA);
  const NetworkWidth full = standalone.full_width();
  const double test = data.test.empty()
                          ? 0.0
                          : path_accuracy(trained.weights, full, PathSide::Left, data.test);
  const double val = data.val.empty()
                         ? 0.0
                         : path_accuracy(trained.weights, full, PathSide::Left, data.val);
  RetrainResult r{std::move(trained.weights), test, val};
  return r;
}

}  // namespace bcnet
