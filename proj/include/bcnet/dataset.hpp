#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bcnet/tensor.hpp"

namespace bcnet {

struct Dataset {
  Matrix features;  // N x input_dim
  std::vector<int> labels;
  int num_classes = 0;

  int size() const { return features.rows; }
  int input_dim() const { return features.cols; }
  bool empty() const { return features.rows == 0; }

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset slice(std::size_t begin, std::size_t end) const;

  bool operator==(const Dataset&) const = default;
};

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

struct SynthParams {
  int num_classes = 10;
  int input_dim = 16;
  int n_per_class = 300;
  double cluster_spread = 0.3;
  // Number of Gaussian clusters per class; each class draws its samples
  // round-robin from its own clusters. 1 gives linearly separable-ish data.
  int modes_per_class = 1;
  std::uint64_t seed = 0;
};

// Gaussian class clusters around random unit-norm means, split per class
// 70/15/15 into train/val/test. Deterministic per seed.
DatasetSplits synth_dataset(const SynthParams& params);

// CSV with a header row: feature columns then an integer label column.
void write_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_csv(const std::filesystem::path& path, int num_classes);

}  // namespace bcnet
