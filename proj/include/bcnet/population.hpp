#pragma once

#include <optional>
#include <vector>

#include "bcnet/width_space.hpp"

namespace bcnet {

struct Fitness {
  double accuracy = 0.0;  // estimated, in [0, 1]; maximized
  double flops = 0.0;     // minimized
  bool operator==(const Fitness&) const = default;
};

struct Individual {
  Genome genome;
  std::optional<Fitness> fitness;
  bool feasible = true;
  double violation = 0.0;  // max(0, flops - budget)

  bool operator==(const Individual&) const = default;
};

struct Population {
  std::vector<Individual> individuals;
  int generation = 0;
  // Set when deduplication had to be given up (e.g. a budget that only the
  // minimum width meets).
  bool dedup_relaxed = false;

  std::size_t size() const { return individuals.size(); }
};

}  // namespace bcnet
