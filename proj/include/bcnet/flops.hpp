#pragma once

#include <span>
#include <vector>

#include "bcnet/width_space.hpp"

namespace bcnet {

// Lookup table of multiply-accumulate costs for every layer boundary.
//
// Boundary b in [0, L] maps the input side (the network input when b == 0,
// otherwise layer b-1) to the output side (layer b, or the classifier head
// when b == L). Entry (b, i, j) is the cost of that boundary with option i on
// the input side and option j on the output side:
//   in_channels * out_channels * cost_multiplier(b)
// Fixed endpoints have a single option. The head boundary has multiplier 1.
class FlopsTable {
 public:
  explicit FlopsTable(const WidthSpace& space);

  int num_boundaries() const { return static_cast<int>(tables_.size()); }
  int rows(int boundary) const { return tables_.at(static_cast<std::size_t>(boundary)).rows; }
  int cols(int boundary) const { return tables_.at(static_cast<std::size_t>(boundary)).cols; }
  double at(int boundary, int row, int col) const;
  int num_layers() const { return static_cast<int>(group_sizes_.size()); }
  int group_count() const { return group_count_; }

  // Cost of a width given as group indices.
  double cost(std::span<const int> genome) const;
  double cost(const NetworkWidth& width) const;

 private:
  struct Boundary {
    int rows = 1;
    int cols = 1;
    std::vector<double> values;
  };
  std::vector<Boundary> tables_;
  std::vector<int> group_sizes_;
  int group_count_;
};

inline FlopsTable build_flops_table(const WidthSpace& space) { return FlopsTable(space); }

inline double flops_of(const NetworkWidth& width, const FlopsTable& table) {
  return table.cost(width);
}

double full_flops(const WidthSpace& space, const FlopsTable& table);
double min_flops(const WidthSpace& space, const FlopsTable& table);

// Largest common group index g such that every layer at g fits the budget.
// Throws InfeasibleError when even g = 1 exceeds it.
NetworkWidth uniform_scale_width(const WidthSpace& space, double flops_budget,
                                 const FlopsTable& table);

// Decrements the group index of the layer whose decrement saves the most
// FLOPs until the genome fits the budget. Ties go to the lower layer index.
// Throws InfeasibleError when the budget is below the minimum width.
Genome repair_to_budget(const WidthSpace& space, const FlopsTable& table, Genome genome,
                        double flops_budget);

}  // namespace bcnet
