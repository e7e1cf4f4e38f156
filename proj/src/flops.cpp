#include "bcnet/flops.hpp"

#include <stdexcept>
#include <string>

#include "bcnet/errors.hpp"

namespace bcnet {

FlopsTable::FlopsTable(const WidthSpace& space) : group_count_(space.group_count()) {
  const int num_layers = space.num_layers();
  for (int i = 0; i < num_layers; ++i) group_sizes_.push_back(space.group_size(i));

  for (int b = 0; b <= num_layers; ++b) {
    Boundary t;
    std::vector<int> in_opts;
    std::vector<int> out_opts;
    if (b == 0) {
      in_opts = {space.input_dim()};
    } else {
      in_opts = space.options(b - 1);
    }
    double multiplier = 1.0;
    if (b == num_layers) {
      out_opts = {space.output_dim()};
    } else {
      out_opts = space.options(b);
      multiplier = space.layer(b).cost_multiplier;
    }
    t.rows = static_cast<int>(in_opts.size());
    t.cols = static_cast<int>(out_opts.size());
    t.values.reserve(in_opts.size() * out_opts.size());
    for (int in : in_opts) {
      for (int out : out_opts) {
        t.values.push_back(static_cast<double>(in) * static_cast<double>(out) * multiplier);
      }
    }
    tables_.push_back(std::move(t));
  }
}

double FlopsTable::at(int boundary, int row, int col) const {
  const auto& t = tables_.at(static_cast<std::size_t>(boundary));
  if (row < 0 || row >= t.rows || col < 0 || col >= t.cols) {
    throw std::out_of_range("flops table index out of range");
  }
  return t.values[static_cast<std::size_t>(row * t.cols + col)];
}

double FlopsTable::cost(std::span<const int> genome) const {
  const int num_layers = this->num_layers();
  if (static_cast<int>(genome.size()) != num_layers) {
    throw std::invalid_argument("genome length does not match the flops table");
  }
  double total = 0.0;
  for (int b = 0; b <= num_layers; ++b) {
    const int row = b == 0 ? 0 : genome[static_cast<std::size_t>(b - 1)] - 1;
    const int col = b == num_layers ? 0 : genome[static_cast<std::size_t>(b)] - 1;
    total += at(b, row, col);
  }
  return total;
}

double FlopsTable::cost(const NetworkWidth& width) const {
  if (static_cast<int>(width.channels.size()) != num_layers()) {
    throw std::invalid_argument("width length does not match the flops table");
  }
  Genome g(width.channels.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int gs = group_sizes_[i];
    const int c = width.channels[i];
    if (c % gs != 0 || c < gs || c / gs > group_count_) {
      throw std::invalid_argument("width is not a point of the search space");
    }
    g[i] = c / gs;
  }
  return cost(g);
}

double full_flops(const WidthSpace& space, const FlopsTable& table) {
  return table.cost(space.full_width());
}

double min_flops(const WidthSpace& space, const FlopsTable& table) {
  return table.cost(space.min_width());
}

NetworkWidth uniform_scale_width(const WidthSpace& space, double flops_budget,
                                 const FlopsTable& table) {
  for (int g = space.group_count(); g >= 1; --g) {
    const Genome genome(static_cast<std::size_t>(space.num_layers()), g);
    if (table.cost(genome) <= flops_budget) return space.to_width(genome);
  }
  throw InfeasibleError("flops budget " + std::to_string(flops_budget) +
                        " is below the minimum-width cost " +
                        std::to_string(min_flops(space, table)));
}

Genome repair_to_budget(const WidthSpace& space, const FlopsTable& table, Genome genome,
                        double flops_budget) {
  double current = table.cost(genome);
  while (current > flops_budget) {
    int best_layer = -1;
    double best_saving = -1.0;
    double best_cost = current;
    for (int i = 0; i < space.num_layers(); ++i) {
      auto& gi = genome[static_cast<std::size_t>(i)];
      if (gi <= 1) continue;
      --gi;
      const double c = table.cost(genome);
      ++gi;
      if (current - c > best_saving) {
        best_saving = current - c;
        best_layer = i;
        best_cost = c;
      }
    }
    if (best_layer < 0) {
      throw InfeasibleError("flops budget " + std::to_string(flops_budget) +
                            " is below the minimum-width cost " + std::to_string(current));
    }
    --genome[static_cast<std::size_t>(best_layer)];
    current = best_cost;
  }
  return genome;
}

}  // namespace bcnet
