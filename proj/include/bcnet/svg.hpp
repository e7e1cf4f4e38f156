#pragma once

#include <string>
#include <vector>

namespace bcnet::svg {

struct Series {
  std::string label;
  std::vector<double> values;
};

// Overlaid histograms with a shared binning and one legend entry per series.
// Throws std::invalid_argument when there are no series or a series is empty.
std::string histogram(const std::vector<Series>& series, int bins, const std::string& title,
                      const std::string& x_label, const std::string& comment = {});

// One bar per layer at the retained-width ratio (kept / maximum channels).
std::string width_ratio_bars(const std::vector<double>& ratios, const std::string& title,
                             const std::string& comment = {});

}  // namespace bcnet::svg
