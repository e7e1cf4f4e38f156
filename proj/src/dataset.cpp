#include "bcnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bcnet/rng.hpp"

namespace bcnet {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.features = Matrix(static_cast<int>(indices.size()), features.cols);
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = features.row(static_cast<int>(indices[i]));
    std::copy(src.begin(), src.end(), out.features.row(static_cast<int>(i)).begin());
    out.labels.push_back(labels.at(indices[i]));
  }
  return out;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = begin; i < end && i < static_cast<std::size_t>(size()); ++i) {
    idx.push_back(i);
  }
  return subset(idx);
}

DatasetSplits synth_dataset(const SynthParams& p) {
  if (p.num_classes < 1 || p.input_dim < 1 || p.n_per_class < 1 || p.modes_per_class < 1 ||
      p.cluster_spread < 0.0) {
    throw std::invalid_argument("synthetic dataset parameters must be positive");
  }
  Rng rng(p.seed);
  const int num_modes = p.num_classes * p.modes_per_class;
  Matrix means(num_modes, p.input_dim);
  for (int m = 0; m < num_modes; ++m) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (int d = 0; d < p.input_dim; ++d) {
        means(m, d) = standard_normal(rng);
        norm += means(m, d) * means(m, d);
      }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (int d = 0; d < p.input_dim; ++d) means(m, d) /= norm;
  }

  const int n_train = static_cast<int>(std::lround(0.70 * p.n_per_class));
  const int n_val = static_cast<int>(std::lround(0.15 * p.n_per_class));

  DatasetSplits out;
  for (Dataset* d : {&out.train, &out.val, &out.test}) {
    d->num_classes = p.num_classes;
    d->features = Matrix(0, p.input_dim);
  }
  auto push = [&](Dataset& d, std::span<const double> x, int label) {
    d.features.data.insert(d.features.data.end(), x.begin(), x.end());
    ++d.features.rows;
    d.labels.push_back(label);
  };

  std::vector<double> x(static_cast<std::size_t>(p.input_dim));
  for (int c = 0; c < p.num_classes; ++c) {
    for (int i = 0; i < p.n_per_class; ++i) {
      const int mode = c * p.modes_per_class + i % p.modes_per_class;
      for (int d = 0; d < p.input_dim; ++d) {
        x[static_cast<std::size_t>(d)] = means(mode, d) + p.cluster_spread * standard_normal(rng);
      }
      Dataset& target = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
      push(target, x, c);
    }
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (int d = 0; d < data.input_dim(); ++d) os << 'x' << d << ',';
  os << "label\n";
  os.precision(17);
  for (int n = 0; n < data.size(); ++n) {
    for (double v : data.features.row(n)) os << v << ',';
    os << data.labels[static_cast<std::size_t>(n)] << '\n';
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Dataset read_csv(const std::filesystem::path& path, int num_classes) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": missing header row");
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  if (columns < 2) throw std::runtime_error(path.string() + ": need features and a label column");

  Dataset data;
  data.num_classes = num_classes;
  data.features = Matrix(0, static_cast<int>(columns - 1));
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<long>(row.size()) != columns) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": wrong number of columns");
    }
    const double label = row.back();
    if (label != std::floor(label) || label < 0 || label >= num_classes) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": label outside [0, num_classes)");
    }
    row.pop_back();
    data.features.data.insert(data.features.data.end(), row.begin(), row.end());
    ++data.features.rows;
    data.labels.push_back(static_cast<int>(label));
  }
  if (data.empty()) throw std::runtime_error(path.string() + ": no rows");
  return data;
}

}  // namespace bcnet
