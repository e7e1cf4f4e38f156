#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bcnet {

// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& operator()(int r, int c) { return data[index(r, c)]; }
  double operator()(int r, int c) const { return data[index(r, c)]; }

  std::span<double> row(int r) {
    return {data.data() + index(r, 0), static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {data.data() + index(r, 0), static_cast<std::size_t>(cols)};
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(c);
  }
};

}  // namespace bcnet
