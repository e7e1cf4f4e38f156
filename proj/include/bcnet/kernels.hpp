#pragma once

#include <span>

#include "bcnet/tensor.hpp"

namespace bcnet {

// Half-open, 0-based range of rows or columns of a weight matrix.
struct ChannelRange {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool contains(int i) const { return i >= begin && i < end; }
  bool operator==(const ChannelRange&) const = default;
};

// Masked dense-layer kernels. A layer only reads the weight block
// rows [out.begin, out.end) x cols [in.begin, in.end); activations are kept
// compact (batch x out.size()).
//
// `serial` is the reference implementation. `parallel` splits the same loops
// across OpenMP threads without changing any summation order, so both return
// bit-identical results.
namespace kernels {

namespace serial {

// y = x * W[out, in]^T + b[out], optionally followed by ReLU.
void dense_forward(const Matrix& weight, std::span<const double> bias, ChannelRange out,
                   ChannelRange in, const Matrix& x, Matrix& y, bool relu);

// Given dy (batch x out.size()) for the pre-activation output:
//   grad_w[out, in] += scale * dy^T x,  grad_b[out] += scale * sum_rows(dy),
//   dx = dy * W[out, in]  (skipped when dx is null).
void dense_backward(const Matrix& weight, ChannelRange out, ChannelRange in, const Matrix& x,
                    const Matrix& dy, double scale, Matrix& grad_w, std::span<double> grad_b,
                    Matrix* dx);

}  // namespace serial

namespace parallel {

void dense_forward(const Matrix& weight, std::span<const double> bias, ChannelRange out,
                   ChannelRange in, const Matrix& x, Matrix& y, bool relu);

void dense_backward(const Matrix& weight, ChannelRange out, ChannelRange in, const Matrix& x,
                    const Matrix& dy, double scale, Matrix& grad_w, std::span<double> grad_b,
                    Matrix* dx);

}  // namespace parallel

}  // namespace kernels
}  // namespace bcnet
