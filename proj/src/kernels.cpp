#include "bcnet/kernels.hpp"

#include <stdexcept>

namespace bcnet::kernels {

namespace {

void check_forward(const Matrix& weight, std::span<const double> bias, ChannelRange out,
                   ChannelRange in, const Matrix& x) {
  if (out.begin < 0 || out.end > weight.rows || out.size() <= 0 || in.begin < 0 ||
      in.end > weight.cols || in.size() <= 0) {
    throw std::invalid_argument("channel range outside the weight matrix");
  }
  if (static_cast<int>(bias.size()) != weight.rows) {
    throw std::invalid_argument("bias length does not match the weight matrix");
  }
  if (x.cols != in.size()) throw std::invalid_argument("input width does not match the range");
}

inline double forward_cell(const Matrix& weight, std::span<const double> bias, ChannelRange out,
                           ChannelRange in, const Matrix& x, int n, int o, bool relu) {
  const int r = out.begin + o;
  const double* w = weight.row(r).data() + in.begin;
  const double* xr = x.row(n).data();
  double acc = bias[static_cast<std::size_t>(r)];
  for (int k = 0; k < in.size(); ++k) acc += w[k] * xr[k];
  return (relu && acc < 0.0) ? 0.0 : acc;
}

// Gradient row o of the weight block, accumulated over the batch in order.
inline void backward_weight_row(ChannelRange out, ChannelRange in, const Matrix& x,
                                const Matrix& dy, double scale, Matrix& grad_w,
                                std::span<double> grad_b, int o) {
  const int r = out.begin + o;
  double* gw = grad_w.row(r).data() + in.begin;
  double gb = 0.0;
  for (int n = 0; n < x.rows; ++n) {
    const double d = dy(n, o);
    if (d == 0.0) continue;
    gb += d;
    const double* xr = x.row(n).data();
    const double sd = scale * d;
    for (int k = 0; k < in.size(); ++k) gw[k] += sd * xr[k];
  }
  grad_b[static_cast<std::size_t>(r)] += scale * gb;
}

inline void backward_input_row(const Matrix& weight, ChannelRange out, ChannelRange in,
                               const Matrix& dy, Matrix& dx, int n) {
  double* dxr = dx.row(n).data();
  for (int k = 0; k < in.size(); ++k) dxr[k] = 0.0;
  for (int o = 0; o < out.size(); ++o) {
    const double d = dy(n, o);
    if (d == 0.0) continue;
    const double* w = weight.row(out.begin + o).data() + in.begin;
    for (int k = 0; k < in.size(); ++k) dxr[k] += d * w[k];
  }
}

void prepare_backward(const Matrix& weight, ChannelRange out, ChannelRange in, const Matrix& x,
                      const Matrix& dy, const Matrix& grad_w, std::span<double> grad_b,
                      Matrix* dx) {
  if (grad_w.rows != weight.rows || grad_w.cols != weight.cols ||
      static_cast<int>(grad_b.size()) != weight.rows) {
    throw std::invalid_argument("gradient buffers do not match the weight matrix");
  }
  if (dy.rows != x.rows || dy.cols != out.size() || x.cols != in.size()) {
    throw std::invalid_argument("backward operand shapes disagree");
  }
  if (dx != nullptr && (dx->rows != x.rows || dx->cols != in.size())) {
    *dx = Matrix(x.rows, in.size());
  }
}

}  // namespace

namespace serial {

void dense_forward(const Matrix& weight, std::span<const double> bias, ChannelRange out,
                   ChannelRange in, const Matrix& x, Matrix& y, bool relu) {
  check_forward(weight, bias, out, in, x);
  if (y.rows != x.rows || y.cols != out.size()) y = Matrix(x.rows, out.size());
  for (int n = 0; n < x.rows; ++n) {
    for (int o = 0; o < out.size(); ++o) y(n, o) = forward_cell(weight, bias, out, in, x, n, o, relu);
  }
}

void dense_backward(const Matrix& weight, ChannelRange out, ChannelRange in, const Matrix& x,
                    const Matrix& dy, double scale, Matrix& grad_w, std::span<double> grad_b,
                    Matrix* dx) {
  prepare_backward(weight, out, in, x, dy, grad_w, grad_b, dx);
  for (int o = 0; o < out.size(); ++o) backward_weight_row(out, in, x, dy, scale, grad_w, grad_b, o);
  if (dx != nullptr) {
    for (int n = 0; n < x.rows; ++n) backward_input_row(weight, out, in, dy, *dx, n);
  }
}

}  // namespace serial

namespace parallel {

void dense_forward(const Matrix& weight, std::span<const double> bias, ChannelRange out,
                   ChannelRange in, const Matrix& x, Matrix& y, bool relu) {
  check_forward(weight, bias, out, in, x);
  if (y.rows != x.rows || y.cols != out.size()) y = Matrix(x.rows, out.size());
  const int batch = x.rows;
#pragma omp parallel for schedule(static) if (batch >= 64)
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < out.size(); ++o) y(n, o) = forward_cell(weight, bias, out, in, x, n, o, relu);
  }
}

void dense_backward(const Matrix& weight, ChannelRange out, ChannelRange in, const Matrix& x,
                    const Matrix& dy, double scale, Matrix& grad_w, std::span<double> grad_b,
                    Matrix* dx) {
  prepare_backward(weight, out, in, x, dy, grad_w, grad_b, dx);
  const int rows = out.size();
#pragma omp parallel for schedule(static) if (rows * x.rows >= 4096)
  for (int o = 0; o < rows; ++o) backward_weight_row(out, in, x, dy, scale, grad_w, grad_b, o);
  if (dx != nullptr) {
    const int batch = x.rows;
#pragma omp parallel for schedule(static) if (batch >= 64)
    for (int n = 0; n < batch; ++n) backward_input_row(weight, out, in, dy, *dx, n);
  }
}

}  // namespace parallel

}  // namespace bcnet::kernels
