#include "daema/ndcore.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace daema {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) { return ConstMap(m.data.data(), m.rows, m.cols); }
MutMap view(Matrix& m) { return MutMap(m.data.data(), m.rows, m.cols); }

void require_same_shape(const AffineParams& a, const AffineParams& b, const char* what) {
  if (a.weight.rows != b.weight.rows || a.weight.cols != b.weight.cols || a.bias.size() != b.bias.size()) {
    throw DimensionError(std::string(what) + ": parameter shape " + shape_string(a.weight) +
                         " does not match " + shape_string(b.weight));
  }
}

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m;
  m.rows = rows.size();
  m.cols = rows.size() ? rows.begin()->size() : 0;
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows) {
    if (r.size() != m.cols) throw DimensionError("Matrix::from_rows: ragged rows");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string shape_string(const Matrix& m) {
  return "(" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ")";
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data.begin(), m.data.end(), [](double v) { return std::isfinite(v); });
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows) throw DimensionError("take_rows: row index out of range");
    std::copy_n(m.row(indices[i]).begin(), m.cols, out.row(i).begin());
  }
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw DimensionError("hconcat: row mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
  Matrix out(a.rows, a.cols + b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + a.cols);
  }
  return out;
}

void init_uniform(AffineParams& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.in_dim()));
  for (double& w : p.weight.data) w = rng.uniform(-bound, bound);
  std::fill(p.bias.begin(), p.bias.end(), 0.0);
}

std::vector<AffineParams> zeros_like(std::span<const AffineParams> params) {
  std::vector<AffineParams> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.in_dim(), p.out_dim());
  return out;
}

Matrix affine_forward(const AffineParams& p, const Matrix& input) {
  if (input.cols != p.in_dim()) {
    throw DimensionError("affine_forward: input " + shape_string(input) + " incompatible with weight " +
                         shape_string(p.weight));
  }
  Matrix out(input.rows, p.out_dim());
  if (input.rows == 0) return out;
  auto y = view(out);
  y.noalias() = view(input) * view(p.weight).transpose();
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(p.bias.data(), p.bias.size());
  return out;
}

Matrix affine_backward(const AffineParams& p, const Matrix& input, const Matrix& grad_output,
                       AffineParams& grad) {
  if (input.cols != p.in_dim() || grad_output.cols != p.out_dim() || input.rows != grad_output.rows) {
    throw DimensionError("affine_backward: input " + shape_string(input) + ", grad " +
                         shape_string(grad_output) + ", weight " + shape_string(p.weight));
  }
  require_same_shape(p, grad, "affine_backward");
  affine_param_grads(input, grad_output, grad, true);
  return affine_input_grad(p, grad_output);
}

void affine_param_grads(const Matrix& input, const Matrix& grad_output, AffineParams& grad, bool accumulate) {
  if (grad.weight.rows != grad_output.cols || grad.weight.cols != input.cols || input.rows != grad_output.rows ||
      grad.bias.size() != grad_output.cols) {
    throw DimensionError("affine_param_grads: input " + shape_string(input) + ", grad " +
                         shape_string(grad_output) + ", weight " + shape_string(grad.weight));
  }
  auto g = view(grad_output);
  Eigen::Map<Eigen::RowVectorXd> db(grad.bias.data(), static_cast<Eigen::Index>(grad.bias.size()));
  if (accumulate) {
    view(grad.weight).noalias() += g.transpose() * view(input);
    db += g.colwise().sum();
  } else {
    view(grad.weight).noalias() = g.transpose() * view(input);
    db = g.colwise().sum();
  }
}

Matrix affine_input_grad(const AffineParams& p, const Matrix& grad_output) {
  if (grad_output.cols != p.out_dim()) {
    throw DimensionError("affine_input_grad: grad " + shape_string(grad_output) + ", weight " +
                         shape_string(p.weight));
  }
  Matrix grad_input(grad_output.rows, p.in_dim());
  view(grad_input).noalias() = view(grad_output) * view(p.weight);
  return grad_input;
}

Matrix tanh_forward(const Matrix& input) {
  Matrix out(input.rows, input.cols);
  const auto n = static_cast<Eigen::Index>(input.data.size());
  Eigen::Map<const Eigen::ArrayXd> x(input.data.data(), n);
  Eigen::Map<Eigen::ArrayXd> y(out.data.data(), n);
  y = 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
  return out;
}

Matrix tanh_backward(const Matrix& output, const Matrix& grad_output) {
  if (output.rows != grad_output.rows || output.cols != grad_output.cols) {
    throw DimensionError("tanh_backward: " + shape_string(output) + " vs " + shape_string(grad_output));
  }
  Matrix out(output.rows, output.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double y = output.data[i];
    out.data[i] = grad_output.data[i] * (1.0 - y * y);
  }
  return out;
}

void softmax_inplace(std::span<double> v) {
  if (v.empty()) return;
  const double peak = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - peak);
    total += x;
  }
  for (double& x : v) x /= total;
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  softmax_inplace(out);
  return out;
}

AdamState AdamState::for_params(std::span<const AffineParams> params) {
  AdamState s;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  return s;
}

void adam_step(std::span<AffineParams> params, std::span<const AffineParams> grads, AdamState& state,
               double learning_rate) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw DimensionError("adam_step: parameter/gradient/state counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(params[k], grads[k], "adam_step");
    require_same_shape(params[k], state.first_moment[k], "adam_step");
    require_same_shape(params[k], state.second_moment[k], "adam_step");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double step_size = learning_rate / (1.0 - std::pow(b1, t));
  const double inv_sqrt_bc2 = 1.0 / std::sqrt(1.0 - std::pow(b2, t));
  auto update = [&](Buffer& theta, const Buffer& g, Buffer& m1,
                    Buffer& m2) {
    const auto n = static_cast<Eigen::Index>(theta.size());
    Eigen::Map<Eigen::ArrayXd> th(theta.data(), n), m(m1.data(), n), v(m2.data(), n);
    Eigen::Map<const Eigen::ArrayXd> gr(g.data(), n);
    m = b1 * m + (1.0 - b1) * gr;
    v = b2 * v + (1.0 - b2) * gr.square();
    th -= step_size * m / (v.sqrt() * inv_sqrt_bc2 + state.epsilon);
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    update(params[k].weight.data, grads[k].weight.data, state.first_moment[k].weight.data,
           state.second_moment[k].weight.data);
    update(params[k].bias, grads[k].bias, state.first_moment[k].bias, state.second_moment[k].bias);
  }
}

}  // namespace daema
