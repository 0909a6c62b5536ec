#pragma once

// Dense kernel shared by every model: row-major matrices, fully-connected
// layers with their backward passes, tanh, softmax and Adam.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "daema/rng.hpp"

namespace daema {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an API is driven in the wrong order (e.g. backward without forward).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// 64-byte aligned storage. Eigen picks its vectorized prologue from the buffer
// address, so unaligned heap blocks would change summation order (and the
// last bits of results) from one run to the next.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Buffer data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  bool operator==(const Matrix&) const = default;
};

std::string shape_string(const Matrix& m);
bool all_finite(const Matrix& m);

// Rows `indices` of `m`, in the given order.
Matrix take_rows(const Matrix& m, std::span<const std::size_t> indices);

// [a | b] for matrices with equal row counts.
Matrix hconcat(const Matrix& a, const Matrix& b);

// Fully-connected layer: y = W x + b with W stored out x in.
struct AffineParams {
  Matrix weight;
  Buffer bias;

  AffineParams() = default;
  AffineParams(std::size_t in, std::size_t out) : weight(out, in), bias(out, 0.0) {}

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  bool operator==(const AffineParams&) const = default;
};

// Weights uniform in [-1/sqrt(in), 1/sqrt(in)], biases zero.
void init_uniform(AffineParams& p, Rng& rng);

// Same shapes as `params`, all zeros.
std::vector<AffineParams> zeros_like(std::span<const AffineParams> params);

// output[i] = W input[i] + b for every row i of `input`.
Matrix affine_forward(const AffineParams& p, const Matrix& input);

// Given the forward `input` and dL/d(output), adds dL/dW and dL/db into `grad`
// and returns dL/d(input).
Matrix affine_backward(const AffineParams& p, const Matrix& input, const Matrix& grad_output,
                       AffineParams& grad);

// The two halves of affine_backward. With `accumulate` false the parameter
// gradients overwrite `grad` instead of adding to it.
void affine_param_grads(const Matrix& input, const Matrix& grad_output, AffineParams& grad, bool accumulate);
Matrix affine_input_grad(const AffineParams& p, const Matrix& grad_output);

// Evaluated as 1 - 2 / (exp(2x) + 1) with vectorized exp; within a few ulp of
// std::tanh in absolute terms.
Matrix tanh_forward(const Matrix& input);
// Takes the tanh *output*, since tanh' = 1 - tanh^2.
Matrix tanh_backward(const Matrix& output, const Matrix& grad_output);

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> v);
void softmax_inplace(std::span<double> v);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<AffineParams> first_moment;
  std::vector<AffineParams> second_moment;

  static AdamState for_params(std::span<const AffineParams> params);
};

// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<AffineParams> params, std::span<const AffineParams> grads, AdamState& state,
               double learning_rate);

}  // namespace daema
