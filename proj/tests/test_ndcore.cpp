#include <doctest.h>

#include <cmath>
#include <limits>

#include "daema/ndcore.hpp"
#include "oracles.hpp"

using namespace daema;

TEST_CASE("affine_forward on a hand example") {
  AffineParams p(2, 3);
  p.weight = Matrix::from_rows({{1, 2}, {0, -1}, {3, 0.5}});
  p.bias = {0.5, 0, -1};
  const Matrix x = Matrix::from_rows({{1, 1}, {2, -2}});
  const Matrix y = affine_forward(p, x);
  CHECK(y == Matrix::from_rows({{3.5, -1, 2.5}, {-1.5, 2, 4}}));
}

TEST_CASE("affine_forward matches the triple loop") {
  Rng rng(11);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const std::size_t in = 1 + rng.below(40), out = 1 + rng.below(40), rows = 1 + rng.below(70);
    AffineParams p(in, out);
    init_uniform(p, rng);
    for (auto& b : p.bias) b = rng.uniform(-1, 1);
    Matrix x(rows, in);
    for (auto& v : x.data) v = rng.uniform(-3, 3);
    const Matrix got = affine_forward(p, x);
    const Matrix want = oracle::affine_batch(p, x);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-13));
  }
}

TEST_CASE("shape mismatches throw") {
  AffineParams p(3, 2);
  CHECK_THROWS_AS(affine_forward(p, Matrix(4, 2)), DimensionError);
  AffineParams g(3, 2);
  CHECK_THROWS_AS(affine_backward(p, Matrix(4, 3), Matrix(4, 3), g), DimensionError);
  AffineParams wrong(2, 2);
  CHECK_THROWS_AS(affine_backward(p, Matrix(4, 3), Matrix(4, 2), wrong), DimensionError);
  CHECK_THROWS_AS(hconcat(Matrix(2, 1), Matrix(3, 1)), DimensionError);
}

TEST_CASE("init_uniform respects the fan-in bound") {
  Rng rng(1);
  AffineParams p(25, 40);
  init_uniform(p, rng);
  double lo = 1, hi = -1;
  for (double w : p.weight.data) {
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  CHECK(lo >= -0.2);
  CHECK(hi < 0.2);
  CHECK(lo < -0.19);
  CHECK(hi > 0.19);
  for (double b : p.bias) CHECK(b == 0.0);
}

TEST_CASE("tanh values") {
  const Matrix y = tanh_forward(Matrix::from_rows({{0.0, 1.0, -1.0, 30.0, -800.0, 800.0, 1e-9}}));
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == doctest::Approx(0.7615941559557649).epsilon(1e-15));
  CHECK(y(0, 2) == doctest::Approx(-0.7615941559557649).epsilon(1e-15));
  CHECK(y(0, 3) == 1.0);
  CHECK(y(0, 4) == -1.0);
  CHECK(y(0, 5) == 1.0);
  CHECK(std::abs(y(0, 6) - 1e-9) < 1e-16);
  Rng rng(3);
  Matrix x(1, 5000);
  for (auto& v : x.data) v = rng.uniform(-20, 20);
  const Matrix t = tanh_forward(x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(t.data[i] - std::tanh(x.data[i])) < 4e-16);
  CHECK(std::isnan(tanh_forward(Matrix(1, 1, std::numeric_limits<double>::quiet_NaN()))(0, 0)));
}

TEST_CASE("tanh_backward uses 1 - y^2") {
  const Matrix y = Matrix::from_rows({{0.5, -0.25}});
  const Matrix g = tanh_backward(y, Matrix::from_rows({{2.0, 4.0}}));
  CHECK(g(0, 0) == doctest::Approx(1.5));
  CHECK(g(0, 1) == doctest::Approx(3.75));
}

TEST_CASE("softmax against a long double oracle") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + rng.below(12));
    for (auto& x : v) x = rng.uniform(-50, 50);
    const auto s = softmax(v);
    long double peak = *std::max_element(v.begin(), v.end()), tot = 0;
    for (double x : v) tot += std::exp(static_cast<long double>(x) - peak);
    double sum = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(std::abs(s[i] - static_cast<double>(std::exp(v[i] - peak) / tot)) < 1e-15);
      sum += s[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-14);
  }
  // Huge logits do not overflow.
  const auto big = softmax(std::vector<double>{1000.0, 1000.0});
  CHECK(big[0] == doctest::Approx(0.5));
}

TEST_CASE("affine gradients against finite differences") {
  Rng rng(9);
  AffineParams p(4, 3);
  init_uniform(p, rng);
  for (auto& b : p.bias) b = rng.uniform(-1, 1);
  Matrix x(5, 4), target(5, 3);
  for (auto& v : x.data) v = rng.uniform(-1, 1);
  for (auto& v : target.data) v = rng.uniform(-1, 1);
  // L = sum (tanh(Wx+b) - t)^2
  auto loss = [&](const AffineParams& q, const Matrix& in) {
    const Matrix y = tanh_forward(affine_forward(q, in));
    double l = 0;
    for (std::size_t i = 0; i < y.size(); ++i) l += (y.data[i] - target.data[i]) * (y.data[i] - target.data[i]);
    return l;
  };
  const Matrix y = tanh_forward(affine_forward(p, x));
  Matrix gy(5, 3);
  for (std::size_t i = 0; i < y.size(); ++i) gy.data[i] = 2 * (y.data[i] - target.data[i]);
  AffineParams grad(4, 3);
  const Matrix gx = affine_backward(p, x, tanh_backward(y, gy), grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.weight.size(); ++i) {
    AffineParams a = p, b = p;
    a.weight.data[i] += h;
    b.weight.data[i] -= h;
    CHECK(grad.weight.data[i] == doctest::Approx((loss(a, x) - loss(b, x)) / (2 * h)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < p.bias.size(); ++i) {
    AffineParams a = p, b = p;
    a.bias[i] += h;
    b.bias[i] -= h;
    CHECK(grad.bias[i] == doctest::Approx((loss(a, x) - loss(b, x)) / (2 * h)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    Matrix a = x, b = x;
    a.data[i] += h;
    b.data[i] -= h;
    CHECK(gx.data[i] == doctest::Approx((loss(p, a) - loss(p, b)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("affine_backward accumulates, affine_param_grads can overwrite") {
  AffineParams p(1, 1);
  p.weight(0, 0) = 2.0;
  const Matrix x = Matrix::from_rows({{3.0}});
  const Matrix g = Matrix::from_rows({{1.0}});
  AffineParams grad(1, 1);
  affine_backward(p, x, g, grad);
  affine_backward(p, x, g, grad);
  CHECK(grad.weight(0, 0) == 6.0);
  CHECK(grad.bias[0] == 2.0);
  affine_param_grads(x, g, grad, false);
  CHECK(grad.weight(0, 0) == 3.0);
  CHECK(grad.bias[0] == 1.0);
  CHECK(affine_input_grad(p, g)(0, 0) == 2.0);
}

TEST_CASE("Adam first step moves each parameter by about lr") {
  AffineParams p(3, 2);
  p.weight.data = {1, 2, 3, 4, 5, 6};
  AffineParams g(3, 2);
  g.weight.data = {0.5, -2, 1e-3, 7, -0.1, 3};
  g.bias = {1, -1};
  std::vector<AffineParams> params{p}, grads{g};
  auto st = AdamState::for_params(params);
  adam_step(params, grads, st, 1e-3);
  for (std::size_t i = 0; i < 6; ++i) {
    const double moved = p.weight.data[i] - params[0].weight.data[i];
    CHECK(std::abs(std::abs(moved) - 1e-3) < 1e-7);
    CHECK((moved > 0) == (g.weight.data[i] > 0));
  }
  CHECK(st.step == 1);
}

TEST_CASE("Adam two steps against a scalar oracle") {
  AffineParams p(1, 1);
  p.weight(0, 0) = 0.3;
  p.bias[0] = -0.2;
  std::vector<AffineParams> params{p};
  auto st = AdamState::for_params(params);
  const double gs[2] = {0.4, -1.5};
  long double theta = 0.3, m = 0, v = 0;
  for (int t = 1; t <= 2; ++t) {
    AffineParams g(1, 1);
    g.weight(0, 0) = gs[t - 1];
    std::vector<AffineParams> grads{g};
    adam_step(params, grads, st, 0.01);
    m = 0.9L * m + 0.1L * gs[t - 1];
    v = 0.999L * v + 0.001L * gs[t - 1] * gs[t - 1];
    const long double mh = m / (1 - std::pow(0.9L, t)), vh = v / (1 - std::pow(0.999L, t));
    theta -= 0.01L * mh / (std::sqrt(vh) + 1e-8L);
    CHECK(params[0].weight(0, 0) == doctest::Approx(static_cast<double>(theta)).epsilon(1e-12));
  }
  CHECK(params[0].bias[0] == -0.2);  // zero gradient leaves it alone
}

TEST_CASE("adam_step rejects mismatched shapes") {
  std::vector<AffineParams> params{AffineParams(2, 2)};
  std::vector<AffineParams> grads{AffineParams(3, 2)};
  auto st = AdamState::for_params(params);
  CHECK_THROWS_AS(adam_step(params, grads, st, 1e-3), DimensionError);
}

TEST_CASE("take_rows and all_finite") {
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<std::size_t> idx{2, 0, 2};
  CHECK(take_rows(m, idx) == Matrix::from_rows({{5, 6}, {1, 2}, {5, 6}}));
  CHECK(all_finite(m));
  Matrix n = m;
  n(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(all_finite(n));
}
