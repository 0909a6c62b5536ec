#pragma once

#include <algorithm>
#include <cmath>

#include "daema/missingness.hpp"
#include "daema/training.hpp"

// Central finite differences of the masked batch loss over every parameter.
struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  // Relative error restricted to gradients of magnitude >= 1e-3, no floor.
  double max_rel_error_large = 0.0;
  std::size_t checked = 0;
};

struct GradProblem {
  daema::Matrix x, m, x_bar, m_bar;
};

// Batch of `rows` samples with ~30% original and ~20% extra artificial
// missingness, inputs already zeroed where m_bar is set.
inline GradProblem random_problem(std::size_t rows, std::size_t d, daema::Rng& rng) {
  GradProblem p{daema::Matrix(rows, d), daema::Matrix(rows, d), daema::Matrix(rows, d), daema::Matrix(rows, d)};
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    p.m.data[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    p.x.data[i] = p.m.data[i] != 0.0 ? 0.0 : rng.uniform(-2, 2);
  }
  for (std::size_t r = 0; r < rows; ++r) daema::artificial_mask(p.m.row(r), 0.2, rng, p.m_bar.row(r));
  for (std::size_t i = 0; i < p.x.size(); ++i) p.x_bar.data[i] = p.m_bar.data[i] != 0.0 ? 0.0 : p.x.data[i];
  return p;
}

// Relative error |a - n| / max(|a|, |n|), with differences below 1e-9 in
// absolute terms counted as exact (the central difference cannot resolve
// them at h = 1e-5 in double precision).
inline double relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff < 1e-9) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

template <class M>
GradCheck check_gradients(M model, const GradProblem& p, double h = 1e-5) {
  auto loss = [&](const M& net) {
    const auto t = net.forward(p.x_bar, p.m_bar);
    return daema::masked_loss_batch(t.output, p.x, p.m).loss;
  };
  const auto trace = model.forward(p.x_bar, p.m_bar);
  const auto batch = daema::masked_loss_batch(trace.output, p.x, p.m);
  const auto grads = model.backward(trace, batch.gradient);
  GradCheck out;
  auto& params = model.params();
  for (std::size_t l = 0; l < params.size(); ++l) {
    auto probe = [&](double& theta, double analytic) {
      const double saved = theta;
      theta = saved + h;
      const double up = loss(model);
      theta = saved - h;
      const double down = loss(model);
      theta = saved;
      const double numeric = (up - down) / (2 * h);
      const double diff = std::abs(analytic - numeric);
      out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic, numeric));
      out.max_abs_error = std::max(out.max_abs_error, diff);
      const double mag = std::max(std::abs(analytic), std::abs(numeric));
      if (mag >= 1e-3) out.max_rel_error_large = std::max(out.max_rel_error_large, diff / mag);
      ++out.checked;
    };
    for (std::size_t i = 0; i < params[l].weight.size(); ++i) probe(params[l].weight.data[i], grads[l].weight.data[i]);
    for (std::size_t i = 0; i < params[l].bias.size(); ++i) probe(params[l].bias[i], grads[l].bias[i]);
  }
  return out;
}
