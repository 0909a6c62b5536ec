#pragma once

// Training protocol shared by the DAEMA and DAE networks: minibatches drawn
// from the incomplete training set, fresh artificial corruption per visit,
// masked reconstruction loss, Adam, and parameter snapshots at fixed steps.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "daema/missingness.hpp"
#include "daema/ndcore.hpp"
#include "daema/rng.hpp"

namespace daema {

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t step, double loss)
      : std::runtime_error("training diverged at step " + std::to_string(step) + " (loss " +
                           std::to_string(loss) + ")"),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

enum class BatchMode { with_replacement, shuffled_epochs };

struct TrainConfig {
  double artificial_rate = 0.2;
  double learning_rate = 0.001;
  std::size_t batch_size = 64;
  std::size_t total_steps = 40000;
  std::vector<std::size_t> checkpoint_steps{39200, 39400, 39600, 39800, 40000};
  std::uint64_t seed = 0;
  BatchMode batch_mode = BatchMode::with_replacement;
  std::size_t log_every = 1000;

  // Throws ConfigError-like std::invalid_argument on inconsistent values.
  void validate() const;

  // Five evenly spaced checkpoints ending at `steps`, spaced steps/200 apart
  // (39200..40000 for the default schedule).
  static std::vector<std::size_t> tail_checkpoints(std::size_t steps);
};

// Masked reconstruction objective for one row:
// sum_j (1 - m_j) (x_j - xhat_j)^2.
double masked_loss(std::span<const double> reconstruction, std::span<const double> target,
                   std::span<const double> mask);

struct BatchLoss {
  double loss = 0.0;   // mean over rows of the per-row masked loss
  Matrix gradient;     // d loss / d reconstruction
};

BatchLoss masked_loss_batch(const Matrix& reconstruction, const Matrix& target, const Matrix& mask);

template <class M>
concept ImputationModel = requires(M& model, const M& cmodel, const Matrix& a, const typename M::Trace& trace) {
  { model.params() } -> std::same_as<std::vector<AffineParams>&>;
  { cmodel.forward(a, a) } -> std::same_as<typename M::Trace>;
  { cmodel.backward(trace, a) } -> std::same_as<std::vector<AffineParams>>;
  cmodel.backward(trace, a, model.params());
  { trace.output } -> std::convertible_to<const Matrix&>;
};

template <class M>
struct Checkpoint {
  std::size_t step = 0;
  M model;
};

struct TrainingLog {
  std::size_t step = 0;
  double mean_loss = 0.0;  // average batch loss since the previous log line
};

namespace detail {

// Keeps the per-step activation buffers in the heap instead of mapping and
// unmapping them every step (glibc only; a no-op elsewhere).
void keep_large_allocations();

class BatchSampler {
 public:
  BatchSampler(std::size_t n, BatchMode mode) : n_(n), mode_(mode) {}

  std::vector<std::size_t> next(std::size_t batch, Rng& rng) {
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) {
      if (mode_ == BatchMode::with_replacement) {
        i = rng.below(n_);
      } else {
        if (cursor_ >= order_.size()) {
          order_ = rng.permutation(n_);
          cursor_ = 0;
        }
        i = order_[cursor_++];
      }
    }
    return idx;
  }

 private:
  std::size_t n_;
  BatchMode mode_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace detail

// Trains `model` in place. `on_checkpoint(step, model)` fires at each
// configured checkpoint step; `on_log` every cfg.log_every steps.
template <ImputationModel M>
void fit(M& model, const MaskedDataset& data, const TrainConfig& cfg, Rng& rng,
         const std::function<void(std::size_t, const M&)>& on_checkpoint,
         const std::function<void(const TrainingLog&)>& on_log = {}) {
  cfg.validate();
  detail::keep_large_allocations();
  const std::size_t n = data.observed.rows;
  const std::size_t d = data.observed.cols;
  if (n == 0) throw std::invalid_argument("fit: empty training set");
  if (data.mask.rows != n || data.mask.cols != d) throw DimensionError("fit: mask shape differs from data");

  const Matrix full_mask = data.mask.to_matrix();
  AdamState adam = AdamState::for_params(model.params());
  std::vector<AffineParams> grads = zeros_like(model.params());
  detail::BatchSampler sampler(n, cfg.batch_mode);
  auto next_checkpoint = cfg.checkpoint_steps.begin();

  double loss_acc = 0.0;
  std::size_t loss_count = 0;
  Matrix x(cfg.batch_size, d), m(cfg.batch_size, d), m_bar(cfg.batch_size, d), x_bar(cfg.batch_size, d);

  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    const auto idx = sampler.next(cfg.batch_size, rng);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::copy_n(data.observed.row(idx[b]).begin(), d, x.row(b).begin());
      std::copy_n(full_mask.row(idx[b]).begin(), d, m.row(b).begin());
      artificial_mask(m.row(b), cfg.artificial_rate, rng, m_bar.row(b));
      for (std::size_t j = 0; j < d; ++j) x_bar(b, j) = m_bar(b, j) != 0.0 ? 0.0 : x(b, j);
    }

    const auto trace = model.forward(x_bar, m_bar);
    auto batch = masked_loss_batch(trace.output, x, m);
    if (!std::isfinite(batch.loss)) throw TrainingDiverged(step, batch.loss);
    model.backward(trace, batch.gradient, grads);
    adam_step(model.params(), grads, adam, cfg.learning_rate);

    loss_acc += batch.loss;
    ++loss_count;
    if (on_log && cfg.log_every > 0 && step % cfg.log_every == 0) {
      on_log({step, loss_acc / static_cast<double>(loss_count)});
      loss_acc = 0.0;
      loss_count = 0;
    }
    if (next_checkpoint != cfg.checkpoint_steps.end() && *next_checkpoint == step) {
      if (on_checkpoint) on_checkpoint(step, model);
      ++next_checkpoint;
    }
  }
}

template <ImputationModel M>
std::vector<Checkpoint<M>> fit_checkpoints(M model, const MaskedDataset& data, const TrainConfig& cfg, Rng& rng,
                                           const std::function<void(const TrainingLog&)>& on_log = {}) {
  std::vector<Checkpoint<M>> out;
  fit<M>(model, data, cfg, rng, [&](std::size_t step, const M& snapshot) { out.push_back({step, snapshot}); },
         on_log);
  return out;
}

// Completes `x` where `mask` is set: observed cells are copied through
// untouched, missing cells take the network's reconstruction. The network
// sees the true mask with zeros at missing cells, with no extra corruption.
template <ImputationModel M>
Matrix impute(const M& model, const Matrix& x, const MaskMatrix& mask, std::size_t chunk = 512) {
  if (x.rows != mask.rows || x.cols != mask.cols) throw DimensionError("impute: mask shape differs from data");
  Matrix out = x;
  for (std::size_t start = 0; start < x.rows; start += chunk) {
    const std::size_t rows = std::min(chunk, x.rows - start);
    Matrix xb(rows, x.cols), mb(rows, x.cols);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < x.cols; ++j) {
        const bool miss = mask.missing(start + r, j);
        mb(r, j) = miss ? 1.0 : 0.0;
        xb(r, j) = miss ? 0.0 : x(start + r, j);
      }
    }
    const auto trace = model.forward(xb, mb);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < x.cols; ++j) {
        if (mask.missing(start + r, j)) out(start + r, j) = trace.output(r, j);
      }
    }
  }
  return out;
}

template <ImputationModel M>
std::vector<double> impute_row(const M& model, std::span<const double> x, std::span<const double> mask) {
  if (x.size() != mask.size()) throw DimensionError("impute_row: length mismatch");
  Matrix xm(1, x.size());
  MaskMatrix mm(1, x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    xm(0, j) = x[j];
    mm.set(0, j, mask[j] != 0.0);
  }
  const Matrix out = impute(model, xm, mm);
  return {out.data.begin(), out.data.end()};
}

}  // namespace daema
