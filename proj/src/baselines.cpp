#include "daema/baselines.hpp"

#include <stdexcept>

#include "daema/pipeline.hpp"

namespace daema {

DaeInput parse_dae_input(const std::string& s) {
  if (s == "data+mask") return DaeInput::data_and_mask;
  if (s == "data-only") return DaeInput::data_only;
  throw ConfigError("unknown DAE input mode '" + s + "' (expected data+mask or data-only)");
}

std::string to_string(DaeInput input) { return input == DaeInput::data_and_mask ? "data+mask" : "data-only"; }

DaeModel::DaeModel(std::size_t d, DaeInput input) : d_(d), input_(input) {
  if (d == 0) throw DimensionError("DaeModel: zero dimension");
  const std::size_t in = input == DaeInput::data_and_mask ? 2 * d : d;
  layers_.emplace_back(in, 2 * d);
  layers_.emplace_back(2 * d, 2 * d);
  layers_.emplace_back(2 * d, d);
}

DaeModel DaeModel::random(std::size_t d, DaeInput input, Rng& rng) {
  DaeModel m(d, input);
  for (auto& l : m.layers_) init_uniform(l, rng);
  return m;
}

DaeModel::Trace DaeModel::forward(const Matrix& x_bar, const Matrix& m_bar) const {
  if (x_bar.cols != d_ || m_bar.cols != d_ || x_bar.rows != m_bar.rows) {
    throw DimensionError("DaeModel::forward: inputs " + shape_string(x_bar) + " and " + shape_string(m_bar) +
                         " for d=" + std::to_string(d_));
  }
  Trace t;
  t.input = input_ == DaeInput::data_and_mask ? hconcat(x_bar, m_bar) : x_bar;
  t.hidden1 = tanh_forward(affine_forward(layers_[0], t.input));
  t.hidden2 = tanh_forward(affine_forward(layers_[1], t.hidden1));
  t.output = affine_forward(layers_[2], t.hidden2);
  t.recorded = true;
  return t;
}

std::vector<AffineParams> DaeModel::backward(const Trace& trace, const Matrix& grad_output) const {
  auto grads = zeros_like(layers_);
  backward(trace, grad_output, grads);
  return grads;
}

void DaeModel::backward(const Trace& trace, const Matrix& grad_output, std::vector<AffineParams>& grads) const {
  if (!trace.recorded) throw UsageError("DaeModel::backward called without a recorded forward pass");
  if (grads.size() != layers_.size()) throw DimensionError("DaeModel::backward: gradient buffer has wrong layer count");
  affine_param_grads(trace.hidden2, grad_output, grads[2], false);
  const Matrix g2 = tanh_backward(trace.hidden2, affine_input_grad(layers_[2], grad_output));
  affine_param_grads(trace.hidden1, g2, grads[1], false);
  const Matrix g1 = tanh_backward(trace.hidden1, affine_input_grad(layers_[1], g2));
  affine_param_grads(trace.input, g1, grads[0], false);
}

std::vector<Checkpoint<DaeModel>> train_dae(const MaskedDataset& train, const TrainConfig& cfg, DaeInput input,
                                            Rng& rng, const std::function<void(const TrainingLog&)>& on_log) {
  auto model = DaeModel::random(train.observed.cols, input, rng);
  return fit_checkpoints(std::move(model), train, cfg, rng, on_log);
}

MeanImputer MeanImputer::fit(const Matrix& x, const MaskMatrix& mask) {
  return {fit_norm_stats(x, &mask).mean};
}

Matrix MeanImputer::impute(const Matrix& x, const MaskMatrix& mask) const {
  if (x.rows != mask.rows || x.cols != mask.cols || means.size() != x.cols) {
    throw DimensionError("MeanImputer::impute: shape mismatch for " + shape_string(x));
  }
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      if (mask.missing(i, j)) out(i, j) = means[j];
    }
  }
  return out;
}

std::vector<double> mean_impute(std::span<const double> x, std::span<const double> mask,
                                std::span<const double> means) {
  if (x.size() != mask.size() || x.size() != means.size()) throw DimensionError("mean_impute: length mismatch");
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (mask[j] != 0.0) out[j] = means[j];
  }
  return out;
}

}  // namespace daema
