#include "daema/daema.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace daema {

DaemaModel::DaemaModel(DaemaDims dims) : dims_(dims) {
  if (dims.d == 0 || dims.d_prime == 0 || dims.d_z == 0) throw DimensionError("DaemaModel: zero dimension");
  const std::size_t w = dims.map_size();
  layers_.emplace_back(2 * dims.d, w);  // encoder hidden
  layers_.emplace_back(w, w);           // encoder output
  layers_.emplace_back(dims.d, w);      // selector
  layers_.emplace_back(dims.d_z, dims.d);  // decoder
}

DaemaModel DaemaModel::random(DaemaDims dims, Rng& rng) {
  DaemaModel m(dims);
  for (auto& l : m.layers_) init_uniform(l, rng);
  return m;
}

void attend_flat(std::span<const double> features, std::span<const double> selection, std::size_t d_prime,
                 std::size_t d_z, std::span<double> weights, std::span<double> latent) {
  const std::size_t w = d_prime * d_z;
  if (features.size() != w || selection.size() != w || weights.size() != w || latent.size() != d_z) {
    throw DimensionError("attend: expected maps of size " + std::to_string(d_prime) + "x" + std::to_string(d_z));
  }
  // Softmax down each column; rows of the map are contiguous, so work row by row.
  thread_local std::vector<double> peak, total;
  peak.assign(selection.begin(), selection.begin() + static_cast<std::ptrdiff_t>(d_z));
  for (std::size_t k = 1; k < d_prime; ++k) {
    const double* s = selection.data() + k * d_z;
    for (std::size_t j = 0; j < d_z; ++j) peak[j] = std::max(peak[j], s[j]);
  }
  for (std::size_t k = 0; k < d_prime; ++k) {
    const double* s = selection.data() + k * d_z;
    double* a = weights.data() + k * d_z;
    for (std::size_t j = 0; j < d_z; ++j) a[j] = s[j] - peak[j];
  }
  const auto w_size = static_cast<Eigen::Index>(w);
  Eigen::Map<Eigen::ArrayXd>(weights.data(), w_size) = Eigen::Map<Eigen::ArrayXd>(weights.data(), w_size).exp();
  total.assign(d_z, 0.0);
  for (std::size_t k = 0; k < d_prime; ++k) {
    const double* a = weights.data() + k * d_z;
    for (std::size_t j = 0; j < d_z; ++j) total[j] += a[j];
  }
  for (std::size_t j = 0; j < d_z; ++j) {
    total[j] = 1.0 / total[j];
    latent[j] = 0.0;
  }
  for (std::size_t k = 0; k < d_prime; ++k) {
    double* a = weights.data() + k * d_z;
    const double* f = features.data() + k * d_z;
    for (std::size_t j = 0; j < d_z; ++j) {
      a[j] *= total[j];
      latent[j] += a[j] * f[j];
    }
  }
}

DaemaModel::Trace DaemaModel::forward(const Matrix& x_bar, const Matrix& m_bar) const {
  if (x_bar.cols != dims_.d || m_bar.cols != dims_.d || x_bar.rows != m_bar.rows) {
    throw DimensionError("DaemaModel::forward: inputs " + shape_string(x_bar) + " and " + shape_string(m_bar) +
                         " for d=" + std::to_string(dims_.d));
  }
  Trace t;
  t.input = hconcat(x_bar, m_bar);
  t.hidden = tanh_forward(affine_forward(layers_[kEncoderHidden], t.input));
  t.features = tanh_forward(affine_forward(layers_[kEncoderOutput], t.hidden));
  t.mask = m_bar;
  const Matrix selection = affine_forward(layers_[kSelector], m_bar);

  const std::size_t rows = x_bar.rows;
  t.weights = Matrix(rows, dims_.map_size());
  t.latent = Matrix(rows, dims_.d_z);
  for (std::size_t b = 0; b < rows; ++b) {
    attend_flat(t.features.row(b), selection.row(b), dims_.d_prime, dims_.d_z, t.weights.row(b), t.latent.row(b));
  }
  t.output = affine_forward(layers_[kDecoder], t.latent);
  t.recorded = true;
  return t;
}

std::vector<AffineParams> DaemaModel::backward(const Trace& trace, const Matrix& grad_output) const {
  auto grads = zeros_like(layers_);
  backward(trace, grad_output, grads);
  return grads;
}

void DaemaModel::backward(const Trace& trace, const Matrix& grad_output, std::vector<AffineParams>& grads) const {
  if (!trace.recorded) throw UsageError("DaemaModel::backward called without a recorded forward pass");
  if (grad_output.rows != trace.output.rows || grad_output.cols != trace.output.cols) {
    throw DimensionError("DaemaModel::backward: gradient " + shape_string(grad_output) + " vs output " +
                         shape_string(trace.output));
  }
  if (grads.size() != layers_.size()) throw DimensionError("DaemaModel::backward: gradient buffer has wrong layer count");
  affine_param_grads(trace.latent, grad_output, grads[kDecoder], false);
  const Matrix grad_latent = affine_input_grad(layers_[kDecoder], grad_output);

  const std::size_t rows = grad_output.rows;
  const std::size_t dp = dims_.d_prime;
  const std::size_t dz = dims_.d_z;
  Matrix grad_features(rows, dims_.map_size());
  Matrix grad_selection(rows, dims_.map_size());
  std::vector<double> dot(dz);
  for (std::size_t b = 0; b < rows; ++b) {
    const auto f = trace.features.row(b);
    const auto a = trace.weights.row(b);
    const auto gz = grad_latent.row(b);
    auto gf = grad_features.row(b);
    auto gs = grad_selection.row(b);
    std::fill(dot.begin(), dot.end(), 0.0);
    for (std::size_t k = 0; k < dp; ++k) {
      for (std::size_t j = 0; j < dz; ++j) {
        const std::size_t i = k * dz + j;
        gf[i] = gz[j] * a[i];
        dot[j] += a[i] * gz[j] * f[i];
      }
    }
    // Softmax Jacobian: ds_k = a_k (g_k - sum_k' a_k' g_k') with g_k = dz * f_k.
    for (std::size_t k = 0; k < dp; ++k) {
      for (std::size_t j = 0; j < dz; ++j) {
        const std::size_t i = k * dz + j;
        gs[i] = a[i] * (gz[j] * f[i] - dot[j]);
      }
    }
  }

  affine_param_grads(trace.mask, grad_selection, grads[kSelector], false);
  const Matrix grad_pre_features = tanh_backward(trace.features, grad_features);
  affine_param_grads(trace.hidden, grad_pre_features, grads[kEncoderOutput], false);
  const Matrix grad_hidden = affine_input_grad(layers_[kEncoderOutput], grad_pre_features);
  const Matrix grad_pre_hidden = tanh_backward(trace.hidden, grad_hidden);
  affine_param_grads(trace.input, grad_pre_hidden, grads[kEncoderHidden], false);
}

namespace {

Matrix as_row(std::span<const double> v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data.begin());
  return m;
}

Matrix reshape_map(std::span<const double> flat, std::size_t d_prime, std::size_t d_z) {
  Matrix m(d_prime, d_z);
  std::copy(flat.begin(), flat.end(), m.data.begin());
  return m;
}

}  // namespace

Matrix encode_features(const DaemaModel& model, std::span<const double> x_bar, std::span<const double> m_bar) {
  const auto& dims = model.dims();
  if (x_bar.size() != dims.d || m_bar.size() != dims.d) {
    throw DimensionError("encode_features: expected rows of length " + std::to_string(dims.d));
  }
  const Matrix input = hconcat(as_row(x_bar), as_row(m_bar));
  const Matrix hidden = tanh_forward(affine_forward(model.layer(DaemaModel::kEncoderHidden), input));
  const Matrix out = tanh_forward(affine_forward(model.layer(DaemaModel::kEncoderOutput), hidden));
  return reshape_map(out.data, dims.d_prime, dims.d_z);
}

Matrix select_features(const DaemaModel& model, std::span<const double> m_bar) {
  const auto& dims = model.dims();
  const Matrix out = affine_forward(model.layer(DaemaModel::kSelector), as_row(m_bar));
  return reshape_map(out.data, dims.d_prime, dims.d_z);
}

Matrix attention_weights(const Matrix& selection) {
  Matrix w(selection.rows, selection.cols);
  std::vector<double> column(selection.rows);
  for (std::size_t j = 0; j < selection.cols; ++j) {
    for (std::size_t k = 0; k < selection.rows; ++k) column[k] = selection(k, j);
    softmax_inplace(column);
    for (std::size_t k = 0; k < selection.rows; ++k) w(k, j) = column[k];
  }
  return w;
}

std::vector<double> attend(const Matrix& features, const Matrix& selection) {
  if (features.rows != selection.rows || features.cols != selection.cols) {
    throw DimensionError("attend: feature map " + shape_string(features) + " vs selection " +
                         shape_string(selection));
  }
  std::vector<double> weights(features.size());
  std::vector<double> z(features.cols);
  attend_flat(features.data, selection.data, features.rows, features.cols, weights, z);
  return z;
}

std::vector<double> decode(const DaemaModel& model, std::span<const double> latent) {
  const Matrix out = affine_forward(model.layer(DaemaModel::kDecoder), as_row(latent));
  return {out.data.begin(), out.data.end()};
}

std::vector<Checkpoint<DaemaModel>> train_daema(const MaskedDataset& train, const TrainConfig& cfg, Rng& rng,
                                                const std::function<void(const TrainingLog&)>& on_log) {
  auto model = DaemaModel::random(DaemaDims::for_features(train.observed.cols), rng);
  return fit_checkpoints(std::move(model), train, cfg, rng, on_log);
}

std::vector<Checkpoint<DaemaModel>> train_daema(const MaskedDataset& train, const TrainConfig& cfg,
                                                const std::function<void(const TrainingLog&)>& on_log) {
  Rng rng = Rng::derive(cfg.seed, "train-daema");
  return train_daema(train, cfg, rng, on_log);
}

}  // namespace daema
