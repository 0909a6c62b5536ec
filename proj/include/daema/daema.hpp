#pragma once

// Denoising autoencoder with mask attention.
//
//   Feature Encoder  [x_bar, m_bar] (2d) -> tanh(W1) (d'*dz) -> tanh(W2) (d'*dz) -> F (d' x dz)
//   Feature Selector m_bar (d) -> W3 (d'*dz) -> S (d' x dz)
//   Attention        z_j = softmax(S[:, j]) . F[:, j]
//   Feature Decoder  z (dz) -> W4 (d)
//
// Flat layer outputs of length d'*dz are reshaped row-major: entry
// (k, j) of the (d' x dz) map sits at index k*dz + j.

#include <cstddef>
#include <span>
#include <vector>

#include "daema/ndcore.hpp"
#include "daema/rng.hpp"
#include "daema/training.hpp"

namespace daema {

struct DaemaDims {
  std::size_t d = 0;
  std::size_t d_prime = 0;  // candidate values per latent feature
  std::size_t d_z = 0;      // latent features

  std::size_t map_size() const { return d_prime * d_z; }
  // d' = d_z = 2d.
  static DaemaDims for_features(std::size_t d) { return {d, 2 * d, 2 * d}; }
  bool operator==(const DaemaDims&) const = default;
};

class DaemaModel {
 public:
  enum Layer : std::size_t { kEncoderHidden = 0, kEncoderOutput = 1, kSelector = 2, kDecoder = 3 };

  struct Trace {
    bool recorded = false;
    Matrix input;     // [x_bar, m_bar]
    Matrix hidden;    // tanh of the first encoder layer
    Matrix features;  // F, flattened per row
    Matrix mask;      // m_bar
    Matrix weights;   // column-softmaxed S, flattened per row
    Matrix latent;    // z
    Matrix output;    // x_hat
  };

  DaemaModel() = default;
  // All parameters zero.
  explicit DaemaModel(DaemaDims dims);
  static DaemaModel random(DaemaDims dims, Rng& rng);

  const DaemaDims& dims() const { return dims_; }
  std::vector<AffineParams>& params() { return layers_; }
  const std::vector<AffineParams>& params() const { return layers_; }
  AffineParams& layer(Layer l) { return layers_[l]; }
  const AffineParams& layer(Layer l) const { return layers_[l]; }

  // Batched forward pass; rows of `x_bar` must hold 0 where `m_bar` is 1.
  Trace forward(const Matrix& x_bar, const Matrix& m_bar) const;
  // Parameter gradients given d loss / d output.
  std::vector<AffineParams> backward(const Trace& trace, const Matrix& grad_output) const;
  // Same, overwriting a buffer shaped like params().
  void backward(const Trace& trace, const Matrix& grad_output, std::vector<AffineParams>& grads) const;

  bool operator==(const DaemaModel&) const = default;

 private:
  DaemaDims dims_;
  std::vector<AffineParams> layers_;
};

// Single-sample building blocks.
Matrix encode_features(const DaemaModel& model, std::span<const double> x_bar, std::span<const double> m_bar);
Matrix select_features(const DaemaModel& model, std::span<const double> m_bar);
// Column-wise softmax of the selection map.
Matrix attention_weights(const Matrix& selection);
std::vector<double> attend(const Matrix& features, const Matrix& selection);
std::vector<double> decode(const DaemaModel& model, std::span<const double> latent);

// Attention on flattened (d' x dz) maps; writes the softmax weights and z.
void attend_flat(std::span<const double> features, std::span<const double> selection, std::size_t d_prime,
                 std::size_t d_z, std::span<double> weights, std::span<double> latent);

// Random initialization from `rng`, then training on the same stream.
std::vector<Checkpoint<DaemaModel>> train_daema(const MaskedDataset& train, const TrainConfig& cfg, Rng& rng,
                                                const std::function<void(const TrainingLog&)>& on_log = {});
// As above with a stream derived from cfg.seed.
std::vector<Checkpoint<DaemaModel>> train_daema(const MaskedDataset& train, const TrainConfig& cfg,
                                                const std::function<void(const TrainingLog&)>& on_log = {});

}  // namespace daema
