#pragma once

// Reference imputers: per-feature mean filling and a plain denoising
// autoencoder trained with the same protocol as DAEMA.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "daema/missingness.hpp"
#include "daema/ndcore.hpp"
#include "daema/training.hpp"

namespace daema {

// What the DAE's first layer sees.
enum class DaeInput {
  data_and_mask,  // [x_bar, m_bar], 2d inputs
  data_only,      // x_bar, d inputs
};

DaeInput parse_dae_input(const std::string& s);
std::string to_string(DaeInput input);

// Three fully-connected layers with outputs 2d, 2d and d; tanh after the
// first two.
class DaeModel {
 public:
  struct Trace {
    bool recorded = false;
    Matrix input;
    Matrix hidden1;
    Matrix hidden2;
    Matrix output;
  };

  DaeModel() = default;
  DaeModel(std::size_t d, DaeInput input);
  static DaeModel random(std::size_t d, DaeInput input, Rng& rng);

  std::size_t d() const { return d_; }
  DaeInput input_mode() const { return input_; }
  std::vector<AffineParams>& params() { return layers_; }
  const std::vector<AffineParams>& params() const { return layers_; }

  Trace forward(const Matrix& x_bar, const Matrix& m_bar) const;
  std::vector<AffineParams> backward(const Trace& trace, const Matrix& grad_output) const;
  // Same, overwriting a buffer shaped like params().
  void backward(const Trace& trace, const Matrix& grad_output, std::vector<AffineParams>& grads) const;

  bool operator==(const DaeModel&) const = default;

 private:
  std::size_t d_ = 0;
  DaeInput input_ = DaeInput::data_and_mask;
  std::vector<AffineParams> layers_;
};

std::vector<Checkpoint<DaeModel>> train_dae(const MaskedDataset& train, const TrainConfig& cfg, DaeInput input,
                                            Rng& rng, const std::function<void(const TrainingLog&)>& on_log = {});

struct MeanImputer {
  std::vector<double> means;

  // All zeros: the training mean in z-normalized space.
  static MeanImputer normalized(std::size_t d) { return {std::vector<double>(d, 0.0)}; }
  static MeanImputer fit(const Matrix& x, const MaskMatrix& mask);

  Matrix impute(const Matrix& x, const MaskMatrix& mask) const;
};

std::vector<double> mean_impute(std::span<const double> x, std::span<const double> mask,
                                std::span<const double> means);

}  // namespace daema
