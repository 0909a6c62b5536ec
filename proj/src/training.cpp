#include "daema/training.hpp"

#include <algorithm>
#include <mutex>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace daema {

void detail::keep_large_allocations() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

void TrainConfig::validate() const {
  if (!(artificial_rate >= 0.0 && artificial_rate <= 1.0)) {
    throw std::invalid_argument("artificial rate must lie in [0, 1]");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (total_steps == 0) throw std::invalid_argument("total steps must be positive");
  for (std::size_t i = 0; i < checkpoint_steps.size(); ++i) {
    const auto s = checkpoint_steps[i];
    if (s < 1 || s > total_steps) {
      throw std::invalid_argument("checkpoint step " + std::to_string(s) + " outside [1, " +
                                  std::to_string(total_steps) + "]");
    }
    if (i > 0 && s <= checkpoint_steps[i - 1]) {
      throw std::invalid_argument("checkpoint steps must be strictly ascending");
    }
  }
}

std::vector<std::size_t> TrainConfig::tail_checkpoints(std::size_t steps) {
  const std::size_t spacing = std::max<std::size_t>(1, steps / 200);
  std::vector<std::size_t> out;
  for (std::size_t k = 5; k-- > 0;) {
    if (steps > k * spacing) out.push_back(steps - k * spacing);
  }
  return out;
}

double masked_loss(std::span<const double> reconstruction, std::span<const double> target,
                   std::span<const double> mask) {
  if (reconstruction.size() != target.size() || target.size() != mask.size()) {
    throw DimensionError("masked_loss: length mismatch");
  }
  double loss = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    const double diff = target[j] - reconstruction[j];
    loss += (1.0 - mask[j]) * diff * diff;
  }
  return loss;
}

BatchLoss masked_loss_batch(const Matrix& reconstruction, const Matrix& target, const Matrix& mask) {
  if (reconstruction.rows != target.rows || reconstruction.cols != target.cols || mask.rows != target.rows ||
      mask.cols != target.cols) {
    throw DimensionError("masked_loss_batch: " + shape_string(reconstruction) + ", " + shape_string(target) +
                         ", " + shape_string(mask));
  }
  BatchLoss out{0.0, Matrix(target.rows, target.cols)};
  if (target.rows == 0) return out;
  const double inv_rows = 1.0 / static_cast<double>(target.rows);
  for (std::size_t r = 0; r < target.rows; ++r) {
    out.loss += masked_loss(reconstruction.row(r), target.row(r), mask.row(r));
    for (std::size_t j = 0; j < target.cols; ++j) {
      out.gradient(r, j) = 2.0 * (1.0 - mask(r, j)) * (reconstruction(r, j) - target(r, j)) * inv_rows;
    }
  }
  out.loss *= inv_rows;
  return out;
}

}  // namespace daema
