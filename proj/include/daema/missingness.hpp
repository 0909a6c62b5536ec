#pragma once

// Missingness masks: the MCAR and MNAR injection mechanisms used to build
// benchmark datasets, and the on-the-fly corruption used during training.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "daema/ndcore.hpp"
#include "daema/rng.hpp"

namespace daema {

// Binary n x d matrix; 1 marks a missing cell.
struct MaskMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  MaskMatrix() = default;
  MaskMatrix(std::size_t r, std::size_t c, std::uint8_t fill = 0) : rows(r), cols(c), bits(r * c, fill) {}

  bool missing(std::size_t r, std::size_t c) const { return bits[r * cols + c] != 0; }
  void set(std::size_t r, std::size_t c, bool missing) { bits[r * cols + c] = missing ? 1 : 0; }
  std::span<const std::uint8_t> row(std::size_t r) const { return {bits.data() + r * cols, cols}; }

  std::size_t count_missing() const;
  std::size_t count_missing_in_row(std::size_t r) const;

  // 0.0 / 1.0 entries, as consumed by the networks.
  Matrix to_matrix() const;
  static MaskMatrix from_matrix(const Matrix& m);

  bool operator==(const MaskMatrix&) const = default;
};

MaskMatrix take_rows(const MaskMatrix& m, std::span<const std::size_t> indices);

// Each cell removed independently with probability `rate`.
MaskMatrix mcar_mask(std::size_t n, std::size_t d, double rate, Rng& rng);

struct MnarMask {
  MaskMatrix mask;
  std::size_t low_feature = 0;   // row selected if value <= median of this feature
  std::size_t high_feature = 0;  // or if value >= median of this feature
};

// Lower median: element ceil(n/2)-1 of the sorted values.
double lower_median(std::span<const double> values);

// True when row `r` of `ground_truth` is eligible for removal under MNAR.
bool mnar_selected(const Matrix& ground_truth, std::size_t r, std::size_t low_feature, double low_median,
                   std::size_t high_feature, double high_median);

// Two distinct features are drawn uniformly; rows satisfying the median
// predicate then lose each cell with probability `rate`. Other rows stay
// fully observed.
MnarMask mnar_mask(const Matrix& ground_truth, double rate, Rng& rng);

// Training-time corruption: result = mask OR Bernoulli(p), so originally
// missing cells stay missing.
void artificial_mask(std::span<const double> mask_row, double p, Rng& rng, std::span<double> out);
std::vector<double> artificial_mask(std::span<const double> mask_row, double p, Rng& rng);

// A dataset after corruption. `observed` holds 0 at missing cells.
struct MaskedDataset {
  Matrix observed;
  MaskMatrix mask;
  Matrix ground_truth;
};

MaskedDataset apply_mask(const Matrix& x, const MaskMatrix& mask);

void write_mask_csv(const std::filesystem::path& path, const MaskMatrix& mask,
                    std::span<const std::string> header);
MaskMatrix read_mask_csv(const std::filesystem::path& path);

}  // namespace daema
