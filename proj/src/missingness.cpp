#include "daema/missingness.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "daema/csv.hpp"

namespace daema {

std::size_t MaskMatrix::count_missing() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::size_t MaskMatrix::count_missing_in_row(std::size_t r) const {
  auto rw = row(r);
  return static_cast<std::size_t>(std::count(rw.begin(), rw.end(), std::uint8_t{1}));
}

Matrix MaskMatrix::to_matrix() const {
  Matrix m(rows, cols);
  std::transform(bits.begin(), bits.end(), m.data.begin(), [](std::uint8_t b) { return b ? 1.0 : 0.0; });
  return m;
}

MaskMatrix MaskMatrix::from_matrix(const Matrix& m) {
  MaskMatrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (m.data[i] != 0.0 && m.data[i] != 1.0) throw std::invalid_argument("mask entries must be 0 or 1");
    out.bits[i] = m.data[i] != 0.0 ? 1 : 0;
  }
  return out;
}

MaskMatrix take_rows(const MaskMatrix& m, std::span<const std::size_t> indices) {
  MaskMatrix out(indices.size(), m.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows) throw DimensionError("take_rows: mask row index out of range");
    std::copy_n(m.bits.begin() + indices[i] * m.cols, m.cols, out.bits.begin() + i * m.cols);
  }
  return out;
}

MaskMatrix mcar_mask(std::size_t n, std::size_t d, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("mcar_mask: rate must lie in [0, 1]");
  MaskMatrix m(n, d);
  for (auto& b : m.bits) b = rng.bernoulli(rate) ? 1 : 0;
  return m;
}

double lower_median(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("lower_median: no values");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t k = (v.size() + 1) / 2 - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

bool mnar_selected(const Matrix& ground_truth, std::size_t r, std::size_t low_feature, double low_median,
                   std::size_t high_feature, double high_median) {
  return ground_truth(r, low_feature) <= low_median || ground_truth(r, high_feature) >= high_median;
}

MnarMask mnar_mask(const Matrix& ground_truth, double rate, Rng& rng) {
  const std::size_t n = ground_truth.rows;
  const std::size_t d = ground_truth.cols;
  if (d < 2) throw std::invalid_argument("mnar_mask: needs at least two features, got " + std::to_string(d));
  if (n == 0) throw std::invalid_argument("mnar_mask: empty dataset");
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("mnar_mask: rate must lie in [0, 1]");

  MnarMask out;
  out.low_feature = rng.below(d);
  out.high_feature = rng.below(d - 1);
  if (out.high_feature >= out.low_feature) ++out.high_feature;

  auto column = [&](std::size_t j) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = ground_truth(i, j);
    return c;
  };
  const double low_median = lower_median(column(out.low_feature));
  const double high_median = lower_median(column(out.high_feature));

  out.mask = MaskMatrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mnar_selected(ground_truth, i, out.low_feature, low_median, out.high_feature, high_median)) continue;
    for (std::size_t j = 0; j < d; ++j) out.mask.set(i, j, rng.bernoulli(rate));
  }
  return out;
}

void artificial_mask(std::span<const double> mask_row, double p, Rng& rng, std::span<double> out) {
  if (out.size() != mask_row.size()) throw DimensionError("artificial_mask: output length mismatch");
  for (std::size_t j = 0; j < mask_row.size(); ++j) {
    const bool removed = rng.bernoulli(p);
    out[j] = (mask_row[j] != 0.0 || removed) ? 1.0 : 0.0;
  }
}

std::vector<double> artificial_mask(std::span<const double> mask_row, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("artificial_mask: p must lie in [0, 1]");
  std::vector<double> out(mask_row.size());
  artificial_mask(mask_row, p, rng, out);
  return out;
}

MaskedDataset apply_mask(const Matrix& x, const MaskMatrix& mask) {
  if (x.rows != mask.rows || x.cols != mask.cols) {
    throw DimensionError("apply_mask: data " + shape_string(x) + " vs mask (" + std::to_string(mask.rows) +
                         "x" + std::to_string(mask.cols) + ")");
  }
  MaskedDataset out{x, mask, x};
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    if (mask.bits[i]) out.observed.data[i] = 0.0;
  }
  return out;
}

void write_mask_csv(const std::filesystem::path& path, const MaskMatrix& mask,
                    std::span<const std::string> header) {
  if (header.size() != mask.cols) throw DimensionError("write_mask_csv: header width mismatch");
  CsvTable t;
  t.header.assign(header.begin(), header.end());
  for (std::size_t i = 0; i < mask.rows; ++i) {
    std::vector<std::string> r;
    r.reserve(mask.cols);
    for (std::size_t j = 0; j < mask.cols; ++j) r.push_back(mask.missing(i, j) ? "1" : "0");
    t.rows.push_back(std::move(r));
  }
  write_csv(path, t);
}

MaskMatrix read_mask_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  MaskMatrix m(t.rows.size(), t.header.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      const auto& cell = t.rows[i][j];
      if (cell == "1") {
        m.set(i, j, true);
      } else if (cell != "0") {
        throw ParseError(path.string() + ": row " + std::to_string(i + 1) + ", column " +
                         std::to_string(j + 1) + ": mask cell must be 0 or 1");
      }
    }
  }
  return m;
}

}  // namespace daema
