#pragma once

// Dataset ingestion and preprocessing: CSV loading, row cleaning, the 70/30
// train/test split and z-normalization fitted on observed training values.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "daema/missingness.hpp"
#include "daema/ndcore.hpp"
#include "daema/rng.hpp"

namespace daema {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task { classification, regression, none };

Task parse_task(const std::string& s);
std::string to_string(Task t);

struct Dataset {
  // NA cells are NaN until cleaned away.
  Matrix features;
  std::vector<std::string> feature_names;
  // Class index (classification) or target value (regression). NaN for NA.
  std::optional<std::vector<double>> label;
  std::string label_name;
  std::vector<std::string> class_names;
  Task task = Task::none;
  // Row number in the source file (0-based, header excluded).
  std::vector<std::size_t> row_ids;

  std::size_t n() const { return features.rows; }
  std::size_t d() const { return features.cols; }
  bool row_has_na(std::size_t r) const;
};

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> indices);

// Loads a header-first CSV. When `label_column` is given it is separated from
// the features; classification labels are mapped to indices in sorted order
// of their distinct values.
Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column, Task task);

struct CleanRule {
  enum class Kind {
    drop_na,        // rows with any NA feature or label
    drop_outliers,  // rows with |z| > z_threshold on `feature`, repeated to a fixed point
    drop_rows,      // rows whose source row id is listed
  };
  Kind kind = Kind::drop_na;
  std::size_t feature = 0;
  double z_threshold = 0.0;
  std::vector<std::size_t> row_ids;

  static CleanRule drop_na() { return {}; }
  static CleanRule outliers(std::size_t feature, double z) { return {Kind::drop_outliers, feature, z, {}}; }
  static CleanRule rows(std::vector<std::size_t> ids) { return {Kind::drop_rows, 0, 0.0, std::move(ids)}; }
};

// "drop-na", "outliers:<feature>:<z>", "rows:<id>;<id>;..."
CleanRule parse_clean_rule(const std::string& text);
std::string to_string(const CleanRule& rule);

struct CleanResult {
  Dataset dataset;
  std::size_t removed_rows = 0;
};

CleanResult clean(const Dataset& ds, std::span<const CleanRule> rules);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Random permutation; the first floor(ratio * n) rows form the train part.
SplitIndices split_indices(std::size_t n, double ratio, Rng& rng);

enum class ScaleMode { std_dev, variance };

ScaleMode parse_scale_mode(const std::string& s);
std::string to_string(ScaleMode m);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> scale;
};

inline constexpr double kScaleFloor = 1e-9;

// Per-feature mean and scale over cells not marked in `mask` (all cells when
// `mask` is null). Population statistics; scale floored at kScaleFloor.
NormStats fit_norm_stats(const Matrix& x, const MaskMatrix* mask, ScaleMode mode = ScaleMode::std_dev);
Matrix normalize(const Matrix& x, const NormStats& stats);
Matrix denormalize(const Matrix& x, const NormStats& stats);

struct SplitPair {
  Dataset train;
  Dataset test;
  SplitIndices indices;
  std::optional<NormStats> stats;
};

SplitPair split(const Dataset& ds, double ratio, Rng& rng);

// Fits statistics on the train features (ignoring cells marked in
// `train_mask`) and applies them to both parts.
SplitPair znormalize(const SplitPair& pair, const MaskMatrix* train_mask = nullptr,
                     ScaleMode mode = ScaleMode::std_dev);

}  // namespace daema
