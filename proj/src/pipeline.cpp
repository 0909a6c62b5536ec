#include "daema/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "daema/csv.hpp"

namespace daema {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell_ref(const std::filesystem::path& path, std::size_t row, const std::string& column) {
  return path.string() + ": row " + std::to_string(row + 2) + ", column '" + column + "'";
}

}  // namespace

Task parse_task(const std::string& s) {
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  if (s == "none") return Task::none;
  throw ConfigError("unknown task '" + s + "' (expected classification, regression or none)");
}

std::string to_string(Task t) {
  switch (t) {
    case Task::classification: return "classification";
    case Task::regression: return "regression";
    case Task::none: return "none";
  }
  return "none";
}

bool Dataset::row_has_na(std::size_t r) const {
  auto rw = features.row(r);
  if (std::any_of(rw.begin(), rw.end(), [](double v) { return std::isnan(v); })) return true;
  return label && std::isnan((*label)[r]);
}

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.features = take_rows(ds.features, indices);
  out.feature_names = ds.feature_names;
  out.label_name = ds.label_name;
  out.class_names = ds.class_names;
  out.task = ds.task;
  if (ds.label) {
    std::vector<double> y(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) y[i] = (*ds.label)[indices[i]];
    out.label = std::move(y);
  }
  out.row_ids.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out.row_ids[i] = ds.row_ids[indices[i]];
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column, Task task) {
  const CsvTable table = read_csv(path);
  std::ptrdiff_t label_idx = -1;
  if (label_column) {
    label_idx = table.column_index(*label_column);
    if (label_idx < 0) throw ConfigError(path.string() + ": label column '" + *label_column + "' not found");
    if (task == Task::none) throw ConfigError(path.string() + ": a label column needs a task type");
  }

  Dataset ds;
  ds.task = label_column ? task : Task::none;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) != label_idx) ds.feature_names.push_back(table.header[j]);
  }
  if (ds.feature_names.size() < 2) {
    throw ConfigError(path.string() + ": need at least 2 feature columns, found " +
                      std::to_string(ds.feature_names.size()));
  }

  const std::size_t n = table.rows.size();
  ds.features = Matrix(n, ds.feature_names.size());
  ds.row_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.row_ids[i] = i;
    std::size_t out_col = 0;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      if (static_cast<std::ptrdiff_t>(j) == label_idx) continue;
      const auto& cell = table.rows[i][j];
      double v = kNaN;
      if (!is_na_token(cell) && !parse_double(cell, v)) {
        throw ParseError(cell_ref(path, i, table.header[j]) + ": cannot parse '" + cell + "' as a number");
      }
      ds.features(i, out_col++) = v;
    }
  }

  if (label_idx >= 0) {
    ds.label_name = *label_column;
    std::vector<double> y(n, kNaN);
    const auto li = static_cast<std::size_t>(label_idx);
    if (task == Task::regression) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = table.rows[i][li];
        if (is_na_token(cell)) continue;
        if (!parse_double(cell, y[i])) {
          throw ParseError(cell_ref(path, i, ds.label_name) + ": cannot parse '" + cell + "' as a number");
        }
      }
    } else {
      std::vector<std::string> distinct;
      for (const auto& r : table.rows) {
        if (!is_na_token(r[li])) distinct.push_back(r[li]);
      }
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      const bool numeric = std::all_of(distinct.begin(), distinct.end(), [](const std::string& s) {
        double v;
        return parse_double(s, v);
      });
      if (numeric) {
        std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
          double x = 0, z = 0;
          parse_double(a, x);
          parse_double(b, z);
          return x < z;
        });
      }
      std::map<std::string, double> index;
      for (std::size_t k = 0; k < distinct.size(); ++k) index[distinct[k]] = static_cast<double>(k);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = table.rows[i][li];
        if (!is_na_token(cell)) y[i] = index.at(cell);
      }
      ds.class_names = std::move(distinct);
    }
    ds.label = std::move(y);
  }
  return ds;
}

CleanRule parse_clean_rule(const std::string& text) {
  if (text == "drop-na") return CleanRule::drop_na();
  auto fail = [&] {
    return ConfigError("bad cleaning rule '" + text +
                       "' (expected drop-na, outliers:<feature>:<z> or rows:<id>;<id>...)");
  };
  if (text.rfind("outliers:", 0) == 0) {
    const auto rest = text.substr(9);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw fail();
    double feature = 0, z = 0;
    if (!parse_double(rest.substr(0, colon), feature) || !parse_double(rest.substr(colon + 1), z) ||
        feature < 0 || feature != std::floor(feature) || !(z > 0)) {
      throw fail();
    }
    return CleanRule::outliers(static_cast<std::size_t>(feature), z);
  }
  if (text.rfind("rows:", 0) == 0) {
    std::vector<std::size_t> ids;
    std::stringstream ss(text.substr(5));
    std::string item;
    while (std::getline(ss, item, ';')) {
      double v = 0;
      if (!parse_double(item, v) || v < 0 || v != std::floor(v)) throw fail();
      ids.push_back(static_cast<std::size_t>(v));
    }
    if (ids.empty()) throw fail();
    return CleanRule::rows(std::move(ids));
  }
  throw fail();
}

std::string to_string(const CleanRule& rule) {
  switch (rule.kind) {
    case CleanRule::Kind::drop_na: return "drop-na";
    case CleanRule::Kind::drop_outliers:
      return "outliers:" + std::to_string(rule.feature) + ":" + format_double(rule.z_threshold);
    case CleanRule::Kind::drop_rows: {
      std::string s = "rows:";
      for (std::size_t i = 0; i < rule.row_ids.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(rule.row_ids[i]);
      }
      return s;
    }
  }
  return {};
}

namespace {

std::vector<std::size_t> keep_where(std::size_t n, auto&& keep) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep(i)) idx.push_back(i);
  }
  return idx;
}

Dataset drop_outliers(Dataset ds, std::size_t feature, double z_threshold) {
  // Removing outliers shrinks the spread, which can expose new ones; iterate
  // until no row exceeds the threshold so the rule is idempotent.
  while (true) {
    double sum = 0.0, count = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      const double v = ds.features(i, feature);
      if (!std::isnan(v)) {
        sum += v;
        count += 1.0;
      }
    }
    if (count == 0.0) return ds;
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      const double v = ds.features(i, feature);
      if (!std::isnan(v)) ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / count);
    if (sd <= 0.0) return ds;
    auto keep = keep_where(ds.n(), [&](std::size_t i) {
      const double v = ds.features(i, feature);
      return std::isnan(v) || std::abs(v - mean) / sd <= z_threshold;
    });
    if (keep.size() == ds.n()) return ds;
    ds = take_rows(ds, keep);
  }
}

}  // namespace

CleanResult clean(const Dataset& ds, std::span<const CleanRule> rules) {
  for (const auto& rule : rules) {
    if (rule.kind == CleanRule::Kind::drop_outliers && rule.feature >= ds.d()) {
      throw ConfigError("cleaning rule '" + to_string(rule) + "' references feature " +
                        std::to_string(rule.feature) + " but the dataset has " + std::to_string(ds.d()));
    }
  }
  Dataset cur = ds;
  for (const auto& rule : rules) {
    switch (rule.kind) {
      case CleanRule::Kind::drop_na: {
        auto keep = keep_where(cur.n(), [&](std::size_t i) { return !cur.row_has_na(i); });
        cur = take_rows(cur, keep);
        break;
      }
      case CleanRule::Kind::drop_outliers:
        cur = drop_outliers(std::move(cur), rule.feature, rule.z_threshold);
        break;
      case CleanRule::Kind::drop_rows: {
        auto keep = keep_where(cur.n(), [&](std::size_t i) {
          return std::find(rule.row_ids.begin(), rule.row_ids.end(), cur.row_ids[i]) == rule.row_ids.end();
        });
        cur = take_rows(cur, keep);
        break;
      }
    }
  }
  const std::size_t removed = ds.n() - cur.n();
  return {std::move(cur), removed};
}

SplitIndices split_indices(std::size_t n, double ratio, Rng& rng) {
  if (n < 10) throw DataError("split: need at least 10 rows, got " + std::to_string(n));
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split: ratio must lie in (0, 1)");
  const auto perm = rng.permutation(n);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  SplitIndices s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return s;
}

ScaleMode parse_scale_mode(const std::string& s) {
  if (s == "std") return ScaleMode::std_dev;
  if (s == "variance") return ScaleMode::variance;
  throw ConfigError("unknown scale mode '" + s + "' (expected std or variance)");
}

std::string to_string(ScaleMode m) { return m == ScaleMode::std_dev ? "std" : "variance"; }

NormStats fit_norm_stats(const Matrix& x, const MaskMatrix* mask, ScaleMode mode) {
  if (mask && (mask->rows != x.rows || mask->cols != x.cols)) {
    throw DimensionError("fit_norm_stats: mask shape differs from data " + shape_string(x));
  }
  NormStats s{std::vector<double>(x.cols), std::vector<double>(x.cols)};
  for (std::size_t j = 0; j < x.cols; ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      if (mask && mask->missing(i, j)) continue;
      sum += x(i, j);
      ++count;
    }
    if (count == 0) {
      throw DataError("feature " + std::to_string(j) + " has no observed training values");
    }
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      if (mask && mask->missing(i, j)) continue;
      ss += (x(i, j) - mean) * (x(i, j) - mean);
    }
    const double var = ss / static_cast<double>(count);
    const double scale = mode == ScaleMode::std_dev ? std::sqrt(var) : var;
    s.mean[j] = mean;
    s.scale[j] = std::max(scale, kScaleFloor);
  }
  return s;
}

Matrix normalize(const Matrix& x, const NormStats& stats) {
  if (stats.mean.size() != x.cols) throw DimensionError("normalize: stats width differs from data");
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = (x(i, j) - stats.mean[j]) / stats.scale[j];
  }
  return out;
}

Matrix denormalize(const Matrix& x, const NormStats& stats) {
  if (stats.mean.size() != x.cols) throw DimensionError("denormalize: stats width differs from data");
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = x(i, j) * stats.scale[j] + stats.mean[j];
  }
  return out;
}

SplitPair split(const Dataset& ds, double ratio, Rng& rng) {
  SplitPair p;
  p.indices = split_indices(ds.n(), ratio, rng);
  p.train = take_rows(ds, p.indices.train);
  p.test = take_rows(ds, p.indices.test);
  return p;
}

SplitPair znormalize(const SplitPair& pair, const MaskMatrix* train_mask, ScaleMode mode) {
  SplitPair out = pair;
  out.stats = fit_norm_stats(pair.train.features, train_mask, mode);
  out.train.features = normalize(pair.train.features, *out.stats);
  out.test.features = normalize(pair.test.features, *out.stats);
  return out;
}

}  // namespace daema
