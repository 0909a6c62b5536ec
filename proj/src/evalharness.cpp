#include "daema/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "daema/csv.hpp"
#include "daema/daema.hpp"
#include "daema/published.hpp"

namespace daema {

Mechanism parse_mechanism(const std::string& s) {
  if (s == "mcar") return Mechanism::mcar;
  if (s == "mnar") return Mechanism::mnar;
  throw ConfigError("unknown missingness mechanism '" + s + "' (expected mcar or mnar)");
}

std::string to_string(Mechanism m) { return m == Mechanism::mcar ? "mcar" : "mnar"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "daema") return ModelKind::daema;
  if (s == "dae") return ModelKind::dae;
  if (s == "mean") return ModelKind::mean;
  if (s == "real") return ModelKind::real;
  throw ConfigError("unknown model '" + s + "' (expected daema, dae, mean or real)");
}

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::daema: return "daema";
    case ModelKind::dae: return "dae";
    case ModelKind::mean: return "mean";
    case ModelKind::real: return "real";
  }
  return {};
}

NrmsMode parse_nrms_mode(const std::string& s) {
  if (s == "pooled") return NrmsMode::pooled;
  if (s == "per-feature") return NrmsMode::per_feature;
  throw ConfigError("unknown NRMS mode '" + s + "' (expected pooled or per-feature)");
}

std::string to_string(NrmsMode m) { return m == NrmsMode::pooled ? "pooled" : "per-feature"; }

namespace {

double population_std(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / n);
}

std::string published_name(ModelKind m) {
  switch (m) {
    case ModelKind::daema: return "DAEMA";
    case ModelKind::dae: return "DAE";
    case ModelKind::mean: return "Mean";
    case ModelKind::real: return "Real";
  }
  return {};
}

}  // namespace

double nrms(const Matrix& imputed, const Matrix& truth, const MaskMatrix& mask, NrmsMode mode) {
  if (imputed.rows != truth.rows || imputed.cols != truth.cols || mask.rows != truth.rows || mask.cols != truth.cols) {
    throw DimensionError("nrms: shapes differ: imputed " + shape_string(imputed) + ", truth " + shape_string(truth));
  }
  if (mask.count_missing() == 0) throw MetricError("nrms: no missing cells to score");

  if (mode == NrmsMode::pooled) {
    const double scale = population_std(truth.data);
    if (!(scale > 0.0)) throw MetricError("nrms: ground truth has zero spread");
    double se = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < truth.data.size(); ++i) {
      if (!mask.bits[i]) continue;
      const double e = imputed.data[i] - truth.data[i];
      se += e * e;
      ++count;
    }
    return std::sqrt(se / static_cast<double>(count)) / scale;
  }

  // Each error is scaled by its own feature's spread before pooling.
  double se = 0.0;
  std::size_t count = 0;
  std::vector<double> column(truth.rows);
  for (std::size_t j = 0; j < truth.cols; ++j) {
    for (std::size_t i = 0; i < truth.rows; ++i) column[i] = truth(i, j);
    const double scale = population_std(column);
    for (std::size_t i = 0; i < truth.rows; ++i) {
      if (!mask.missing(i, j)) continue;
      if (!(scale > 0.0)) throw MetricError("nrms: feature " + std::to_string(j) + " has zero spread");
      const double e = (imputed(i, j) - truth(i, j)) / scale;
      se += e * e;
      ++count;
    }
  }
  return std::sqrt(se / static_cast<double>(count));
}

double checkpoint_average(std::span<const double> scores) {
  if (scores.empty()) throw MetricError("checkpoint_average: no scores");
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

Aggregate aggregate(std::span<const double> values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.variance = ss / static_cast<double>(values.size() - 1);
    a.std_dev = std::sqrt(*a.variance);
  }
  return a;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  if (seeds < 1) problems.push_back("seeds must be at least 1");
  if (!(rate >= 0.0 && rate <= 1.0)) problems.push_back("rate must lie in [0, 1]");
  if (models.empty()) problems.push_back("models must list at least one model");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) problems.push_back("split ratio must lie in (0, 1)");
  if (forest_repeats < 1) problems.push_back("forest repeats must be at least 1");
  if (forest.n_estimators < 1) problems.push_back("estimators must be at least 1");
  if (forest.max_leaf_nodes < 1) problems.push_back("max leaves must be at least 1");
  if (parallel_seeds < 1) problems.push_back("parallel seeds must be at least 1");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid experiment configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t seed_index) {
  return Rng::derive(base_seed, "run", seed_index).next_u64();
}

PreparedRun prepare_run(const Dataset& ds, const ExperimentConfig& cfg, std::size_t seed_index) {
  if (!all_finite(ds.features)) throw DataError("dataset still contains NA cells; add a drop-na cleaning rule");
  PreparedRun run;
  run.seed_index = seed_index;
  run.seed = run_seed(cfg.base_seed, seed_index);

  Rng mask_rng = Rng::derive(run.seed, "mask");
  if (cfg.mechanism == Mechanism::mcar) {
    run.full_mask = mcar_mask(ds.n(), ds.d(), cfg.rate, mask_rng);
  } else {
    auto m = mnar_mask(ds.features, cfg.rate, mask_rng);
    run.full_mask = std::move(m.mask);
    run.mnar_features = std::make_pair(m.low_feature, m.high_feature);
  }

  Rng split_rng = Rng::derive(run.seed, "split");
  run.split = split_indices(ds.n(), cfg.split_ratio, split_rng);

  const Matrix train_gt = take_rows(ds.features, run.split.train);
  const Matrix test_gt = take_rows(ds.features, run.split.test);
  const MaskMatrix train_mask = take_rows(run.full_mask, run.split.train);
  const MaskMatrix test_mask = take_rows(run.full_mask, run.split.test);

  run.stats = fit_norm_stats(train_gt, &train_mask, cfg.scale);
  run.train = apply_mask(normalize(train_gt, run.stats), train_mask);
  run.test = apply_mask(normalize(test_gt, run.stats), test_mask);

  if (ds.label) {
    for (auto i : run.split.train) run.train_labels.push_back((*ds.label)[i]);
    for (auto i : run.split.test) run.test_labels.push_back((*ds.label)[i]);
  }
  return run;
}

SeedResult evaluate_model(ModelKind model, const PreparedRun& run, const Dataset& ds, const ExperimentConfig& cfg,
                          const ProgressFn& progress) {
  SeedResult result;
  result.model = model;
  result.seed_index = run.seed_index;
  result.seed = run.seed;

  const bool downstream = cfg.downstream && ds.task != Task::none && !run.train_labels.empty();
  ForestConfig forest = cfg.forest;
  forest.task = ds.task;
  forest.seed = Rng::derive(run.seed, "forest").next_u64();
  const std::size_t n_classes = ds.class_names.size();

  auto score = [&](std::size_t step, const Matrix& train_imputed, const Matrix& test_imputed) {
    CheckpointScore s;
    s.step = step;
    s.nrms = nrms(test_imputed, run.test.ground_truth, run.test.mask, cfg.nrms_mode);
    if (downstream) {
      s.downstream = downstream_score(train_imputed, run.train_labels, test_imputed, run.test_labels, forest,
                                      n_classes, cfg.forest_repeats);
    }
    result.checkpoints.push_back(s);
    if (progress) {
      std::ostringstream msg;
      msg << to_string(model) << " seed " << run.seed_index << " step " << step << ": nrms "
          << format_double(s.nrms);
      if (s.downstream) msg << ", downstream " << format_double(*s.downstream);
      progress(msg.str());
    }
  };

  switch (model) {
    case ModelKind::mean: {
      const auto imputer = MeanImputer::normalized(ds.d());
      score(0, imputer.impute(run.train.observed, run.train.mask), imputer.impute(run.test.observed, run.test.mask));
      break;
    }
    case ModelKind::real:
      score(0, run.train.ground_truth, run.test.ground_truth);
      break;
    case ModelKind::daema: {
      Rng rng = Rng::derive(run.seed, "daema");
      auto net = DaemaModel::random(DaemaDims::for_features(ds.d()), rng);
      fit<DaemaModel>(net, run.train, cfg.train, rng, [&](std::size_t step, const DaemaModel& snapshot) {
        score(step, impute(snapshot, run.train.observed, run.train.mask),
              impute(snapshot, run.test.observed, run.test.mask));
      });
      break;
    }
    case ModelKind::dae: {
      Rng rng = Rng::derive(run.seed, "dae");
      auto net = DaeModel::random(ds.d(), cfg.dae_input, rng);
      fit<DaeModel>(net, run.train, cfg.train, rng, [&](std::size_t step, const DaeModel& snapshot) {
        score(step, impute(snapshot, run.train.observed, run.train.mask),
              impute(snapshot, run.test.observed, run.test.mask));
      });
      break;
    }
  }

  std::vector<double> values;
  for (const auto& c : result.checkpoints) values.push_back(c.nrms);
  result.nrms = checkpoint_average(values);
  if (downstream) {
    values.clear();
    for (const auto& c : result.checkpoints) values.push_back(*c.downstream);
    result.downstream = checkpoint_average(values);
  }
  return result;
}

ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  std::mutex log_mutex;
  ProgressFn safe_progress;
  if (progress) {
    safe_progress = [&](const std::string& msg) {
      std::lock_guard lock(log_mutex);
      progress("[" + cfg.dataset_id + " " + to_string(cfg.mechanism) + "] " + msg);
    };
  }

  // per_seed[s][m]
  std::vector<std::vector<SeedResult>> per_seed(cfg.seeds);
  std::vector<std::exception_ptr> errors(cfg.seeds);
  auto run_one = [&](std::size_t s) {
    try {
      const PreparedRun run = prepare_run(ds, cfg, s);
      for (auto m : cfg.models) {
        try {
          per_seed[s].push_back(evaluate_model(m, run, ds, cfg, safe_progress));
        } catch (const TrainingDiverged&) {
          throw;
        } catch (const std::exception& e) {
          throw std::runtime_error("seed " + std::to_string(s) + ", model " + to_string(m) + ": " + e.what());
        }
      }
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };

  const std::size_t threads = std::min(cfg.parallel_seeds, cfg.seeds);
  if (threads <= 1) {
    for (std::size_t s = 0; s < cfg.seeds; ++s) run_one(s);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t s = w; s < cfg.seeds; s += threads) run_one(s);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentReport report;
  report.config = cfg;
  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    for (std::size_t s = 0; s < cfg.seeds; ++s) report.results.push_back(per_seed[s][m]);
  }
  for (auto m : cfg.models) {
    ModelSummary summary;
    summary.model = m;
    summary.nrms = aggregate(report.seed_column(m));
    const auto ds_col = report.seed_column(m, true);
    if (!ds_col.empty()) summary.downstream = aggregate(ds_col);
    report.summaries.push_back(summary);
  }
  return report;
}

const ModelSummary& ExperimentReport::summary(ModelKind m) const {
  for (const auto& s : summaries) {
    if (s.model == m) return s;
  }
  throw std::out_of_range("no summary for model " + to_string(m));
}

std::vector<double> ExperimentReport::seed_column(ModelKind m, bool downstream) const {
  std::vector<double> out;
  for (const auto& r : results) {
    if (r.model != m) continue;
    if (!downstream) {
      out.push_back(r.nrms);
    } else if (r.downstream) {
      out.push_back(*r.downstream);
    }
  }
  return out;
}

void ExperimentReport::write_csv(std::ostream& out) const {
  CsvTable t;
  t.header = {"dataset", "mechanism", "rate", "model", "seed_index", "seed", "checkpoint", "metric", "value"};
  auto add = [&](const SeedResult& r, const std::string& checkpoint, const std::string& metric, double v) {
    t.rows.push_back({config.dataset_id, to_string(config.mechanism), format_double(config.rate), to_string(r.model),
                      std::to_string(r.seed_index), std::to_string(r.seed), checkpoint, metric, format_double(v)});
  };
  for (const auto& r : results) {
    for (const auto& c : r.checkpoints) {
      add(r, std::to_string(c.step), "nrms", c.nrms);
      if (c.downstream) add(r, std::to_string(c.step), "downstream", *c.downstream);
    }
    add(r, "avg", "nrms", r.nrms);
    if (r.downstream) add(r, "avg", "downstream", *r.downstream);
  }
  daema::write_csv(out, t);
}

void ExperimentReport::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out);
}

namespace {

std::string fmt(const Aggregate& a) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << a.mean;
  if (a.variance) {
    s << " ±" << std::setprecision(3) << *a.variance << " (sd " << *a.std_dev << ")";
  } else {
    s << " (1 seed)";
  }
  return s.str();
}

std::string fmt(const std::optional<PublishedValue>& p) {
  if (!p) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << p->mean << " ±" << p->spread;
  return s.str();
}

}  // namespace

void ExperimentReport::render_table(std::ostream& out) const {
  const auto mech = to_string(config.mechanism);
  out << "dataset " << config.dataset_id << ", " << mech << " " << format_double(config.rate) << ", "
      << config.seeds << " seed(s)\n";
  out << std::left << std::setw(8) << "model" << std::setw(30) << "NRMS mean ±var (sd)" << std::setw(16)
      << "published NRMS" << std::setw(30) << "downstream mean ±var (sd)" << "published downstream\n";
  for (const auto& s : summaries) {
    const auto name = published_name(s.model);
    out << std::left << std::setw(8) << to_string(s.model) << std::setw(30) << fmt(s.nrms) << std::setw(16)
        << fmt(published_result(config.dataset_id, mech, PublishedMetric::nrms, name)) << std::setw(30)
        << (s.downstream ? fmt(*s.downstream) : std::string("-"))
        << fmt(published_result(config.dataset_id, mech, PublishedMetric::downstream, name)) << "\n";
  }
}

void render_comparison(std::ostream& out, std::span<const ExperimentReport> reports) {
  for (const auto& r : reports) {
    r.render_table(out);
    out << "\n";
  }
}

}  // namespace daema
