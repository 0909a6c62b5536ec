#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "daema/config.hpp"
#include "daema/csv.hpp"
#include "daema/evalharness.hpp"
#include "daema/serialize.hpp"

#ifndef DAEMA_SOURCE_REGISTRY
#define DAEMA_SOURCE_REGISTRY "data/registry.ini"
#endif

namespace daema::cli {

namespace fs = std::filesystem;

namespace {

// Thrown for bad flag combinations found after parsing.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path default_registry() {
  if (fs::exists("data/registry.ini")) return "data/registry.ini";
  return DAEMA_SOURCE_REGISTRY;
}

std::string label_token(const Dataset& ds, std::size_t i) {
  const double y = (*ds.label)[i];
  if (std::isnan(y)) return "NA";
  if (ds.task == Task::classification) return ds.class_names.at(static_cast<std::size_t>(y));
  return format_double(y);
}

CsvTable dataset_table(const Dataset& ds, const MaskMatrix* mask) {
  CsvTable t;
  t.header = ds.feature_names;
  if (ds.label) t.header.push_back(ds.label_name);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < ds.d(); ++j) {
      const double v = ds.features(i, j);
      row.push_back((mask && mask->missing(i, j)) || std::isnan(v) ? "NA" : format_double(v));
    }
    if (ds.label) row.push_back(label_token(ds, i));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---- corrupt

struct CorruptArgs {
  std::string dataset;
  std::string registry;
  std::string mechanism = "mcar";
  double rate = 0.2;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_corrupt(const CorruptArgs& a, std::ostream& out) {
  const auto reg = Registry::load(a.registry);
  const Dataset ds = reg.load_dataset(a.dataset).dataset;
  if (!all_finite(ds.features)) throw DataError(a.dataset + ": NA cells remain after cleaning");
  if (!(a.rate >= 0.0 && a.rate <= 1.0)) throw UserError("--rate must lie in [0, 1]");
  const Mechanism mech = parse_mechanism(a.mechanism);

  Rng rng = Rng::derive(a.seed, "mask");
  MaskMatrix mask;
  std::optional<MnarMask> mnar;
  if (mech == Mechanism::mcar) {
    mask = mcar_mask(ds.n(), ds.d(), a.rate, rng);
  } else {
    mnar = mnar_mask(ds.features, a.rate, rng);
    mask = mnar->mask;
  }

  const fs::path prefix(a.out);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  const fs::path observed = prefix.string() + ".observed.csv";
  const fs::path mask_path = prefix.string() + ".mask.csv";
  const fs::path truth = prefix.string() + ".truth.csv";
  const fs::path manifest = prefix.string() + ".manifest.ini";
  write_csv(observed, dataset_table(ds, &mask));
  write_mask_csv(mask_path, mask, ds.feature_names);
  write_csv(truth, dataset_table(ds, nullptr));

  std::ofstream m(manifest);
  m << "dataset = " << a.dataset << "\n"
    << "mechanism = " << to_string(mech) << "\n"
    << "rate = " << format_double(a.rate) << "\n"
    << "seed = " << a.seed << "\n"
    << "rows = " << ds.n() << "\n"
    << "features = " << ds.d() << "\n"
    << "missing_cells = " << mask.count_missing() << "\n";
  if (ds.label) m << "label = " << ds.label_name << "\n";
  if (mnar) {
    m << "mnar_low_feature = " << ds.feature_names[mnar->low_feature] << "\n"
      << "mnar_high_feature = " << ds.feature_names[mnar->high_feature] << "\n";
  }
  if (!m) throw std::runtime_error("cannot write " + manifest.string());

  out << "wrote " << observed.string() << ", " << mask_path.string() << ", " << truth.string() << ", "
      << manifest.string() << " (" << mask.count_missing() << " of " << mask.bits.size() << " cells missing)\n";
  return kExitOk;
}

// ---- train

struct TrainArgs {
  std::string dataset;
  std::string input;
  std::string label;
  std::string registry;
  std::string model = "daema";
  std::string dae_input = "data+mask";
  std::string batch_mode = "replacement";
  std::string scale = "std";
  std::uint64_t seed = 0;
  TrainConfig train;
  std::string out;
};

int cmd_train(TrainArgs a, std::ostream& out) {
  if (a.dataset.empty() == a.input.empty()) throw UserError("give exactly one of --dataset or --input");
  Dataset ds;
  if (!a.dataset.empty()) {
    ds = Registry::load(a.registry).load_dataset(a.dataset).dataset;
  } else {
    std::optional<std::string> label;
    if (!a.label.empty()) label = a.label;
    ds = load_csv(a.input, label, label ? Task::classification : Task::none);
  }
  const ModelKind kind = parse_model_kind(a.model);
  if (kind != ModelKind::daema && kind != ModelKind::dae) throw UserError("--model must be daema or dae");
  if (a.batch_mode == "replacement") {
    a.train.batch_mode = BatchMode::with_replacement;
  } else if (a.batch_mode == "epochs") {
    a.train.batch_mode = BatchMode::shuffled_epochs;
  } else {
    throw UserError("--batch-mode must be replacement or epochs");
  }
  a.train.seed = a.seed;
  a.train.checkpoint_steps = {a.train.total_steps};
  try {
    a.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UserError(e.what());
  }

  MaskMatrix mask(ds.n(), ds.d());
  for (std::size_t i = 0; i < ds.features.data.size(); ++i) mask.bits[i] = std::isnan(ds.features.data[i]) ? 1 : 0;
  ModelFile file;
  file.stats = fit_norm_stats(ds.features, &mask, parse_scale_mode(a.scale));
  file.feature_names = ds.feature_names;
  const MaskedDataset data = apply_mask(normalize(ds.features, file.stats), mask);

  auto log = [&](const TrainingLog& l) { out << "step " << l.step << " loss " << format_double(l.mean_loss) << "\n"; };
  if (kind == ModelKind::daema) {
    Rng rng = Rng::derive(a.seed, "daema");
    auto net = DaemaModel::random(DaemaDims::for_features(ds.d()), rng);
    fit<DaemaModel>(net, data, a.train, rng, {}, log);
    file.model = std::move(net);
  } else {
    Rng rng = Rng::derive(a.seed, "dae");
    auto net = DaeModel::random(ds.d(), parse_dae_input(a.dae_input), rng);
    fit<DaeModel>(net, data, a.train, rng, {}, log);
    file.model = std::move(net);
  }
  const fs::path path(a.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_model(path, file);
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

// ---- impute

struct ImputeArgs {
  std::string model;
  std::string input;
  std::string label;
  std::string out;
  std::uint64_t seed = 0;  // imputation is deterministic; accepted for a uniform interface
};

int cmd_impute(const ImputeArgs& a, std::ostream& out) {
  const ModelFile file = load_model(fs::path(a.model));
  CsvTable table = read_csv(a.input);
  std::ptrdiff_t label_idx = -1;
  if (!a.label.empty()) {
    label_idx = table.column_index(a.label);
    if (label_idx < 0) throw UserError("label column '" + a.label + "' not in " + a.input);
  }
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) != label_idx) cols.push_back(j);
  }
  const std::size_t d = feature_count(file);
  if (cols.size() != d) {
    throw UserError(a.input + " has " + std::to_string(cols.size()) + " feature columns, the model expects " +
                    std::to_string(d));
  }

  const std::size_t n = table.rows.size();
  Matrix x(n, d);
  MaskMatrix mask(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const auto& cell = table.rows[i][cols[k]];
      if (is_na_token(cell)) {
        mask.set(i, k, true);
        continue;
      }
      double v = 0.0;
      if (!parse_double(cell, v)) {
        throw ParseError(a.input + " row " + std::to_string(i + 1) + ", column " + table.header[cols[k]] +
                         ": cannot parse '" + cell + "'");
      }
      x(i, k) = (v - file.stats.mean[k]) / file.stats.scale[k];
    }
  }
  const Matrix filled = std::visit([&](const auto& net) { return impute(net, x, mask); }, file.model);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      if (!mask.missing(i, k)) continue;
      table.rows[i][cols[k]] = format_double(filled(i, k) * file.stats.scale[k] + file.stats.mean[k]);
    }
  }
  if (a.out.empty() || a.out == "-") {
    write_csv(out, table);
  } else {
    write_csv(fs::path(a.out), table);
  }
  return kExitOk;
}

// ---- experiment

struct ExperimentArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::optional<std::size_t> parallel_seeds;
  bool quiet = false;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentFile f = load_experiment(a.config);
  if (a.seed) f.base.base_seed = *a.seed;
  if (a.seeds) f.base.seeds = *a.seeds;
  if (a.parallel_seeds) f.base.parallel_seeds = *a.parallel_seeds;
  f.base.validate();

  fs::path dir = fs::path(a.config).parent_path();
  if (f.output_dir) dir = *f.output_dir;
  if (const char* env = std::getenv("DAEMA_OUTPUT_DIR"); env && *env) dir = env;
  if (!a.out_dir.empty()) dir = a.out_dir;
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);

  const auto reg = Registry::load(f.registry);
  for (const auto& id : f.datasets) reg.at(id);  // fail before any training

  ProgressFn progress;
  if (!a.quiet) progress = [&](const std::string& msg) { err << msg << "\n"; };

  std::vector<ExperimentReport> reports;
  for (const auto& id : f.datasets) {
    ExperimentConfig cfg = f.base;
    cfg.dataset_id = id;
    const Dataset ds = reg.load_dataset(id).dataset;
    reports.push_back(run_experiment(ds, cfg, progress));
    const auto csv = dir / (id + "_" + to_string(cfg.mechanism) + ".csv");
    reports.back().write_csv(csv);
    if (!a.quiet) err << "wrote " << csv.string() << "\n";
  }
  std::ostringstream table;
  render_comparison(table, reports);
  const auto summary = dir / "summary.txt";
  std::ofstream(summary) << table.str();
  out << table.str();
  return kExitOk;
}

// ---- evaluate

struct EvaluateArgs {
  std::string truth;
  std::string imputed;
  std::string mask;
  std::string label;
  bool raw = false;
  std::string mode = "pooled";
  std::uint64_t seed = 0;  // deterministic; accepted for a uniform interface
};

Matrix feature_matrix(const CsvTable& t, const std::string& label, const std::string& name,
                      std::vector<std::string>& header) {
  std::vector<std::size_t> cols;
  header.clear();
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] == label) continue;
    cols.push_back(j);
    header.push_back(t.header[j]);
  }
  Matrix m(t.rows.size(), cols.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto& cell = t.rows[i][cols[k]];
      if (!parse_double(cell, m(i, k))) {
        throw ParseError(name + " row " + std::to_string(i + 1) + ", column " + t.header[cols[k]] +
                         ": cannot parse '" + cell + "'");
      }
    }
  }
  return m;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  std::vector<std::string> h_truth, h_imp;
  Matrix truth = feature_matrix(read_csv(a.truth), a.label, a.truth, h_truth);
  Matrix imputed = feature_matrix(read_csv(a.imputed), a.label, a.imputed, h_imp);
  const MaskMatrix mask = read_mask_csv(a.mask);
  if (h_truth != h_imp) throw UserError("truth and imputed CSVs have different feature columns");
  if (truth.rows != imputed.rows || mask.rows != truth.rows || mask.cols != truth.cols) {
    throw UserError("truth " + shape_string(truth) + ", imputed " + shape_string(imputed) + " and mask (" +
                    std::to_string(mask.rows) + "x" + std::to_string(mask.cols) + ") do not line up");
  }
  if (!a.raw) {
    const NormStats stats = fit_norm_stats(truth, nullptr);
    truth = normalize(truth, stats);
    imputed = normalize(imputed, stats);
  }
  const double v = nrms(imputed, truth, mask, parse_nrms_mode(a.mode));
  out << "nrms," << format_double(v) << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Missing-data imputation with mask-attention denoising autoencoders"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "daema 1.0");

  CorruptArgs corrupt;
  corrupt.registry = default_registry().string();
  auto* c = app.add_subcommand("corrupt", "inject missing values into a registered dataset");
  c->add_option("--dataset", corrupt.dataset, "dataset id from the registry")->required();
  c->add_option("--registry", corrupt.registry, "dataset registry file")->capture_default_str();
  c->add_option("--mechanism", corrupt.mechanism, "mcar or mnar")->capture_default_str();
  c->add_option("--rate", corrupt.rate, "missingness rate")->capture_default_str();
  c->add_option("--seed", corrupt.seed, "random seed")->capture_default_str();
  c->add_option("--out", corrupt.out, "output prefix; writes .observed/.mask/.truth CSVs and .manifest.ini")
      ->required();

  TrainArgs train;
  train.registry = corrupt.registry;
  auto* t = app.add_subcommand("train", "train an imputer and write a model file");
  auto* t_ds = t->add_option("--dataset", train.dataset, "dataset id from the registry");
  t->add_option("--input", train.input, "CSV with NA cells")->excludes(t_ds);
  t->add_option("--label", train.label, "column of --input to ignore");
  t->add_option("--registry", train.registry, "dataset registry file")->capture_default_str();
  t->add_option("--model", train.model, "daema or dae")->capture_default_str();
  t->add_option("--dae-input", train.dae_input, "data+mask or data-only")->capture_default_str();
  t->add_option("--steps", train.train.total_steps, "training batch-steps")->capture_default_str();
  t->add_option("--batch-size", train.train.batch_size, "minibatch size")->capture_default_str();
  t->add_option("--learning-rate", train.train.learning_rate, "Adam learning rate")->capture_default_str();
  t->add_option("--artificial-rate", train.train.artificial_rate, "training corruption probability")
      ->capture_default_str();
  t->add_option("--batch-mode", train.batch_mode, "replacement or epochs")->capture_default_str();
  t->add_option("--log-every", train.train.log_every, "steps between loss lines")->capture_default_str();
  t->add_option("--scale", train.scale, "std or variance")->capture_default_str();
  t->add_option("--seed", train.seed, "random seed")->capture_default_str();
  t->add_option("--out", train.out, "model file")->required();

  ImputeArgs imp;
  auto* i = app.add_subcommand("impute", "fill NA cells of a CSV with a trained model");
  i->add_option("--model", imp.model, "model file")->required();
  i->add_option("--input", imp.input, "CSV with NA cells")->required();
  i->add_option("--label", imp.label, "column passed through untouched");
  i->add_option("--out", imp.out, "output CSV (stdout when omitted)");
  i->add_option("--seed", imp.seed, "random seed (imputation is deterministic)");

  ExperimentArgs exp;
  auto* e = app.add_subcommand("experiment", "run a multi-seed comparison from a config file");
  e->add_option("config", exp.config, "experiment config file")->required();
  e->add_option("--out-dir", exp.out_dir, "report directory (overrides config and DAEMA_OUTPUT_DIR)");
  e->add_option("--seed", exp.seed, "base seed (overrides config)");
  e->add_option("--seeds", exp.seeds, "number of seeds (overrides config)");
  e->add_option("--parallel-seeds", exp.parallel_seeds, "seeds run concurrently (overrides config)");
  e->add_flag("--quiet", exp.quiet, "no progress output");

  EvaluateArgs ev;
  auto* v = app.add_subcommand("evaluate", "NRMS of an imputed CSV against the truth on masked cells");
  v->add_option("--truth", ev.truth, "ground-truth CSV")->required();
  v->add_option("--imputed", ev.imputed, "imputed CSV")->required();
  v->add_option("--mask", ev.mask, "mask CSV (1 = was missing)")->required();
  v->add_option("--label", ev.label, "column to ignore in both CSVs");
  v->add_flag("--raw", ev.raw, "score raw values instead of z-normalizing by the truth columns");
  v->add_option("--nrms-mode", ev.mode, "pooled or per-feature")->capture_default_str();
  v->add_option("--seed", ev.seed, "random seed (evaluation is deterministic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUser;
  }

  try {
    if (*c) return cmd_corrupt(corrupt, out);
    if (*t) return cmd_train(train, out);
    if (*i) return cmd_impute(imp, out);
    if (*e) return cmd_experiment(exp, out, err);
    if (*v) return cmd_evaluate(ev, out);
  } catch (const TrainingDiverged& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const DataError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const FormatError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const UserError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const MetricError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
  return kExitUser;
}

}  // namespace daema::cli
