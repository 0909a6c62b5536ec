#pragma once

// Evaluation protocol: NRMS on the missing test cells, checkpoint averaging,
// downstream random-forest scores and multi-seed aggregation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "daema/baselines.hpp"
#include "daema/forest.hpp"
#include "daema/missingness.hpp"
#include "daema/pipeline.hpp"
#include "daema/training.hpp"

namespace daema {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mechanism { mcar, mnar };
// `real` scores the ground truth itself (the upper bound row of the tables).
enum class ModelKind { daema, dae, mean, real };
enum class NrmsMode { pooled, per_feature };

Mechanism parse_mechanism(const std::string& s);
std::string to_string(Mechanism m);
ModelKind parse_model_kind(const std::string& s);
std::string to_string(ModelKind m);
NrmsMode parse_nrms_mode(const std::string& s);
std::string to_string(NrmsMode m);

// RMSE over cells with mask = 1, divided by the population standard deviation
// of every ground-truth value (pooled) or, per feature, of that feature's
// ground-truth values.
double nrms(const Matrix& imputed, const Matrix& truth, const MaskMatrix& mask, NrmsMode mode = NrmsMode::pooled);

double checkpoint_average(std::span<const double> scores);

struct Aggregate {
  std::size_t count = 0;
  double mean = 0.0;
  // n-1 denominator; absent for a single value.
  std::optional<double> variance;
  std::optional<double> std_dev;
};

Aggregate aggregate(std::span<const double> values);

struct ExperimentConfig {
  std::string dataset_id;
  Mechanism mechanism = Mechanism::mcar;
  double rate = 0.2;
  std::vector<ModelKind> models{ModelKind::daema};
  std::size_t seeds = 10;
  std::uint64_t base_seed = 0;
  TrainConfig train;
  ForestConfig forest;
  std::size_t forest_repeats = 10;
  bool downstream = true;
  double split_ratio = 0.7;
  ScaleMode scale = ScaleMode::std_dev;
  DaeInput dae_input = DaeInput::data_and_mask;
  NrmsMode nrms_mode = NrmsMode::pooled;
  std::size_t parallel_seeds = 1;

  void validate() const;
};

// Seed of the i-th run; every random stream of that run is derived from it.
std::uint64_t run_seed(std::uint64_t base_seed, std::size_t seed_index);

// One corrupted, split and normalized copy of the dataset. Every model of a
// given run consumes the same instance.
struct PreparedRun {
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  MaskMatrix full_mask;  // over all rows, before the split
  std::optional<std::pair<std::size_t, std::size_t>> mnar_features;
  SplitIndices split;
  NormStats stats;
  MaskedDataset train;  // normalized
  MaskedDataset test;   // normalized
  std::vector<double> train_labels;
  std::vector<double> test_labels;
};

PreparedRun prepare_run(const Dataset& ds, const ExperimentConfig& cfg, std::size_t seed_index);

struct CheckpointScore {
  std::size_t step = 0;  // 0 for models without training
  double nrms = 0.0;
  std::optional<double> downstream;
};

struct SeedResult {
  ModelKind model = ModelKind::mean;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  std::vector<CheckpointScore> checkpoints;
  double nrms = 0.0;
  std::optional<double> downstream;
};

struct ModelSummary {
  ModelKind model = ModelKind::mean;
  Aggregate nrms;
  std::optional<Aggregate> downstream;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SeedResult> results;  // ordered by model, then seed
  std::vector<ModelSummary> summaries;

  const ModelSummary& summary(ModelKind m) const;
  std::vector<double> seed_column(ModelKind m, bool downstream = false) const;

  // One row per (model, seed, checkpoint, metric), plus checkpoint-averaged
  // rows with checkpoint "avg".
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
  void render_table(std::ostream& out) const;
};

using ProgressFn = std::function<void(const std::string&)>;

// Evaluates one model on a prepared run.
SeedResult evaluate_model(ModelKind model, const PreparedRun& run, const Dataset& ds, const ExperimentConfig& cfg,
                          const ProgressFn& progress = {});

ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& cfg, const ProgressFn& progress = {});

// Several reports side by side (mean +- variance per model).
void render_comparison(std::ostream& out, std::span<const ExperimentReport> reports);

}  // namespace daema
