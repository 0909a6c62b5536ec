#pragma once

// Text configuration files.
//
// Dataset registry (INI-style, one section per dataset id; paths are
// relative to the registry file):
//
//   [breast]
//   path  = breast.csv
//   label = class
//   task  = classification
//   clean = drop-na
//
// Experiment file (key = value, '#' starts a comment):
//
//   registry   = ../data/registry.ini
//   datasets   = breast, boston
//   mechanism  = mcar
//   models     = daema, dae, mean
//   seeds      = 10
//   steps      = 40000
//
// See experiment_keys() for the full schema.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "daema/evalharness.hpp"
#include "daema/pipeline.hpp"

namespace daema {

struct RegistryEntry {
  std::string id;
  std::filesystem::path csv_path;
  std::optional<std::string> label_column;
  Task task = Task::none;
  std::vector<CleanRule> clean_rules;
};

class Registry {
 public:
  static Registry load(const std::filesystem::path& path);
  static Registry parse(const std::string& text, const std::filesystem::path& base_dir);

  const RegistryEntry& at(const std::string& id) const;
  bool contains(const std::string& id) const { return entries_.count(id) != 0; }
  std::vector<std::string> ids() const;

  // load_csv + clean for the entry.
  CleanResult load_dataset(const std::string& id) const;

 private:
  std::map<std::string, RegistryEntry> entries_;
};

struct ExperimentFile {
  std::filesystem::path registry;
  std::vector<std::string> datasets;
  ExperimentConfig base;  // dataset_id filled per dataset
  std::optional<std::filesystem::path> output_dir;
};

// Documented keys with a one-line description each.
const std::vector<std::pair<std::string, std::string>>& experiment_keys();

// Collects every schema violation into one ConfigError.
ExperimentFile parse_experiment(const std::string& text, const std::filesystem::path& base_dir);
ExperimentFile load_experiment(const std::filesystem::path& path);

std::vector<std::string> split_list(const std::string& s, char sep = ',');
std::string trim_copy(const std::string& s);

}  // namespace daema
