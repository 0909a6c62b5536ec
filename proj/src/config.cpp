#include "daema/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "daema/csv.hpp"

namespace daema {

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim_copy(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return trim_copy(hash == std::string::npos ? line : line.substr(0, hash));
}

}  // namespace

Registry Registry::parse(const std::string& text, const std::filesystem::path& base_dir) {
  Registry reg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  RegistryEntry* cur = nullptr;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_comment(line);
    if (line.empty()) continue;
    const std::string where = "registry line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(where + "unterminated section header");
        continue;
      }
      const auto id = trim_copy(line.substr(1, line.size() - 2));
      if (id.empty() || reg.entries_.count(id)) {
        problems.push_back(where + "empty or duplicate dataset id '" + id + "'");
        cur = nullptr;
        continue;
      }
      cur = &reg.entries_[id];
      cur->id = id;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || !cur) {
      problems.push_back(where + "expected 'key = value' inside a [dataset] section");
      continue;
    }
    const auto key = trim_copy(line.substr(0, eq));
    const auto value = trim_copy(line.substr(eq + 1));
    try {
      if (key == "path") {
        cur->csv_path = std::filesystem::path(value).is_absolute() ? std::filesystem::path(value) : base_dir / value;
      } else if (key == "label") {
        cur->label_column = value;
      } else if (key == "task") {
        cur->task = parse_task(value);
      } else if (key == "clean") {
        for (const auto& r : split_list(value)) cur->clean_rules.push_back(parse_clean_rule(r));
      } else {
        problems.push_back(where + "unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      problems.push_back(where + e.what());
    }
  }
  for (const auto& [id, e] : reg.entries_) {
    if (e.csv_path.empty()) problems.push_back("dataset '" + id + "' has no path");
    if (e.label_column && e.task == Task::none) problems.push_back("dataset '" + id + "' has a label but no task");
  }
  if (!problems.empty()) {
    std::string msg = "invalid registry:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return reg;
}

Registry Registry::load(const std::filesystem::path& path) {
  return parse(read_text(path), path.parent_path());
}

const RegistryEntry& Registry::at(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    std::string known;
    for (const auto& k : ids()) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("unknown dataset '" + id + "' (registered: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> Registry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

CleanResult Registry::load_dataset(const std::string& id) const {
  const auto& e = at(id);
  if (!std::filesystem::exists(e.csv_path)) {
    throw ConfigError("dataset '" + id + "': file " + e.csv_path.string() + " does not exist");
  }
  const Dataset raw = load_csv(e.csv_path, e.label_column, e.task);
  return clean(raw, e.clean_rules);
}

const std::vector<std::pair<std::string, std::string>>& experiment_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"registry", "dataset registry file (required)"},
      {"datasets", "comma-separated dataset ids (required)"},
      {"mechanism", "mcar | mnar (default mcar)"},
      {"rate", "missingness rate in [0, 1] (default 0.2)"},
      {"models", "comma-separated subset of daema, dae, mean, real (default daema)"},
      {"seeds", "number of seeds (default 10)"},
      {"seed", "base seed (default 0)"},
      {"steps", "training batch-steps (default 40000)"},
      {"checkpoints", "comma-separated checkpoint steps (default: last five, steps/200 apart)"},
      {"batch_size", "minibatch size (default 64)"},
      {"learning_rate", "Adam learning rate (default 0.001)"},
      {"artificial_rate", "training-time corruption probability (default 0.2)"},
      {"batch_mode", "replacement | epochs (default replacement)"},
      {"estimators", "trees per forest (default 100)"},
      {"max_leaves", "leaf budget per tree (default 1000)"},
      {"max_features", "features tried per split (default sqrt(d) / ceil(d/3))"},
      {"forest_repeats", "forests averaged per downstream score (default 10)"},
      {"forest_threads", "threads per forest (default 1)"},
      {"downstream", "true | false (default true)"},
      {"split_ratio", "train fraction (default 0.7)"},
      {"scale", "std | variance (default std)"},
      {"dae_input", "data+mask | data-only (default data+mask)"},
      {"nrms_mode", "pooled | per-feature (default pooled)"},
      {"parallel_seeds", "seeds run concurrently (default 1)"},
      {"output_dir", "directory for report files (default: alongside the config)"},
  };
  return keys;
}

namespace {

std::size_t to_count(const std::string& key, const std::string& v) {
  double d = 0;
  if (!parse_double(v, d) || d < 0 || d != std::floor(d) || d > 1e15) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(d);
}

double to_real(const std::string& key, const std::string& v) {
  double d = 0;
  if (!parse_double(v, d)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

ExperimentFile parse_experiment(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentFile f;
  std::set<std::string> known;
  for (const auto& [k, desc] : experiment_keys()) known.insert(k);

  std::vector<std::string> problems;
  std::set<std::string> seen;
  std::optional<std::vector<std::size_t>> checkpoints;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto& cfg = f.base;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_comment(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    const auto key = trim_copy(line.substr(0, eq));
    const auto value = trim_copy(line.substr(eq + 1));
    if (!known.count(key)) {
      problems.push_back("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      problems.push_back("line " + std::to_string(line_no) + ": field '" + key + "' given twice");
      continue;
    }
    try {
      if (key == "registry") {
        f.registry = std::filesystem::path(value).is_absolute() ? std::filesystem::path(value) : base_dir / value;
      } else if (key == "datasets") {
        f.datasets = split_list(value);
      } else if (key == "mechanism") {
        cfg.mechanism = parse_mechanism(value);
      } else if (key == "rate") {
        cfg.rate = to_real(key, value);
      } else if (key == "models") {
        cfg.models.clear();
        for (const auto& m : split_list(value)) cfg.models.push_back(parse_model_kind(m));
      } else if (key == "seeds") {
        cfg.seeds = to_count(key, value);
      } else if (key == "seed") {
        cfg.base_seed = to_count(key, value);
      } else if (key == "steps") {
        cfg.train.total_steps = to_count(key, value);
      } else if (key == "checkpoints") {
        std::vector<std::size_t> c;
        for (const auto& s : split_list(value)) c.push_back(to_count(key, s));
        checkpoints = std::move(c);
      } else if (key == "batch_size") {
        cfg.train.batch_size = to_count(key, value);
      } else if (key == "learning_rate") {
        cfg.train.learning_rate = to_real(key, value);
      } else if (key == "artificial_rate") {
        cfg.train.artificial_rate = to_real(key, value);
      } else if (key == "batch_mode") {
        if (value == "replacement") {
          cfg.train.batch_mode = BatchMode::with_replacement;
        } else if (value == "epochs") {
          cfg.train.batch_mode = BatchMode::shuffled_epochs;
        } else {
          throw ConfigError("batch_mode: expected replacement or epochs, got '" + value + "'");
        }
      } else if (key == "estimators") {
        cfg.forest.n_estimators = to_count(key, value);
      } else if (key == "max_leaves") {
        cfg.forest.max_leaf_nodes = to_count(key, value);
      } else if (key == "max_features") {
        cfg.forest.max_features = to_count(key, value);
      } else if (key == "forest_repeats") {
        cfg.forest_repeats = to_count(key, value);
      } else if (key == "forest_threads") {
        cfg.forest.threads = to_count(key, value);
      } else if (key == "downstream") {
        cfg.downstream = to_bool(key, value);
      } else if (key == "split_ratio") {
        cfg.split_ratio = to_real(key, value);
      } else if (key == "scale") {
        cfg.scale = parse_scale_mode(value);
      } else if (key == "dae_input") {
        cfg.dae_input = parse_dae_input(value);
      } else if (key == "nrms_mode") {
        cfg.nrms_mode = parse_nrms_mode(value);
      } else if (key == "parallel_seeds") {
        cfg.parallel_seeds = to_count(key, value);
      } else if (key == "output_dir") {
        f.output_dir = std::filesystem::path(value).is_absolute() ? std::filesystem::path(value) : base_dir / value;
      }
    } catch (const ConfigError& e) {
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.train.checkpoint_steps = checkpoints ? *checkpoints : TrainConfig::tail_checkpoints(cfg.train.total_steps);
  if (f.registry.empty()) problems.push_back("missing required field 'registry'");
  if (f.datasets.empty()) problems.push_back("missing required field 'datasets'");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    for (const auto& l : split_list(e.what(), '\n')) {
      if (l.rfind("invalid experiment configuration", 0) != 0) problems.push_back(l);
    }
  }
  if (!problems.empty()) {
    std::string msg = "experiment config does not match the schema:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return f;
}

ExperimentFile load_experiment(const std::filesystem::path& path) {
  return parse_experiment(read_text(path), path.parent_path());
}

}  // namespace daema
