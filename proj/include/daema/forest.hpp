#pragma once

// Random forests used as the downstream evaluator: CART trees grown
// best-first under a leaf budget, bootstrap aggregation, accuracy / NRMS.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "daema/ndcore.hpp"
#include "daema/pipeline.hpp"
#include "daema/rng.hpp"

namespace daema {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForestConfig {
  std::size_t n_estimators = 100;
  std::size_t max_leaf_nodes = 1000;
  Task task = Task::classification;
  std::uint64_t seed = 0;
  // Features tried per split; unset means sqrt(d) for classification and
  // ceil(d/3) for regression.
  std::optional<std::size_t> max_features;
  bool bootstrap = true;
  std::size_t threads = 1;

  std::size_t features_per_split(std::size_t d) const;
};

struct TreeNode {
  // Internal node: feature >= 0; rows with x[feature] <= threshold go left.
  int feature = -1;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  // Leaf: class histogram (classification) or {mean} (regression).
  std::vector<double> value;

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  Tree(std::vector<TreeNode> nodes, Task task) : nodes_(std::move(nodes)), task_(task) {}

  // Class index or regression value.
  double predict(std::span<const double> x) const;
  const TreeNode& leaf_for(std::span<const double> x) const;
  std::size_t leaf_count() const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
  Task task_ = Task::classification;
};

// Grows one tree on `rows` of X (duplicates allowed, as produced by
// bootstrapping). `n_classes` is ignored for regression.
Tree fit_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows, const ForestConfig& cfg,
              std::size_t n_classes, Rng& rng);
Tree fit_tree(const Matrix& x, std::span<const double> y, const ForestConfig& cfg, std::size_t n_classes, Rng& rng);

class Forest {
 public:
  Forest() = default;
  Forest(std::vector<Tree> trees, Task task, std::size_t n_classes)
      : trees_(std::move(trees)), task_(task), n_classes_(n_classes) {}

  // Majority vote (ties go to the lowest class) or mean of tree outputs.
  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& x) const;
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
  Task task_ = Task::classification;
  std::size_t n_classes_ = 0;
};

// n draws with replacement from [0, n).
std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng);

// Each tree gets its own stream derived from cfg.seed and its index, so the
// result does not depend on cfg.threads.
Forest fit_forest(const Matrix& x, std::span<const double> y, const ForestConfig& cfg, std::size_t n_classes);

double accuracy(std::span<const double> predicted, std::span<const double> truth);
// RMSE divided by the population standard deviation of `truth`.
double regression_nrms(std::span<const double> predicted, std::span<const double> truth);

// Mean test score of `repeats` forests trained on the imputed train set with
// seeds derived from cfg.seed: accuracy for classification, NRMS for
// regression.
double downstream_score(const Matrix& train_x, std::span<const double> train_y, const Matrix& test_x,
                        std::span<const double> test_y, const ForestConfig& cfg, std::size_t n_classes,
                        std::size_t repeats = 10);

}  // namespace daema
