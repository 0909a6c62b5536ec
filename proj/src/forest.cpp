#include "daema/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace daema {

namespace {

constexpr double kRelTol = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

double midpoint(double lo, double hi) {
  const double m = lo + (hi - lo) / 2.0;
  return m < hi ? m : lo;
}

bool better(double gain, double best) { return gain > best + kRelTol * std::max(1.0, std::abs(best)); }

std::vector<double> leaf_value(std::span<const double> y, std::span<const std::size_t> rows, Task task,
                               std::size_t n_classes) {
  if (task == Task::classification) {
    std::vector<double> hist(n_classes, 0.0);
    for (auto r : rows) hist[static_cast<std::size_t>(y[r])] += 1.0;
    return hist;
  }
  double s = 0.0;
  for (auto r : rows) s += y[r];
  return {s / static_cast<double>(rows.size())};
}

class SplitFinder {
 public:
  SplitFinder(const Matrix& x, std::span<const double> y, Task task, std::size_t n_classes)
      : x_(x), y_(y), task_(task), n_classes_(n_classes) {}

  // Weighted impurity of the node (n * gini or n * variance).
  double node_impurity(std::span<const std::size_t> rows) const {
    const double n = static_cast<double>(rows.size());
    if (task_ == Task::classification) {
      std::vector<double> counts(n_classes_, 0.0);
      for (auto r : rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
      double sq = 0.0;
      for (double c : counts) sq += c * c;
      return n - sq / n;
    }
    double s = 0.0, s2 = 0.0;
    for (auto r : rows) {
      s += y_[r];
      s2 += y_[r] * y_[r];
    }
    return std::max(0.0, s2 - s * s / n);
  }

  Split best(std::span<const std::size_t> rows, std::span<const std::size_t> features) {
    Split best;
    const double parent = node_impurity(rows);
    if (rows.size() < 2 || parent <= 0.0) return best;
    order_.assign(rows.begin(), rows.end());
    for (auto f : features) {
      std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      const auto cand = task_ == Task::classification ? sweep_classification(f) : sweep_regression(f);
      if (cand.feature >= 0 && (best.feature < 0 || better(cand.gain, best.gain))) best = cand;
    }
    if (best.feature >= 0 && !(best.gain > kRelTol * parent)) best = Split{};
    return best;
  }

 private:
  Split sweep_classification(std::size_t f) {
    const std::size_t n = order_.size();
    std::vector<double> left(n_classes_, 0.0), right(n_classes_, 0.0);
    for (auto r : order_) right[static_cast<std::size_t>(y_[r])] += 1.0;
    double sq_left = 0.0, sq_right = 0.0;
    for (double c : right) sq_right += c * c;
    const double parent = static_cast<double>(n) - sq_right / static_cast<double>(n);
    Split best;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = static_cast<std::size_t>(y_[order_[i]]);
      sq_left += 2.0 * left[c] + 1.0;
      left[c] += 1.0;
      sq_right -= 2.0 * right[c] - 1.0;
      right[c] -= 1.0;
      const double lo = x_(order_[i], f), hi = x_(order_[i + 1], f);
      if (!(lo < hi)) continue;
      const double nl = static_cast<double>(i + 1), nr = static_cast<double>(n - i - 1);
      const double gain = parent - (nl - sq_left / nl) - (nr - sq_right / nr);
      if (best.feature < 0 || better(gain, best.gain)) best = {static_cast<int>(f), midpoint(lo, hi), gain};
    }
    return best;
  }

  Split sweep_regression(std::size_t f) {
    const std::size_t n = order_.size();
    double total = 0.0;
    for (auto r : order_) total += y_[r];
    const double base = total * total / static_cast<double>(n);
    double left = 0.0;
    Split best;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left += y_[order_[i]];
      const double lo = x_(order_[i], f), hi = x_(order_[i + 1], f);
      if (!(lo < hi)) continue;
      const double nl = static_cast<double>(i + 1), nr = static_cast<double>(n - i - 1);
      const double right = total - left;
      const double gain = left * left / nl + right * right / nr - base;
      if (best.feature < 0 || better(gain, best.gain)) best = {static_cast<int>(f), midpoint(lo, hi), gain};
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  Task task_;
  std::size_t n_classes_;
  std::vector<std::size_t> order_;
};

std::vector<std::size_t> sample_features(std::size_t d, std::size_t k, Rng& rng) {
  std::vector<std::size_t> all(d);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (k >= d) return all;
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng.below(d - i)]);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

struct Frontier {
  std::size_t node;
  std::vector<std::size_t> rows;
  Split split;
};

}  // namespace

std::size_t ForestConfig::features_per_split(std::size_t d) const {
  if (max_features) return std::clamp<std::size_t>(*max_features, 1, d);
  if (task == Task::regression) return std::max<std::size_t>(1, (d + 2) / 3);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
}

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& nd = nodes_[i];
    i = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes_[i];
}

double Tree::predict(std::span<const double> x) const {
  const auto& leaf = leaf_for(x);
  if (task_ == Task::classification) {
    return static_cast<double>(std::distance(leaf.value.begin(), std::max_element(leaf.value.begin(), leaf.value.end())));
  }
  return leaf.value[0];
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

Tree fit_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows, const ForestConfig& cfg,
              std::size_t n_classes, Rng& rng) {
  if (rows.empty() || x.rows == 0) throw FitError("fit_tree: no training rows");
  if (y.size() != x.rows) throw FitError("fit_tree: label count differs from row count");
  if (cfg.max_leaf_nodes < 1) throw FitError("fit_tree: max_leaf_nodes must be at least 1");
  if (cfg.task == Task::classification) {
    for (auto r : rows) {
      if (!(y[r] >= 0.0) || static_cast<std::size_t>(y[r]) >= n_classes || y[r] != std::floor(y[r])) {
        throw FitError("fit_tree: class label outside [0, n_classes)");
      }
    }
  }
  const std::size_t k = cfg.features_per_split(x.cols);
  SplitFinder finder(x, y, cfg.task, n_classes);

  std::vector<TreeNode> nodes;
  nodes.push_back({-1, 0.0, 0, 0, leaf_value(y, rows, cfg.task, n_classes)});

  // Gains within rounding of the best count as tied; the lowest node id wins.
  std::vector<Frontier> frontier;
  auto pop_best = [&frontier] {
    double top = frontier.front().split.gain;
    for (const auto& f : frontier) top = std::max(top, f.split.gain);
    std::size_t pick = frontier.size();
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      if (better(top, frontier[i].split.gain)) continue;
      if (pick == frontier.size() || frontier[i].node < frontier[pick].node) pick = i;
    }
    Frontier f = std::move(frontier[pick]);
    frontier[pick] = std::move(frontier.back());
    frontier.pop_back();
    return f;
  };

  auto consider = [&](std::size_t node, std::vector<std::size_t> node_rows) {
    const auto features = sample_features(x.cols, k, rng);
    const Split s = finder.best(node_rows, features);
    if (s.feature >= 0) frontier.push_back({node, std::move(node_rows), s});
  };
  consider(0, {rows.begin(), rows.end()});

  std::size_t leaves = 1;
  while (leaves < cfg.max_leaf_nodes && !frontier.empty()) {
    Frontier f = pop_best();
    std::vector<std::size_t> left, right;
    const auto feat = static_cast<std::size_t>(f.split.feature);
    for (auto r : f.rows) (x(r, feat) <= f.split.threshold ? left : right).push_back(r);

    const std::size_t li = nodes.size();
    nodes.push_back({-1, 0.0, 0, 0, leaf_value(y, left, cfg.task, n_classes)});
    nodes.push_back({-1, 0.0, 0, 0, leaf_value(y, right, cfg.task, n_classes)});
    auto& parent = nodes[f.node];
    parent.feature = f.split.feature;
    parent.threshold = f.split.threshold;
    parent.left = li;
    parent.right = li + 1;
    parent.value.clear();
    ++leaves;

    consider(li, std::move(left));
    consider(li + 1, std::move(right));
  }
  return Tree(std::move(nodes), cfg.task);
}

Tree fit_tree(const Matrix& x, std::span<const double> y, const ForestConfig& cfg, std::size_t n_classes, Rng& rng) {
  std::vector<std::size_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_tree(x, y, rows, cfg, n_classes, rng);
}

double Forest::predict(std::span<const double> x) const {
  if (task_ == Task::classification) {
    std::vector<std::size_t> votes(n_classes_, 0);
    for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x))];
    return static_cast<double>(std::distance(votes.begin(), std::max_element(votes.begin(), votes.end())));
  }
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(x);
  return s / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict(const Matrix& x) const {
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i));
  return out;
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng) {
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = rng.below(n);
  return rows;
}

Forest fit_forest(const Matrix& x, std::span<const double> y, const ForestConfig& cfg, std::size_t n_classes) {
  if (cfg.n_estimators < 1) throw FitError("fit_forest: need at least one estimator");
  if (x.rows == 0) throw FitError("fit_forest: no training rows");
  std::vector<Tree> trees(cfg.n_estimators);
  auto grow = [&](std::size_t t) {
    Rng rng = Rng::derive(cfg.seed, "tree", t);
    std::vector<std::size_t> rows(x.rows);
    if (cfg.bootstrap) {
      rows = bootstrap_sample(x.rows, rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[t] = fit_tree(x, y, rows, cfg, n_classes, rng);
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, cfg.n_estimators);
  if (threads == 1) {
    for (std::size_t t = 0; t < cfg.n_estimators; ++t) grow(t);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < cfg.n_estimators; t += threads) grow(t);
      });
    }
  }
  return Forest(std::move(trees), cfg.task, n_classes);
}

double accuracy(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw std::invalid_argument("accuracy: bad lengths");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double regression_nrms(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw std::invalid_argument("regression_nrms: bad lengths");
  const double n = static_cast<double>(truth.size());
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
  double se = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    se += (predicted[i] - truth[i]) * (predicted[i] - truth[i]);
    ss += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss <= 0.0) throw std::invalid_argument("regression_nrms: constant targets");
  return std::sqrt(se / n) / std::sqrt(ss / n);
}

double downstream_score(const Matrix& train_x, std::span<const double> train_y, const Matrix& test_x,
                        std::span<const double> test_y, const ForestConfig& cfg, std::size_t n_classes,
                        std::size_t repeats) {
  if (!all_finite(train_x) || !all_finite(test_x)) {
    throw std::invalid_argument("downstream_score: imputed matrices still contain missing or non-finite cells");
  }
  if (repeats == 0) throw std::invalid_argument("downstream_score: repeats must be positive");
  double total = 0.0;
  for (std::size_t r = 0; r < repeats; ++r) {
    ForestConfig c = cfg;
    c.seed = Rng::derive(cfg.seed, "forest", r).next_u64();
    const Forest f = fit_forest(train_x, train_y, c, n_classes);
    const auto pred = f.predict(test_x);
    total += cfg.task == Task::classification ? accuracy(pred, test_y) : regression_nrms(pred, test_y);
  }
  return total / static_cast<double>(repeats);
}

}  // namespace daema
