#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "daema/csv.hpp"
#include "daema/pipeline.hpp"
#include "tmpdir.hpp"

using namespace daema;

namespace {

const std::filesystem::path kData = DAEMA_DATA_DIR;

Dataset toy(std::size_t n, std::size_t d) {
  Dataset ds;
  ds.features = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = static_cast<double>(i * d + j);
    ds.row_ids.push_back(i);
  }
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
  return ds;
}

}  // namespace

TEST_CASE("load a small labelled CSV") {
  TempDir dir;
  const auto p = dir.write("s.csv", "a,b,class\n1,2,yes\n3,NA,no\n5,6,yes\n");
  const auto ds = load_csv(p, std::string("class"), Task::classification);
  CHECK(ds.n() == 3);
  CHECK(ds.d() == 2);
  REQUIRE(ds.label);
  CHECK(ds.class_names == std::vector<std::string>{"no", "yes"});
  CHECK(*ds.label == std::vector<double>{1, 0, 1});
  CHECK(std::isnan(ds.features(1, 1)));
  CHECK(ds.row_has_na(1));
  CHECK_FALSE(ds.row_has_na(0));
}

TEST_CASE("numeric class labels sort numerically") {
  TempDir dir;
  const auto p = dir.write("s.csv", "a,b,t\n1,2,10\n3,4,9\n5,6,2\n");
  const auto ds = load_csv(p, std::string("t"), Task::classification);
  CHECK(ds.class_names == std::vector<std::string>{"2", "9", "10"});
  CHECK(*ds.label == std::vector<double>{2, 1, 0});
}

TEST_CASE("load errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_csv(dir.write("a.csv", "a,b\n1,2\n"), std::string("class"), Task::classification),
                  ConfigError);
  CHECK_THROWS_AS(load_csv(dir.write("b.csv", "a,class\n1,x\n"), std::string("class"), Task::classification),
                  ConfigError);
  try {
    load_csv(dir.write("c.csv", "a,b\n1,2\n3,oops\n"), std::nullopt, Task::none);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("oops") != std::string::npos);
    CHECK(msg.find("b") != std::string::npos);
  }
}

TEST_CASE("Breast: 16 rows with NA are dropped") {
  const auto raw = load_csv(kData / "breast.csv", std::string("class"), Task::classification);
  CHECK(raw.n() == 699);
  std::size_t na_rows = 0;
  for (std::size_t i = 0; i < raw.n(); ++i) na_rows += raw.row_has_na(i) ? 1 : 0;
  CHECK(na_rows == 16);
  const std::vector<CleanRule> rules{CleanRule::drop_na()};
  const auto res = clean(raw, rules);
  CHECK(res.removed_rows == 16);
  CHECK(res.dataset.n() == 683);
  CHECK(all_finite(res.dataset.features));
}

TEST_CASE("outlier rule removes four planted outliers in the sixth feature") {
  Dataset ds = toy(200, 8);
  Rng rng(4);
  for (std::size_t i = 0; i < ds.n(); ++i) ds.features(i, 5) = rng.uniform(0, 10);
  for (std::size_t i : {3u, 50u, 120u, 199u}) ds.features(i, 5) = 1e6 + static_cast<double>(i);
  const std::vector<CleanRule> rules{CleanRule::outliers(5, 5.0)};
  const auto res = clean(ds, rules);
  CHECK(res.removed_rows == 4);
  CHECK(res.dataset.n() == 196);
  for (std::size_t i = 0; i < res.dataset.n(); ++i) CHECK(res.dataset.features(i, 5) < 10);
  // Idempotent.
  const auto again = clean(res.dataset, rules);
  CHECK(again.removed_rows == 0);
  CHECK(again.dataset.features == res.dataset.features);
}

TEST_CASE("drop-rows and no rules") {
  const Dataset ds = toy(12, 3);
  const auto same = clean(ds, {});
  CHECK(same.removed_rows == 0);
  CHECK(same.dataset.features == ds.features);
  const std::vector<CleanRule> rules{CleanRule::rows({0, 11, 5})};
  const auto res = clean(ds, rules);
  CHECK(res.dataset.n() == 9);
  CHECK(std::find(res.dataset.row_ids.begin(), res.dataset.row_ids.end(), 5) == res.dataset.row_ids.end());
  CHECK(clean(res.dataset, rules).removed_rows == 0);
}

TEST_CASE("rules naming a missing feature are config errors") {
  const Dataset ds = toy(12, 3);
  const std::vector<CleanRule> rules{CleanRule::outliers(3, 2.0)};
  CHECK_THROWS_AS(clean(ds, rules), ConfigError);
}

TEST_CASE("clean rule text round trip") {
  for (std::string s : {"drop-na", "outliers:5:4.5", "rows:1;7;9"}) CHECK(to_string(parse_clean_rule(s)) == s);
  CHECK_THROWS_AS(parse_clean_rule("outliers:x:1"), ConfigError);
  CHECK_THROWS_AS(parse_clean_rule("bogus"), ConfigError);
}

TEST_CASE("split sizes and partition") {
  Rng rng(1);
  auto s = split_indices(10, 0.7, rng);
  CHECK(s.train.size() == 7);
  CHECK(s.test.size() == 3);
  auto g = split_indices(214, 0.7, rng);
  CHECK(g.train.size() == 149);
  CHECK(g.test.size() == 65);
  std::set<std::size_t> all(g.train.begin(), g.train.end());
  all.insert(g.test.begin(), g.test.end());
  CHECK(all.size() == 214);
  CHECK_THROWS_AS(split_indices(9, 0.7, rng), DataError);
  Rng a(5), b(5);
  CHECK(split_indices(100, 0.7, a).train == split_indices(100, 0.7, b).train);
}

TEST_CASE("z-normalization hand example") {
  const Matrix x = Matrix::from_rows({{1, 7}, {3, 7}});
  const auto st = fit_norm_stats(x, nullptr);
  CHECK(st.mean == std::vector<double>{2, 7});
  CHECK(st.scale[0] == 1.0);
  CHECK(st.scale[1] == kScaleFloor);
  const Matrix z = normalize(x, st);
  CHECK(z == Matrix::from_rows({{-1, 0}, {1, 0}}));
  CHECK(denormalize(z, st) == x);
  const auto var = fit_norm_stats(Matrix::from_rows({{0}, {4}}), nullptr, ScaleMode::variance);
  CHECK(var.scale[0] == 4.0);
}

TEST_CASE("missing cells are excluded from the statistics") {
  const Matrix x = Matrix::from_rows({{1, 0}, {3, 100}, {1000, 2}});
  MaskMatrix m(3, 2);
  m.set(2, 0, true);
  m.set(1, 1, true);
  const auto st = fit_norm_stats(x, &m);
  CHECK(st.mean[0] == 2.0);
  CHECK(st.mean[1] == 1.0);
  MaskMatrix all(3, 2);
  for (std::size_t i = 0; i < 3; ++i) all.set(i, 1, true);
  CHECK_THROWS_AS(fit_norm_stats(x, &all), DataError);
}

TEST_CASE("znormalize: train mean is zero, test uses train stats") {
  const auto raw = load_csv(kData / "glass.csv", std::string("type"), Task::classification);
  Rng rng(3);
  const auto pair = znormalize(split(raw, 0.7, rng));
  REQUIRE(pair.stats);
  for (std::size_t j = 0; j < pair.train.d(); ++j) {
    double s = 0;
    for (std::size_t i = 0; i < pair.train.n(); ++i) s += pair.train.features(i, j);
    CHECK(std::abs(s / static_cast<double>(pair.train.n())) < 1e-10);
  }
  CHECK(pair.test.n() == 65);
  CHECK(pair.train.label->size() == 149);
}
