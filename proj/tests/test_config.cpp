#include <doctest.h>

#include "daema/config.hpp"
#include "tmpdir.hpp"

using namespace daema;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_experiment(text, "/base");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("list helpers") {
  CHECK(split_list(" a, b ,,c ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(trim_copy("\t x y \r\n") == "x y");
  CHECK(trim_copy("   ").empty());
}

TEST_CASE("registry parsing") {
  const auto reg = Registry::parse(
      "# comment\n[glass]\npath = glass.csv\nlabel = type\ntask = classification\n\n"
      "[boston]\npath=/abs/boston.csv\nlabel=medv\ntask=regression\nclean = outliers:5:4, drop-na\n",
      "/data");
  CHECK(reg.ids() == std::vector<std::string>{"boston", "glass"});
  CHECK(reg.at("glass").csv_path == std::filesystem::path("/data/glass.csv"));
  CHECK(reg.at("boston").csv_path == std::filesystem::path("/abs/boston.csv"));
  CHECK(reg.at("boston").task == Task::regression);
  REQUIRE(reg.at("boston").clean_rules.size() == 2);
  CHECK(reg.at("boston").clean_rules[0].feature == 5);
  try {
    reg.at("eeg");
    FAIL("expected unknown dataset");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("boston, glass") != std::string::npos);
  }
}

TEST_CASE("registry problems are reported together") {
  try {
    Registry::parse("[a]\npath = a.csv\ncolour = red\n[a]\npath = b.csv\n[b]\nlabel = y\n", "/d");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("colour") != std::string::npos);
    CHECK(msg.find("duplicate") != std::string::npos);
    CHECK(msg.find("'b' has no path") != std::string::npos);
  }
}

TEST_CASE("shipped registry loads, missing files surface at load time") {
  const auto reg = Registry::load(std::filesystem::path(DAEMA_DATA_DIR) / "registry.ini");
  for (const char* id : {"breast", "boston", "glass", "ionosphere", "eeg", "shuttle", "casp"}) CHECK(reg.contains(id));
  CHECK(reg.load_dataset("breast").dataset.n() == 683);
  CHECK(reg.load_dataset("boston").dataset.n() == 506);
  CHECK(reg.load_dataset("glass").dataset.n() == 214);
  CHECK(reg.load_dataset("ionosphere").dataset.n() == 351);
  TempDir dir;
  const auto p = dir.write("r.ini", "[x]\npath = nothere.csv\n");
  CHECK_THROWS_AS(Registry::load(p).load_dataset("x"), ConfigError);
}

TEST_CASE("experiment file defaults and overrides") {
  const auto f = parse_experiment(
      "registry = ../data/registry.ini\ndatasets = breast, glass\nmodels = daema, dae, mean\nsteps = 1000\n"
      "mechanism = mnar\nseeds = 3 # trailing comment\ndownstream = false\noutput_dir = out\n",
      "/base/cfg");
  CHECK(f.registry == std::filesystem::path("/base/cfg/../data/registry.ini"));
  CHECK(f.datasets == std::vector<std::string>{"breast", "glass"});
  CHECK(f.base.models == std::vector<ModelKind>{ModelKind::daema, ModelKind::dae, ModelKind::mean});
  CHECK(f.base.mechanism == Mechanism::mnar);
  CHECK(f.base.seeds == 3);
  CHECK_FALSE(f.base.downstream);
  CHECK(f.base.train.checkpoint_steps == TrainConfig::tail_checkpoints(1000));
  CHECK(f.base.rate == 0.2);
  CHECK(f.base.forest.n_estimators == 100);
  REQUIRE(f.output_dir);
  CHECK(*f.output_dir == std::filesystem::path("/base/cfg/out"));
  const auto g = parse_experiment("registry = r.ini\ndatasets = a\nsteps = 10\ncheckpoints = 5, 10\n", "/b");
  CHECK(g.base.train.checkpoint_steps == std::vector<std::size_t>{5, 10});
}

TEST_CASE("schema violations list every field") {
  const auto msg = error_of("datasets = a\ncolour = red\nrate = lots\nseeds = 0\nseeds = 2\nmodels = gain\n"
                            "batch_mode = sometimes\ncheckpoints = 50\nsteps = 10\n");
  CHECK(msg.find("registry") != std::string::npos);
  CHECK(msg.find("colour") != std::string::npos);
  CHECK(msg.find("rate") != std::string::npos);
  CHECK(msg.find("given twice") != std::string::npos);
  CHECK(msg.find("gain") != std::string::npos);
  CHECK(msg.find("sometimes") != std::string::npos);
  CHECK(msg.find("seeds must be at least 1") != std::string::npos);
  CHECK(msg.find("checkpoint step 50") != std::string::npos);
  CHECK(error_of("registry = r\n").find("datasets") != std::string::npos);
  CHECK(experiment_keys().size() >= 20);
}

TEST_CASE("shipped experiment configs parse") {
  const auto dir = std::filesystem::path(DAEMA_DATA_DIR).parent_path() / "configs";
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".cfg") continue;
    ++n;
    const auto f = load_experiment(e.path());
    const auto reg = Registry::load(f.registry);
    for (const auto& id : f.datasets) CHECK(reg.contains(id));
  }
  CHECK(n >= 3);
}
