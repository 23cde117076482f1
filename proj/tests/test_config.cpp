#include <doctest.h>

#include <functional>
#include <sstream>

#include "lace/config.hpp"
#include "lace/errors.hpp"

using namespace lace;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::vector<ConfigEntry> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "run.cfg");
}

}  // namespace

TEST_CASE("defaults are the published hyperparameters") {
  const ExperimentConfig c = preset(Experiment::exp1);
  CHECK(c.train.detector.window == 50);
  CHECK(c.train.detector.spike_ratio == 2.5);
  CHECK(c.train.detector.confirm == 1);
  CHECK(c.train.detector.cooldown == 60);
  CHECK(c.train.detector.warmup == 100);
  CHECK(c.train.sigma == 0.01);
  CHECK(c.train.lr == 3e-4);
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.d_base == 64);
  CHECK(c.train.d_max == 84);
  CHECK(c.train.num_domains == 10);
  CHECK(c.train.phase_length == 200);
}

TEST_CASE("presets") {
  const ExperimentConfig e5 = preset(Experiment::exp5);
  CHECK(e5.train.num_domains == 50);
  CHECK(e5.train.d_base == 8);
  CHECK(e5.train.d_max == 48);
  CHECK(e5.train.detector.sustained_enabled());
  const ExperimentConfig re = preset(Experiment::real_embed);
  CHECK(re.train.d_base == 32);
  CHECK(re.train.d_max == 128);
  CHECK(preset(Experiment::exp4).confirm_values == std::vector<std::size_t>{1, 3});
}

TEST_CASE("experiment ids") {
  CHECK(parse_experiment("exp3") == Experiment::exp3);
  CHECK(parse_experiment("cluster-sweep") == Experiment::cluster_sweep);
  CHECK(to_string(Experiment::real_embed) == "real-embed");
  CHECK_THROWS_AS(parse_experiment("exp6"), ConfigError);
}

TEST_CASE("parsing skips comments and blank lines") {
  const auto entries = parse("# header\n\nd_base = 16   # inline\n  lr=0.001\n");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].key == "d_base");
  CHECK(entries[0].value == "16");
  CHECK(entries[0].line == 3);
  CHECK(entries[1].key == "lr");
  CHECK(entries[1].line == 4);
}

TEST_CASE("syntax errors and unknown keys cite the line") {
  CHECK(error_of([] { parse("d_base = 1\nnonsense\n"); }).rfind("run.cfg:2: ", 0) == 0);
  CHECK(error_of([] { parse("\n\nfoo = 1\n"); }).rfind("run.cfg:3: unknown key", 0) == 0);
  CHECK(error_of([] { parse("= 4\n"); }).rfind("run.cfg:1: missing key", 0) == 0);
}

TEST_CASE("value errors cite the line") {
  ExperimentConfig c;
  const auto entries = parse("seed = 4\nd_max = lots\n");
  const std::string msg = error_of([&] { apply_entries(c, entries, "run.cfg"); });
  CHECK(msg.rfind("run.cfg:2: ", 0) == 0);
  CHECK(msg.find("lots") != std::string::npos);
  CHECK(c.train.seed == 4);
}

TEST_CASE("set and get every key") {
  ExperimentConfig c;
  set_value(c, "spike_ratio", "3.25");
  CHECK(c.train.detector.spike_ratio == 3.25);
  set_value(c, "sustained_threshold", "1.5");
  set_value(c, "sustained_steps", "40");
  CHECK(c.train.detector.sustained_enabled());
  set_value(c, "sustained_steps", "none");
  CHECK_FALSE(c.train.detector.sustained_steps.has_value());
  set_value(c, "confirm_values", "1, 2,5");
  CHECK(c.confirm_values == std::vector<std::size_t>{1, 2, 5});
  set_value(c, "inputs", "a.lact,b.lact");
  CHECK(c.inputs == std::vector<std::string>{"a.lact", "b.lact"});
  set_value(c, "experiment", "exp4");
  CHECK(c.experiment == Experiment::exp4);
  CHECK(get_value(c, "experiment") == "exp4");
  CHECK_THROWS_AS(set_value(c, "d_base", "-3"), ConfigError);
  CHECK_THROWS_AS(set_value(c, "d_base", "3.5"), ConfigError);
  CHECK_THROWS_AS(set_value(c, "bogus", "1"), ConfigError);
  for (const auto& key : config_keys()) CHECK_NOTHROW(get_value(c, key.name));
}

TEST_CASE("to_text round-trips") {
  ExperimentConfig c = preset(Experiment::exp5);
  c.train.lr = 1.0 / 3.0;
  c.train.seed = 12345678901234ULL;
  c.phases = {100, 250};
  c.inputs = {"x.lact", "y.lact"};
  const std::string text = to_text(c);
  ExperimentConfig back;
  apply_entries(back, parse(text), "round");
  CHECK(to_text(back) == text);
  CHECK(back.train.lr == c.train.lr);
  CHECK(back.train.detector.sustained_threshold == c.train.detector.sustained_threshold);
  CHECK(back.experiment == Experiment::exp5);
  CHECK(back.train.init.head == c.train.init.head);
}

TEST_CASE("experiment validation") {
  ExperimentConfig c = preset(Experiment::cluster_sweep);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.inputs = {"a"};
  CHECK_NOTHROW(c.validate());
  c = preset(Experiment::exp4);
  c.confirm_values = {1};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = preset(Experiment::real_embed);
  c.inputs = {"a", "b"};
  c.phases = {300};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = preset(Experiment::exp1);
  c.delta = 3.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
