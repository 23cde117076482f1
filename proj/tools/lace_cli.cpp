#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lace/config.hpp"
#include "lace/domains.hpp"
#include "lace/errors.hpp"
#include "lace/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::string flag_name(std::string_view key) {
  std::string out(key);
  std::replace(out.begin(), out.end(), '_', '-');
  return "--" + out;
}

void dump_corpus(const lace::ExperimentConfig& config, std::ostream& out) {
  const auto& tc = config.train;
  const auto schedule = lace::DomainSchedule::sequential(tc.num_domains, tc.phase_length, tc.seed);
  for (const auto& s : schedule.eval_set(tc.num_domains - 1, tc.eval_per_domain, tc.seed)) {
    out << s.label << '\t' << lace::escape_tsv(lace::to_text(s)) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-spike-driven capacity expansion experiments"};
  app.set_version_flag("--version", "lace 1.0");

  std::optional<std::string> exp_id;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool check = false;
  bool dump = false;
  app.add_option("--exp", exp_id, "exp1|exp2|exp3|exp4|exp5|cluster-sweep|real-embed");
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_dir, "existing output directory");
  app.add_flag("--check", check, "exit 1 when an acceptance band fails");
  app.add_flag("--dump-corpus", dump, "print the synthetic corpus as TSV (label, sample) and exit");

  // One override flag per config key.
  struct Override {
    std::string key;
    std::string flag;
    std::string help;
    std::string value;
  };
  std::vector<Override> overrides;
  for (const auto& key : lace::config_keys()) {
    if (key.name == "experiment" || key.name == "seed") continue;
    overrides.push_back({std::string(key.name), flag_name(key.name), std::string(key.help), {}});
  }
  for (auto& o : overrides) app.add_option(o.flag, o.value, o.help)->group("Overrides");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  lace::ExperimentConfig config;
  try {
    std::vector<lace::ConfigEntry> entries;
    if (config_path) entries = lace::read_config_file(*config_path);
    // The experiment picks the preset; file entries then flags override it.
    lace::ExperimentConfig probe;
    if (config_path) lace::apply_entries(probe, entries, *config_path);
    const lace::Experiment e = exp_id ? lace::parse_experiment(*exp_id) : probe.experiment;
    config = lace::preset(e);
    if (config_path) lace::apply_entries(config, entries, *config_path);
    config.experiment = e;
    if (seed) config.train.seed = *seed;
    for (const auto& o : overrides) {
      if (app.count(o.flag) == 0) continue;
      try {
        lace::set_value(config, o.key, o.value);
      } catch (const lace::ConfigError& err) {
        throw lace::ConfigError(o.flag + ": " + err.what());
      }
    }
    config.validate();
  } catch (const lace::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  }

  if (dump) {
    dump_corpus(config, std::cout);
    return kOk;
  }
  if (out_dir.empty()) {
    std::cerr << "error: --out is required\n";
    return kUsage;
  }
  if (!std::filesystem::is_directory(out_dir)) {
    std::cerr << "error: output directory " << out_dir << " does not exist\n";
    return kUsage;
  }

  lace::ExperimentResult result;
  try {
    result = lace::run_experiment(config, out_dir);
  } catch (const lace::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  }
  for (const auto& c : result.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
  }
  std::cout << "wrote " << result.written.size() << " files to " << out_dir << '\n';
  if (check && !lace::all_pass(result.checks)) return kCheckFailed;
  return kOk;
}
