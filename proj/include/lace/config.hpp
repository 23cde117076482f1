#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lace/trainer.hpp"

namespace lace {

enum class Experiment { exp1, exp2, exp3, exp4, exp5, cluster_sweep, real_embed };

std::string_view to_string(Experiment e);
// Accepts exp1..exp5, cluster-sweep, real-embed. Throws ConfigError otherwise.
Experiment parse_experiment(std::string_view id);

struct ExperimentConfig {
  Experiment experiment = Experiment::exp1;
  TrainConfig train;
  std::vector<std::size_t> confirm_values{1, 3};  // exp4
  std::size_t d_pca = 32;                         // cluster-sweep
  double delta = 0.15;                            // cluster-sweep
  std::vector<std::string> inputs;                // LACT files, one per layer or domain
  std::vector<long> phases;                       // real-embed, one per input
  double holdout_fraction = 0.2;                  // real-embed

  void validate() const;
};

// Defaults for an experiment before any file or flag overrides.
ExperimentConfig preset(Experiment e);

struct ConfigKey {
  std::string_view name;
  std::string_view help;
};

// Every settable key, in the order used by to_text.
std::span<const ConfigKey> config_keys();

// Throws ConfigError for an unknown key or an unparsable value.
void set_value(ExperimentConfig& config, std::string_view key, std::string_view value);
std::string get_value(const ExperimentConfig& config, std::string_view key);

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Flat `key = value` lines; `#` starts a comment; blank lines are ignored.
// Syntax errors and unknown keys are reported as "<source>:<line>: ...".
std::vector<ConfigEntry> parse_config(std::istream& in, std::string_view source);
std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path);

// Applies entries in order; value errors are reported with the entry's line.
void apply_entries(ExperimentConfig& config, std::span<const ConfigEntry> entries,
                   std::string_view source);

// One `key = value` line per key; parse_config + apply_entries round-trips it.
std::string to_text(const ExperimentConfig& config);

}  // namespace lace
