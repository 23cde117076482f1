#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lace/clustering.hpp"
#include "lace/config.hpp"
#include "lace/report.hpp"
#include "lace/trainer.hpp"

namespace lace {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

bool all_pass(std::span<const Check> checks);

// Dynamic, Fixed-Large and Fixed-Small trained on the same task and seed.
struct ModeRuns {
  std::vector<TrainedRun> runs;  // indexed by Mode

  const TrainedRun& at(Mode m) const { return runs.at(static_cast<std::size_t>(m)); }
  const RunReport& report(Mode m) const { return at(m).report; }
};

inline constexpr Mode kModes[] = {Mode::dynamic, Mode::fixed_large, Mode::fixed_small};

// The three modes run concurrently.
ModeRuns run_modes(const TrainConfig& config);
ModeRuns run_modes(const TrainConfig& config, const ContinualTask& task);

std::vector<Check> exp1_checks(const ModeRuns& runs);
std::vector<Check> exp2_checks(const ModeRuns& runs);
std::vector<Check> exp3_checks(std::span<const AblationRow> rows);
std::vector<Check> exp4_checks(std::span<const ConfirmationRow> rows);
std::vector<Check> exp5_checks(const ModeRuns& runs);
// Qualitative only: expansions at the boundaries, precision 1.0, accuracy
// between the fixed baselines.
std::vector<Check> real_embed_checks(const ModeRuns& runs);

// One LACT file per domain; file i supplies domain i. Missing phases default
// to 300 steps.
std::unique_ptr<FeatureTask> load_feature_task(std::span<const std::string> files,
                                               std::span<const long> phases, double holdout_fraction,
                                               double current_fraction);

struct ExperimentResult {
  std::vector<Check> checks;
  std::vector<std::filesystem::path> written;
};

// Runs one experiment and writes its artifacts under `out_dir`, which must
// already exist. Throws ConfigError when it does not.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

CsvTable checks_table(std::span<const Check> checks);

}  // namespace lace
