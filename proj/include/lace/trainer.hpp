#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lace/detector.hpp"
#include "lace/domains.hpp"
#include "lace/dyn_model.hpp"

namespace lace {

enum class Mode { dynamic, fixed_large, fixed_small };

std::string_view to_string(Mode m);

struct TrainConfig {
  std::size_t d_base = 64;
  std::size_t d_max = 84;
  std::size_t d_emb = 32;
  std::size_t batch_size = 64;
  double lr = 3e-4;
  std::size_t seq_len = kSeqLen;
  std::size_t vocab = kVocab;
  double sigma = 0.01;  // std of a newly activated projection row
  double current_fraction = 0.0;  // share of each batch drawn from the newest domain
  DetectorConfig detector;
  std::size_t num_domains = 10;
  std::size_t phase_length = 200;
  std::size_t eval_interval = 20;
  std::size_t eval_per_domain = 100;
  Mode mode = Mode::dynamic;
  std::uint64_t seed = 1;
  InitScales init;

  void validate() const;
};

// A sequence of domains introduced one per phase, with a held-out evaluation
// split per domain. Batches mix the newest domain with earlier ones.
class ContinualTask {
 public:
  virtual ~ContinualTask() = default;

  virtual std::size_t num_domains() const = 0;
  virtual long total_steps() const = 0;
  virtual std::size_t active_domain(long step) const = 0;
  virtual long introduction_step(std::size_t domain) const = 0;
  virtual long phase_length(std::size_t domain) const = 0;

  // Input width seen by the projection (d_emb, or the feature width).
  virtual std::size_t input_width(const TrainConfig& config) const = 0;
  virtual std::size_t vocab(const TrainConfig& config) const = 0;

  // Samples a batch over the domains introduced by `step`, applies one update
  // and returns the pre-update mean loss.
  virtual double train_step(DynamicModel& model, long step, std::size_t batch_size, Rng& rng) const = 0;

  // Held-out accuracy on one domain.
  virtual double accuracy(const DynamicModel& model, std::size_t domain,
                          const AblationMask* ablation = nullptr) const = 0;

  std::vector<long> introduction_steps() const;
};

// Character-sequence domains from the synthetic corpus.
class SyntheticTask final : public ContinualTask {
 public:
  SyntheticTask(DomainSchedule schedule, std::size_t eval_per_domain, std::uint64_t seed,
                double current_fraction);

  const DomainSchedule& schedule() const { return schedule_; }
  const std::vector<Sample>& eval_samples(std::size_t domain) const { return eval_.at(domain); }
  std::vector<Sample> all_eval_samples() const;

  std::size_t num_domains() const override { return schedule_.num_domains(); }
  long total_steps() const override { return schedule_.total_steps(); }
  std::size_t active_domain(long step) const override { return schedule_.active_domain(step); }
  long introduction_step(std::size_t d) const override { return schedule_.introduction_step(d); }
  long phase_length(std::size_t) const override { return static_cast<long>(schedule_.phase_length()); }
  std::size_t input_width(const TrainConfig& config) const override { return config.d_emb; }
  std::size_t vocab(const TrainConfig& config) const override { return config.vocab; }
  double train_step(DynamicModel& model, long step, std::size_t batch_size, Rng& rng) const override;
  double accuracy(const DynamicModel& model, std::size_t domain,
                  const AblationMask* ablation) const override;

 private:
  DomainSchedule schedule_;
  std::vector<std::vector<Sample>> eval_;
  double current_fraction_;
};

// Precomputed input vectors (embedding layer bypassed), one pool per domain,
// split into train and held-out parts. Phases may differ in length.
class FeatureTask final : public ContinualTask {
 public:
  // `holdout_fraction` of each domain's samples (at least one) is held out.
  FeatureTask(std::vector<std::vector<std::vector<double>>> per_domain,
              std::vector<long> phase_lengths, double current_fraction,
              double holdout_fraction = 0.2);

  std::size_t num_domains() const override { return train_.size(); }
  long total_steps() const override { return starts_.back() + phases_.back(); }
  std::size_t active_domain(long step) const override;
  long introduction_step(std::size_t d) const override { return starts_.at(d); }
  long phase_length(std::size_t d) const override { return phases_.at(d); }
  std::size_t input_width(const TrainConfig&) const override { return width_; }
  std::size_t vocab(const TrainConfig&) const override { return 0; }
  double train_step(DynamicModel& model, long step, std::size_t batch_size, Rng& rng) const override;
  double accuracy(const DynamicModel& model, std::size_t domain,
                  const AblationMask* ablation) const override;

 private:
  std::vector<std::vector<FeatureSample>> train_;
  std::vector<std::vector<FeatureSample>> holdout_;
  std::vector<long> phases_;
  std::vector<long> starts_;
  std::size_t width_ = 0;
  double current_fraction_;
};

struct StepRecord {
  long step = 0;
  double loss = 0.0;
  std::optional<double> baseline;
  std::size_t d_active = 0;
  Decision decision = Decision::none;
  std::size_t cooldown_remaining = 0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EvalPoint {
  long step = 0;
  // Accuracy per domain; unset before the domain's introduction.
  std::vector<std::optional<double>> per_domain;
  double overall = 0.0;  // balanced mean over introduced domains

  friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

struct RunReport {
  Mode mode = Mode::dynamic;
  std::size_t d_base = 0;
  std::size_t d_max = 0;
  double final_accuracy = 0.0;
  std::vector<EvalPoint> evals;
  std::vector<ExpansionEvent> events;
  std::size_t d_final = 0;
  double d_avg = 0.0;
  double boundary_precision = 1.0;
  bool precision_vacuous = true;  // no events; precision reported as 1.0
  std::vector<StepRecord> trace;
  std::vector<long> introductions;

  std::vector<double> losses() const;
  friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct TrainedRun {
  RunReport report;
  DynamicModel model;
};

// Executes the training loop: sample batch, compute loss, Adam update, then
// (dynamic mode) consult the detector and expand when it fires and capacity
// remains. The loss joins the detector window after the decision.
TrainedRun train(const TrainConfig& config, const ContinualTask& task);
TrainedRun train(const TrainConfig& config);  // synthetic corpus per config
RunReport run(const TrainConfig& config);

struct PrecisionResult {
  double precision = 1.0;
  bool vacuous = true;  // true when there were no events
};

// An event at step t is a true positive iff some domain was introduced in
// (t - window, t].
PrecisionResult boundary_precision(std::span<const ExpansionEvent> events,
                                   std::span<const long> introductions, long window);
PrecisionResult boundary_precision(std::span<const ExpansionEvent> events,
                                   const DomainSchedule& schedule);

struct ForgettingCurves {
  std::vector<long> steps;  // one row per eval point
  std::size_t num_domains = 0;
  std::vector<std::vector<std::optional<double>>> accuracy;  // [row][domain]

  // Highest accuracy at or after the domain's introduction.
  std::optional<double> peak(std::size_t domain) const;
  std::optional<double> final_value(std::size_t domain) const;
};

ForgettingCurves forgetting_curves(const RunReport& report);

struct AblationRow {
  std::string condition;  // "baseline", "dim <i>", "all adapter dims"
  std::optional<std::size_t> dim;
  double accuracy = 0.0;
  double drop = 0.0;
};

// Baseline, every adapter dimension alone, then all adapter dimensions.
// Throws InvalidAblation when the model has no adapter dimensions.
std::vector<AblationRow> ablation_sweep(const DynamicModel& model, const ContinualTask& task);
std::vector<AblationRow> ablation_sweep(const DynamicModel& model, std::span<const Sample> eval);

struct ConfirmationRow {
  std::size_t confirm = 1;
  RunReport report;
  std::size_t replay_expansions = 0;  // on the shared replayed loss stream
};

// One run per K with everything else fixed, plus a replay of the first run's
// loss stream through a detector with each K. Requires >= 2 values.
std::vector<ConfirmationRow> compare_confirmation(const TrainConfig& config,
                                                  std::span<const std::size_t> confirm_values);

double accuracy(const DynamicModel& model, std::span<const Sample> samples,
                const AblationMask* ablation = nullptr);

}  // namespace lace
