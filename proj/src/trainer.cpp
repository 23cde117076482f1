#include "lace/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "lace/errors.hpp"
#include "lace/parallel.hpp"

namespace lace {

namespace {

constexpr std::uint64_t kModelStream = 0x4D0DE1;
constexpr std::uint64_t kBatchStream = 0xBA7C4;
constexpr std::uint64_t kExpandStream = 0xE4A9D;

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::dynamic:
      return "dynamic";
    case Mode::fixed_large:
      return "fixed_large";
    case Mode::fixed_small:
      return "fixed_small";
  }
  return "dynamic";
}

void TrainConfig::validate() const {
  if (d_base > d_max) throw ConfigError("d_base must not exceed d_max");
  if (d_max == 0) throw ConfigError("d_max must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (sigma < 0.0) throw ConfigError("sigma must be non-negative");
  if (num_domains == 0) throw ConfigError("num_domains must be positive");
  if (phase_length == 0) throw ConfigError("phase_length must be positive");
  if (eval_interval == 0) throw ConfigError("eval_interval must be positive");
  if (eval_per_domain == 0) throw ConfigError("eval_per_domain must be positive");
  if (vocab > kVocab) throw ConfigError("vocab must not exceed 128");
  if (!(current_fraction >= 0.0 && current_fraction <= 1.0)) {
    throw ConfigError("current_fraction must lie in [0, 1]");
  }
  detector.validate();
}

std::vector<long> ContinualTask::introduction_steps() const {
  std::vector<long> out(num_domains());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = introduction_step(d);
  return out;
}

double accuracy(const DynamicModel& model, std::span<const Sample> samples,
                const AblationMask* ablation) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const Vector logits = ablation ? model.forward_ablated(s.tokens, *ablation)
                                   : model.forward(s.tokens).logits;
    correct += argmax(logits) == s.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// SyntheticTask

SyntheticTask::SyntheticTask(DomainSchedule schedule, std::size_t eval_per_domain,
                             std::uint64_t seed, double current_fraction)
    : schedule_(std::move(schedule)), current_fraction_(current_fraction) {
  eval_.reserve(schedule_.num_domains());
  for (const auto& spec : schedule_.domains()) {
    eval_.push_back(generate(spec, seed ^ kEvalSeedSalt, eval_per_domain));
  }
}

std::vector<Sample> SyntheticTask::all_eval_samples() const {
  std::vector<Sample> out;
  for (const auto& part : eval_) out.insert(out.end(), part.begin(), part.end());
  return out;
}

double SyntheticTask::train_step(DynamicModel& model, long step, std::size_t batch_size,
                                 Rng& rng) const {
  const auto batch = schedule_.batch(step, batch_size, rng, current_fraction_);
  return model.train_step(batch);
}

double SyntheticTask::accuracy(const DynamicModel& model, std::size_t domain,
                               const AblationMask* ablation) const {
  return lace::accuracy(model, eval_.at(domain), ablation);
}

// ---------------------------------------------------------------------------
// FeatureTask

FeatureTask::FeatureTask(std::vector<std::vector<std::vector<double>>> per_domain,
                         std::vector<long> phase_lengths, double current_fraction,
                         double holdout_fraction)
    : phases_(std::move(phase_lengths)), current_fraction_(current_fraction) {
  if (per_domain.empty()) throw ConfigError("feature task needs at least one domain");
  if (phases_.size() != per_domain.size()) {
    throw ConfigError("phase_lengths has " + std::to_string(phases_.size()) + " entries for " +
                      std::to_string(per_domain.size()) + " domains");
  }
  long start = 0;
  for (std::size_t d = 0; d < per_domain.size(); ++d) {
    auto& rows = per_domain[d];
    if (rows.size() < 2) {
      throw InsufficientData("domain " + std::to_string(d) + " needs at least 2 samples");
    }
    if (phases_[d] <= 0) throw ConfigError("phase lengths must be positive");
    if (width_ == 0) width_ = rows.front().size();
    auto held = static_cast<std::size_t>(holdout_fraction * static_cast<double>(rows.size()));
    held = std::clamp<std::size_t>(held, 1, rows.size() - 1);
    std::vector<FeatureSample> tr, ho;
    // Every k-th sample goes to the held-out split.
    const std::size_t stride = rows.size() / held;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != width_) throw ShapeError("inconsistent feature width across samples");
      FeatureSample fs{std::move(rows[i]), d};
      if (i % stride == stride - 1 && ho.size() < held) {
        ho.push_back(std::move(fs));
      } else {
        tr.push_back(std::move(fs));
      }
    }
    train_.push_back(std::move(tr));
    holdout_.push_back(std::move(ho));
    starts_.push_back(start);
    start += phases_[d];
  }
}

std::size_t FeatureTask::active_domain(long step) const {
  if (step < 0 || step >= total_steps()) {
    throw ScheduleExhausted("step " + std::to_string(step) + " outside schedule");
  }
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), step);
  return static_cast<std::size_t>(it - starts_.begin()) - 1;
}

double FeatureTask::train_step(DynamicModel& model, long step, std::size_t batch_size,
                               Rng& rng) const {
  const auto domains = batch_domains(active_domain(step), batch_size, current_fraction_, rng);
  std::vector<FeatureSample> batch;
  batch.reserve(batch_size);
  for (const std::size_t d : domains) batch.push_back(train_[d][rng.below(train_[d].size())]);
  return model.train_step(batch);
}

double FeatureTask::accuracy(const DynamicModel& model, std::size_t domain,
                             const AblationMask* ablation) const {
  const auto& held = holdout_.at(domain);
  std::size_t correct = 0;
  for (const auto& s : held) {
    const Vector logits = ablation ? model.forward_features_ablated(s.x, *ablation)
                                   : model.forward_features(s.x).logits;
    correct += argmax(logits) == s.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(held.size());
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

EvalPoint evaluate(const DynamicModel& model, const ContinualTask& task, long step) {
  EvalPoint p;
  p.step = step;
  p.per_domain.assign(task.num_domains(), std::nullopt);
  const std::size_t introduced = task.active_domain(step) + 1;
  double sum = 0.0;
  for (std::size_t d = 0; d < introduced; ++d) {
    const double acc = task.accuracy(model, d);
    p.per_domain[d] = acc;
    sum += acc;
  }
  p.overall = sum / static_cast<double>(introduced);
  return p;
}

}  // namespace

TrainedRun train(const TrainConfig& config, const ContinualTask& task) {
  config.validate();
  ModelShape shape;
  shape.vocab = task.vocab(config);
  shape.seq_len = shape.vocab > 0 ? config.seq_len : 0;
  shape.d_emb = task.input_width(config);
  shape.d_base = config.d_base;
  shape.d_max = config.d_max;
  shape.num_classes = task.num_domains();

  DynamicModel model(shape, config.lr, derive_seed(config.seed, kModelStream), config.init);
  if (config.mode == Mode::fixed_large) model.set_active(config.d_max);

  Detector detector(config.detector);
  Rng batch_rng(derive_seed(config.seed, kBatchStream));
  Rng expand_rng(derive_seed(config.seed, kExpandStream));

  RunReport report;
  report.mode = config.mode;
  report.d_base = config.d_base;
  report.d_max = config.d_max;
  report.introductions = task.introduction_steps();
  const long total = task.total_steps();
  report.trace.reserve(static_cast<std::size_t>(total));

  double d_sum = 0.0;
  for (long t = 0; t < total; ++t) {
    const double loss = task.train_step(model, t, config.batch_size, batch_rng);

    StepRecord rec;
    rec.step = t;
    rec.loss = loss;
    if (config.mode == Mode::dynamic) {
      const DetectorRecord d = detector.observe_record(loss);
      rec.baseline = d.baseline;
      rec.decision = d.decision;
      rec.cooldown_remaining = d.cooldown_remaining;
      if (d.decision == Decision::expand && model.d_active() < model.d_max()) {
        ExpansionEvent ev = model.expand(config.sigma, expand_rng);
        ev.step = t;
        ev.signal = d.trigger == TriggerPath::sustained ? ExpansionSignal::sustained
                                                        : ExpansionSignal::spike;
        report.events.push_back(ev);
      }
    }
    rec.d_active = model.d_active();
    d_sum += static_cast<double>(model.d_active());
    report.trace.push_back(rec);

    if ((t + 1) % static_cast<long>(config.eval_interval) == 0 || t + 1 == total) {
      report.evals.push_back(evaluate(model, task, t));
    }
  }

  report.final_accuracy = report.evals.empty() ? 0.0 : report.evals.back().overall;
  report.d_final = model.d_active();
  report.d_avg = total > 0 ? d_sum / static_cast<double>(total) : static_cast<double>(model.d_active());
  // Precision window: the phase length of the first domain.
  const PrecisionResult pr =
      boundary_precision(report.events, report.introductions, task.phase_length(0));
  report.boundary_precision = pr.precision;
  report.precision_vacuous = pr.vacuous;
  return TrainedRun{std::move(report), std::move(model)};
}

TrainedRun train(const TrainConfig& config) {
  config.validate();
  SyntheticTask task(DomainSchedule::sequential(config.num_domains, config.phase_length, config.seed),
                     config.eval_per_domain, config.seed, config.current_fraction);
  return train(config, task);
}

RunReport run(const TrainConfig& config) { return train(config).report; }

std::vector<double> RunReport::losses() const {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& r : trace) out.push_back(r.loss);
  return out;
}

PrecisionResult boundary_precision(std::span<const ExpansionEvent> events,
                                   std::span<const long> introductions, long window) {
  if (events.empty()) return {1.0, true};
  std::size_t hits = 0;
  for (const auto& ev : events) {
    const bool hit = std::any_of(introductions.begin(), introductions.end(), [&](long b) {
      return b > ev.step - window && b <= ev.step;
    });
    hits += hit ? 1 : 0;
  }
  return {static_cast<double>(hits) / static_cast<double>(events.size()), false};
}

PrecisionResult boundary_precision(std::span<const ExpansionEvent> events,
                                   const DomainSchedule& schedule) {
  std::vector<long> intro(schedule.num_domains());
  for (std::size_t d = 0; d < intro.size(); ++d) intro[d] = schedule.introduction_step(d);
  return boundary_precision(events, intro, static_cast<long>(schedule.phase_length()));
}

ForgettingCurves forgetting_curves(const RunReport& report) {
  ForgettingCurves fc;
  fc.num_domains = report.evals.empty() ? 0 : report.evals.front().per_domain.size();
  for (const auto& e : report.evals) {
    fc.steps.push_back(e.step);
    fc.accuracy.push_back(e.per_domain);
  }
  return fc;
}

std::optional<double> ForgettingCurves::peak(std::size_t domain) const {
  std::optional<double> best;
  for (const auto& row : accuracy) {
    if (domain < row.size() && row[domain] && (!best || *row[domain] > *best)) best = row[domain];
  }
  return best;
}

std::optional<double> ForgettingCurves::final_value(std::size_t domain) const {
  if (accuracy.empty() || domain >= accuracy.back().size()) return std::nullopt;
  return accuracy.back()[domain];
}

namespace {

template <typename AccuracyFn>
std::vector<AblationRow> sweep(const DynamicModel& model, AccuracyFn&& acc) {
  if (model.d_active() <= model.d_base()) {
    throw InvalidAblation("model has no adapter dimensions (d_active = d_base = " +
                          std::to_string(model.d_base()) + ")");
  }
  std::vector<AblationRow> rows;
  const double base = acc(nullptr);
  rows.push_back({"baseline", std::nullopt, base, 0.0});
  AblationMask all;
  for (std::size_t i = model.d_base(); i < model.d_active(); ++i) {
    AblationMask one;
    one.disabled_dims.insert(i);
    all.disabled_dims.insert(i);
    const double a = acc(&one);
    rows.push_back({"dim " + std::to_string(i), i, a, base - a});
  }
  const double a = acc(&all);
  rows.push_back({"all adapter dims", std::nullopt, a, base - a});
  return rows;
}

}  // namespace

std::vector<AblationRow> ablation_sweep(const DynamicModel& model, const ContinualTask& task) {
  return sweep(model, [&](const AblationMask* m) {
    double sum = 0.0;
    for (std::size_t d = 0; d < task.num_domains(); ++d) sum += task.accuracy(model, d, m);
    return sum / static_cast<double>(task.num_domains());
  });
}

std::vector<AblationRow> ablation_sweep(const DynamicModel& model, std::span<const Sample> eval) {
  return sweep(model, [&](const AblationMask* m) { return accuracy(model, eval, m); });
}

std::vector<ConfirmationRow> compare_confirmation(const TrainConfig& config,
                                                  std::span<const std::size_t> confirm_values) {
  if (confirm_values.size() < 2) throw ConfigError("compare_confirmation needs at least two K values");
  std::vector<ConfirmationRow> rows(confirm_values.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    TrainConfig c = config;
    c.detector.confirm = confirm_values[i];
    rows[i].confirm = confirm_values[i];
    rows[i].report = run(c);
  });
  const std::vector<double> shared = rows.front().report.losses();
  for (auto& row : rows) {
    DetectorConfig dc = config.detector;
    dc.confirm = row.confirm;
    row.replay_expansions = count_expansions(replay(shared, dc));
  }
  return rows;
}

}  // namespace lace
