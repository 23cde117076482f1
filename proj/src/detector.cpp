#include "lace/detector.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lace/errors.hpp"

namespace lace {

void DetectorConfig::validate() const {
  if (!(spike_ratio > 1.0)) throw ConfigError("spike ratio tau must be > 1");
  if (window == 0) throw ConfigError("window W must be >= 1");
  if (confirm == 0) throw ConfigError("confirmation K must be >= 1");
  if (sustained_threshold.has_value() != sustained_steps.has_value()) {
    throw ConfigError("sustained_threshold and sustained_steps must be set together");
  }
  if (sustained_steps && *sustained_steps == 0) throw ConfigError("sustained_steps must be >= 1");
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::none:
      return "none";
    case Decision::spike:
      return "spike";
    case Decision::expand:
      return "expand";
  }
  return "none";
}

double baseline(const DetectorState& state) {
  if (state.loss_history.empty()) throw NoBaseline("detector history is empty");
  const double sum = std::accumulate(state.loss_history.begin(), state.loss_history.end(), 0.0);
  return sum / static_cast<double>(state.loss_history.size());
}

namespace {

bool window_armed(const DetectorState& state, const DetectorConfig& config) {
  return state.step >= static_cast<long>(config.warmup) &&
         state.loss_history.size() >= config.window;
}

}  // namespace

Decision observe_spike(DetectorState& state, const DetectorConfig& config, double loss) {
  const bool armed = window_armed(state, config) && state.cooldown_remaining == 0;
  if (!armed || !(loss > config.spike_ratio * baseline(state))) {
    state.spike_streak = 0;
    return Decision::none;
  }
  ++state.spike_streak;
  if (state.spike_streak >= config.confirm) {
    state.spike_streak = 0;
    return Decision::expand;
  }
  return Decision::spike;
}

Decision observe_sustained(DetectorState& state, const DetectorConfig& config, double /*loss*/) {
  if (!config.sustained_enabled()) return Decision::none;
  if (!window_armed(state, config) || !(baseline(state) > *config.sustained_threshold)) {
    state.sustained_count = 0;
    return Decision::none;
  }
  ++state.sustained_count;
  if (state.sustained_count >= *config.sustained_steps && state.cooldown_remaining == 0) {
    state.sustained_count = 0;
    return Decision::expand;
  }
  return Decision::none;
}

Detector::Detector(DetectorConfig config) : config_(std::move(config)) { config_.validate(); }

double Detector::baseline() const { return lace::baseline(state_); }

Decision Detector::observe(double loss) { return observe_record(loss).decision; }

DetectorRecord Detector::observe_record(double loss) {
  if (!std::isfinite(loss) || loss < 0.0) {
    throw InvalidLoss("detector rejects loss " + std::to_string(loss));
  }
  DetectorRecord rec;
  rec.step = state_.step;
  rec.loss = loss;
  if (!state_.loss_history.empty()) rec.baseline = lace::baseline(state_);

  rec.decision = observe_spike(state_, config_, loss);
  if (rec.decision == Decision::expand) rec.trigger = TriggerPath::spike;
  if (rec.decision == Decision::expand) state_.cooldown_remaining = config_.cooldown;

  if (observe_sustained(state_, config_, loss) == Decision::expand) {
    rec.decision = Decision::expand;
    rec.trigger = TriggerPath::sustained;
    state_.cooldown_remaining = config_.cooldown;
    state_.spike_streak = 0;
  }

  state_.loss_history.push_back(loss);
  while (state_.loss_history.size() > config_.window) state_.loss_history.pop_front();
  if (state_.cooldown_remaining > 0) --state_.cooldown_remaining;
  ++state_.step;
  rec.cooldown_remaining = state_.cooldown_remaining;
  return rec;
}

std::vector<DetectorRecord> replay(std::span<const double> losses, const DetectorConfig& config) {
  Detector det(config);
  std::vector<DetectorRecord> out;
  out.reserve(losses.size());
  for (const double l : losses) out.push_back(det.observe_record(l));
  return out;
}

std::size_t count_expansions(std::span<const DetectorRecord> trace) {
  std::size_t n = 0;
  for (const auto& r : trace) n += r.decision == Decision::expand ? 1 : 0;
  return n;
}

}  // namespace lace
