#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lace {

struct DetectorConfig {
  std::size_t window = 50;       // W
  double spike_ratio = 2.5;      // tau, must exceed 1
  std::size_t confirm = 1;       // K
  std::size_t cooldown = 60;     // C
  std::size_t warmup = 100;
  std::optional<double> sustained_threshold;    // theta; secondary signal off when unset
  std::optional<std::size_t> sustained_steps;   // S

  // Throws ConfigError on tau <= 1, W == 0, K == 0, or a half-configured
  // sustained signal.
  void validate() const;
  bool sustained_enabled() const { return sustained_threshold && sustained_steps; }
};

enum class Decision { none, spike, expand };

std::string_view to_string(Decision d);

// Which path produced an `expand` decision.
enum class TriggerPath { none, spike, sustained };

struct DetectorState {
  std::deque<double> loss_history;  // last <= W losses, oldest first
  std::size_t spike_streak = 0;
  std::size_t cooldown_remaining = 0;
  std::size_t sustained_count = 0;
  long step = 0;
};

// One row of a detector trace.
struct DetectorRecord {
  long step = 0;
  double loss = 0.0;
  std::optional<double> baseline;  // unset while the history is empty
  Decision decision = Decision::none;
  TriggerPath trigger = TriggerPath::none;
  std::size_t cooldown_remaining = 0;  // after the step

  friend bool operator==(const DetectorRecord&, const DetectorRecord&) = default;
};

// Loss-stream novelty detector.
//
// baseline = mean of the last min(W, available) losses, excluding the current
// one. A step is a spike when the detector is armed (step >= warmup, no
// cooldown, a full window) and loss > tau * baseline. K consecutive spikes
// yield `expand`, after which the detector is disarmed for C steps.
//
// The optional sustained signal counts consecutive armed-window steps whose
// baseline exceeds theta and yields `expand` after S of them, sharing the
// cooldown with the spike path.
class Detector {
 public:
  explicit Detector(DetectorConfig config = {});

  const DetectorConfig& config() const { return config_; }
  const DetectorState& state() const { return state_; }

  // Throws NoBaseline when the history is empty.
  double baseline() const;

  // Evaluates the spike path and, when configured, the sustained path, then
  // appends `loss` to the window and advances the step. Non-finite or negative
  // losses throw InvalidLoss and leave the state untouched.
  Decision observe(double loss);

  // Like observe() but reports the evaluation in full.
  DetectorRecord observe_record(double loss);

 private:
  DetectorConfig config_;
  DetectorState state_;
};

// Sustained-path evaluation in isolation. Updates state.sustained_count and
// returns `expand` once it reaches S while the cooldown is clear. Does not
// append the loss or advance the step; observe() drives both paths.
Decision observe_sustained(DetectorState& state, const DetectorConfig& config, double loss);

// Spike-path evaluation in isolation, same contract as observe_sustained().
Decision observe_spike(DetectorState& state, const DetectorConfig& config, double loss);

// Mean of the history; throws NoBaseline when empty.
double baseline(const DetectorState& state);

// Feeds a recorded loss stream through a fresh detector.
std::vector<DetectorRecord> replay(std::span<const double> losses, const DetectorConfig& config);

std::size_t count_expansions(std::span<const DetectorRecord> trace);

}  // namespace lace
