#pragma once

#include <string>
#include <vector>

#include "lace/detector.hpp"
#include "lace/rng.hpp"

namespace props {

// Noisy piecewise-constant loss stream with occasional upward jumps that
// decay back, roughly the shape of a continual-learning loss curve.
inline std::vector<double> random_stream(lace::Rng& rng, std::size_t length) {
  std::vector<double> out(length);
  double level = rng.uniform(0.2, 3.0);
  double excess = 0.0;
  const double noise = rng.uniform(0.0, 0.3);
  const double jump_rate = rng.uniform(0.002, 0.03);
  for (auto& l : out) {
    if (rng.bernoulli(jump_rate)) excess = level * rng.uniform(0.5, 6.0);
    excess *= rng.uniform(0.85, 0.99);
    if (rng.bernoulli(0.01)) level = rng.uniform(0.2, 3.0);
    l = std::max(0.0, (level + excess) * (1.0 + noise * rng.normal()));
  }
  return out;
}

inline lace::DetectorConfig random_config(lace::Rng& rng) {
  lace::DetectorConfig c;
  c.window = 1 + rng.below(80);
  c.spike_ratio = rng.uniform(1.1, 4.0);
  c.confirm = 1 + rng.below(4);
  c.cooldown = rng.below(120);
  c.warmup = rng.below(200);
  return c;
}

struct PropertyResult {
  bool scale_invariant = true;
  bool cooldown_spacing = true;
  bool quiet_before_warmup = true;
  bool deterministic = true;
  std::size_t expansions = 0;
};

inline bool same_decisions(const std::vector<lace::DetectorRecord>& a, const std::vector<lace::DetectorRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].decision != b[i].decision) return false;
  }
  return true;
}

// Checks every detector property on one stream. `scale` multiplies the
// stream for the invariance check.
inline PropertyResult check_stream(const std::vector<double>& losses, const lace::DetectorConfig& config,
                                   double scale) {
  PropertyResult r;
  const auto trace = lace::replay(losses, config);
  std::vector<double> scaled(losses);
  for (auto& l : scaled) l *= scale;
  r.scale_invariant = same_decisions(trace, lace::replay(scaled, config));
  r.deterministic = lace::replay(losses, config) == trace;
  long last = -1;
  for (const auto& rec : trace) {
    if (rec.step < static_cast<long>(config.warmup) && rec.decision != lace::Decision::none) {
      r.quiet_before_warmup = false;
    }
    if (rec.decision != lace::Decision::expand) continue;
    ++r.expansions;
    if (last >= 0 && rec.step - last < static_cast<long>(config.cooldown)) r.cooldown_spacing = false;
    last = rec.step;
  }
  return r;
}

}  // namespace props
