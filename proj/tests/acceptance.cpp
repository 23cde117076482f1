// Runs every gated acceptance criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is non-zero when any fails.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "detector_props.hpp"
#include "lace/clustering.hpp"
#include "lace/config.hpp"
#include "lace/experiments.hpp"
#include "model_checks.hpp"
#include "oracles.hpp"

using namespace lace;

namespace {

struct Criterion {
  std::string name;
  std::vector<Check> checks;
  double seconds = 0.0;
};

template <typename Fn>
Criterion timed(std::string name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  Criterion c{std::move(name), fn(), 0.0};
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c;
}

Check runtime_check(const std::string& what, double seconds, double limit) {
  return {what + " runtime < " + std::to_string(static_cast<int>(limit / 60)) + " min", seconds < limit,
          std::to_string(seconds).substr(0, 6) + " s"};
}

void report(const Criterion& c, int& failures) {
  const bool ok = all_pass(c.checks);
  failures += ok ? 0 : 1;
  std::printf("%s  %s  (%.1f s)\n", ok ? "PASS" : "FAIL", c.name.c_str(), c.seconds);
  for (const auto& check : c.checks) {
    std::printf("      %s %s: %s\n", check.pass ? "ok  " : "FAIL", check.name.c_str(), check.detail.c_str());
  }
  std::fflush(stdout);
}

std::vector<Check> detector_suite() {
  constexpr int kStreams = 1000;
  Rng rng(0xDE7EC7);
  int scale = 0, spacing = 0, warmup = 0, determinism = 0, dominance = 0;
  std::size_t expansions = 0;
  for (int i = 0; i < kStreams; ++i) {
    auto config = props::random_config(rng);
    const auto losses = props::random_stream(rng, 400 + rng.below(800));
    const auto r = props::check_stream(losses, config, rng.uniform(1e-3, 1e3));
    scale += r.scale_invariant;
    spacing += r.cooldown_spacing;
    warmup += r.quiet_before_warmup;
    determinism += r.deterministic;
    expansions += r.expansions;
    // Streak gating can only delay or suppress.
    DetectorConfig k1 = config, k3 = config;
    k1.confirm = 1;
    k3.confirm = 3;
    dominance += count_expansions(replay(losses, k3)) <= count_expansions(replay(losses, k1));
  }
  const auto frac = [&](int n) { return std::to_string(n) + "/" + std::to_string(kStreams); };
  return {
      {"scale invariance of decisions (c > 0)", scale == kStreams, frac(scale)},
      {"expansions at least C apart", spacing == kStreams, frac(spacing)},
      {"no decisions before warmup", warmup == kStreams, frac(warmup)},
      {"replay determinism", determinism == kStreams, frac(determinism)},
      {"K=3 expansions <= K=1 expansions", dominance == kStreams, frac(dominance)},
      {"streams exercise expansions", expansions >= kStreams, std::to_string(expansions) + " expansions"},
  };
}

std::vector<Check> numeric_suite() {
  constexpr int kInstances = 150;
  Rng rng(0xF1D1FF);
  double worst = 0.0;
  int fd_pass = 0, zero_sigma = 0, masked = 0, masked_cases = 0;
  for (int i = 0; i < kInstances; ++i) {
    ModelShape s;
    const bool features = i % 4 == 3;
    s.vocab = features ? 0 : 2 + rng.below(7);
    s.seq_len = features ? 0 : 1 + rng.below(4);
    s.d_emb = 1 + rng.below(8);
    s.d_max = 1 + rng.below(8);
    s.d_base = 1 + rng.below(s.d_max);
    s.num_classes = 2 + rng.below(7);
    DynamicModel m(s, 1e-3, rng.next_u64());
    const std::size_t n = 1 + rng.below(4);

    Gradients g;
    checks::FdResult err;
    std::vector<Sample> tokens;
    std::vector<FeatureSample> vectors;
    if (features) {
      for (std::size_t k = 0; k < n; ++k) {
        FeatureSample f{Vector(s.d_emb), rng.below(s.num_classes)};
        for (double& v : f.x) v = rng.normal();
        vectors.push_back(std::move(f));
      }
      g = m.compute_gradients(vectors);
      const auto loss = [&] { return m.loss(vectors); };
      err.proj = oracle::rel_error(g.proj.data(), oracle::fd_gradient(m.proj().data(), loss));
      err.head = oracle::rel_error(g.head.data(), oracle::fd_gradient(m.head().data(), loss));
    } else {
      tokens = checks::random_batch(s, n, rng);
      g = m.compute_gradients(tokens);
      err = checks::model_fd_error(m, tokens);
    }
    worst = std::max(worst, err.worst());
    fd_pass += err.worst() < 1e-4;
    if (m.d_active() < m.d_max()) {
      ++masked_cases;
      masked += checks::masked_gradients_zero(m, g);
    }

    // Expansion with sigma = 0 must not move any logit by a single bit.
    if (m.d_active() == m.d_max()) m.set_active(m.d_max() - 1, true);
    std::vector<Vector> before;
    for (std::size_t k = 0; k < n; ++k) {
      before.push_back(features ? m.forward_features(vectors[k].x).logits : m.forward(tokens[k].tokens).logits);
    }
    Rng expand_rng(1);
    m.expand(0.0, expand_rng);
    bool same = true;
    for (std::size_t k = 0; k < n; ++k) {
      const Vector after = features ? m.forward_features(vectors[k].x).logits : m.forward(tokens[k].tokens).logits;
      same = same && after == before[k];
    }
    zero_sigma += same;
  }
  const auto frac = [](int a, int b) { return std::to_string(a) + "/" + std::to_string(b); };
  return {
      {"backward passes match central differences (rel < 1e-4)", fd_pass == kInstances,
       frac(fd_pass, kInstances) + ", worst " + std::to_string(worst)},
      {"sigma = 0 expansion leaves logits bitwise unchanged", zero_sigma == kInstances, frac(zero_sigma, kInstances)},
      {"masked rows receive exactly zero gradient", masked == masked_cases && masked_cases > 50,
       frac(masked, masked_cases)},
  };
}

ActivationSet blob_layer(std::uint64_t seed, std::uint32_t layer) {
  const auto blobs = oracle::blobs(3, 200, 64, seed);
  ActivationSet s;
  s.values = Matrix(600, 64);
  s.layer = layer;
  std::size_t row = 0;
  for (std::size_t d = 0; d < 3; ++d) {
    for (const auto& x : blobs[d]) {
      for (std::size_t j = 0; j < 64; ++j) s.values(row, j) = x[j];
      s.labels.push_back(static_cast<std::uint8_t>(d));
      ++row;
    }
  }
  return s;
}

std::vector<Check> clustering_suite() {
  constexpr int kPurity = 1000;
  Rng rng(0xC1A55);
  int purity_pass = 0;
  for (int i = 0; i < kPurity; ++i) {
    const std::size_t n = 1 + rng.below(120);
    const std::size_t k = 1 + rng.below(10);
    const std::size_t l = 1 + rng.below(8);
    std::vector<std::size_t> assign(n), labels(n);
    for (std::size_t j = 0; j < n; ++j) {
      assign[j] = rng.below(k);
      labels[j] = rng.below(l);
    }
    purity_pass += purity(assign, labels).purity == oracle::counting_purity(assign, labels);
  }

  int pca_pass = 0, pca_cases = 0;
  double pca_worst = 0.0;
  for (std::size_t d = 2; d <= 64; d += 2) {
    std::vector<std::vector<double>> rows(d + 10 + rng.below(100), std::vector<double>(d));
    for (auto& r : rows) {
      for (std::size_t j = 0; j < d; ++j) r[j] = rng.normal() * (0.5 + rng.uniform());
    }
    ActivationSet set;
    set.values = Matrix(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) set.values(i, j) = rows[i][j];
    }
    const double top = fit_pca(set, std::min<std::size_t>(d, 32)).eigenvalues[0];
    const double ref = oracle::jacobi_eigenvalues(oracle::covariance(rows))[0];
    const double rel = std::abs(top - ref) / std::abs(ref);
    pca_worst = std::max(pca_worst, rel);
    pca_pass += rel < 1e-8;
    ++pca_cases;
  }

  std::vector<ActivationSet> layers;
  for (std::uint32_t l = 0; l < 12; ++l) layers.push_back(blob_layer(0xB10B + l, l));
  const auto sweep = layer_sweep(layers, 32, 0.15);
  double min_purity = 1.0;
  for (const auto& lp : sweep) min_purity = std::min(min_purity, lp.report.purity);

  return {
      {"purity equals counting oracle", purity_pass == kPurity,
       std::to_string(purity_pass) + "/" + std::to_string(kPurity)},
      {"PCA top eigenvalue vs Jacobi (rel < 1e-8, d <= 64)", pca_pass == pca_cases,
       std::to_string(pca_pass) + "/" + std::to_string(pca_cases) + ", worst " + std::to_string(pca_worst)},
      {"3-blob layer sweep purity >= 0.99", min_purity >= 0.99,
       "minimum over 12 layers " + std::to_string(min_purity)},
  };
}

}  // namespace

int main() {
  int failures = 0;

  const ExperimentConfig e1 = preset(Experiment::exp1);
  const TrainConfig& tc = e1.train;
  const SyntheticTask task(DomainSchedule::sequential(tc.num_domains, tc.phase_length, tc.seed),
                           tc.eval_per_domain, tc.seed, tc.current_fraction);
  ModeRuns runs;
  Criterion exp1 = timed("Exp-1 reproduction (10 domains, d 64 -> 84)", [&] {
    runs = run_modes(tc, task);
    return exp1_checks(runs);
  });
  // Three modes share the wall clock; the target is per configuration.
  exp1.checks.push_back(runtime_check("exp1", exp1.seconds, 300.0));
  report(exp1, failures);

  report(timed("Exp-2 no forgetting (final >= peak - 0.05)", [&] { return exp2_checks(runs); }), failures);

  report(timed("Exp-3 adapter ablation", [&] {
           return exp3_checks(ablation_sweep(runs.at(Mode::dynamic).model, task));
         }),
         failures);

  report(timed("Exp-4 confirmation K=1 vs K=3", [&] {
           const ExperimentConfig e4 = preset(Experiment::exp4);
           TrainConfig c = e4.train;
           c.mode = Mode::dynamic;
           return exp4_checks(compare_confirmation(c, e4.confirm_values));
         }),
         failures);

  Criterion exp5 = timed("Exp-5 capacity wall (50 domains, d 8 -> 48)", [&] {
    return exp5_checks(run_modes(preset(Experiment::exp5).train));
  });
  exp5.checks.push_back(runtime_check("exp5", exp5.seconds, 1200.0));
  report(exp5, failures);

  report(timed("Detector property suite (1000 random streams)", detector_suite), failures);
  report(timed("Numeric suite (150 random instances)", numeric_suite), failures);
  report(timed("Clustering suite", clustering_suite), failures);

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
