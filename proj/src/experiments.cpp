#include "lace/experiments.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <optional>
#include <utility>

#include "lace/errors.hpp"
#include "lace/parallel.hpp"

namespace lace {

namespace {

std::string num(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 4);
  return std::string(buf.data(), res.ptr);
}

Check band(std::string name, bool pass, std::string detail) {
  return {std::move(name), pass, std::move(detail)};
}

template <typename Runner>
ModeRuns run_each_mode(const TrainConfig& config, Runner&& runner) {
  std::vector<std::optional<TrainedRun>> slots(std::size(kModes));
  parallel_for(slots.size(), [&](std::size_t i) {
    TrainConfig c = config;
    c.mode = kModes[i];
    slots[i].emplace(runner(c));
  });
  ModeRuns out;
  for (auto& s : slots) out.runs.push_back(std::move(*s));
  return out;
}

std::string mode_label(Mode m) {
  switch (m) {
    case Mode::dynamic:
      return "LACE";
    case Mode::fixed_large:
      return "Fixed-Large";
    case Mode::fixed_small:
      return "Fixed-Small";
  }
  return "LACE";
}

void write_run(const RunReport& report, const std::filesystem::path& dir, std::string_view title,
               std::vector<std::filesystem::path>& written) {
  std::filesystem::create_directories(dir);
  const auto put = [&](const std::string& name, const CsvTable& t) {
    t.write(dir / name);
    written.push_back(dir / name);
  };
  put("report.csv", report_table(report));
  put("detector.csv", detector_table(report));
  put("perdomain.csv", perdomain_table(report));
  put("events.csv", events_table(report.events));
  write_text(dir / "loss_capacity.svg", svg_loss_capacity(report, title));
  write_text(dir / "accuracy_strip.svg", svg_accuracy_strip(report, title));
  written.push_back(dir / "loss_capacity.svg");
  written.push_back(dir / "accuracy_strip.svg");
}

void write_modes(const ModeRuns& runs, const std::filesystem::path& out, std::string_view title,
                 std::vector<std::filesystem::path>& written) {
  CsvTable summary(summary_header());
  std::vector<std::pair<std::string, const RunReport*>> curves;
  for (const Mode m : kModes) {
    const RunReport& r = runs.report(m);
    summary.add(summary_row(mode_label(m), r));
    write_run(r, out / std::string(to_string(m)), std::string(title) + " " + mode_label(m), written);
    curves.emplace_back(mode_label(m), &r);
  }
  summary.write(out / "summary.csv");
  written.push_back(out / "summary.csv");
  write_text(out / "accuracy.svg", svg_accuracy_curves(curves, title));
  written.push_back(out / "accuracy.svg");
  const auto model_path = out / std::string(to_string(Mode::dynamic)) / "lace_model.bin";
  runs.at(Mode::dynamic).model.save(model_path);
  written.push_back(model_path);
}

CsvTable forgetting_table(const ModeRuns& runs) {
  CsvTable t({"mode", "domain", "peak", "final", "drop"});
  for (const Mode m : {Mode::dynamic, Mode::fixed_large}) {
    const ForgettingCurves curves = forgetting_curves(runs.report(m));
    for (std::size_t d = 0; d < curves.num_domains; ++d) {
      const auto peak = curves.peak(d);
      const auto last = curves.final_value(d);
      if (!peak || !last) continue;
      t.add({std::string(to_string(m)), std::to_string(d), format_number(*peak), format_number(*last),
             format_number(*peak - *last)});
    }
  }
  return t;
}

}  // namespace

bool all_pass(std::span<const Check> checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

ModeRuns run_modes(const TrainConfig& config) {
  return run_each_mode(config, [](const TrainConfig& c) { return train(c); });
}

ModeRuns run_modes(const TrainConfig& config, const ContinualTask& task) {
  return run_each_mode(config, [&](const TrainConfig& c) { return train(c, task); });
}

std::vector<Check> exp1_checks(const ModeRuns& runs) {
  const RunReport& lace = runs.report(Mode::dynamic);
  const double large = runs.report(Mode::fixed_large).final_accuracy;
  const double small = runs.report(Mode::fixed_small).final_accuracy;
  const std::size_t n = lace.events.size();
  return {
      band("exp1 LACE accuracy >= 0.98", lace.final_accuracy >= 0.98, num(lace.final_accuracy)),
      band("exp1 Fixed-Large accuracy >= 0.98", large >= 0.98, num(large)),
      band("exp1 Fixed-Small accuracy >= 0.97", small >= 0.97, num(small)),
      band("exp1 boundary precision = 1.0", lace.boundary_precision == 1.0,
           num(lace.boundary_precision) + (lace.precision_vacuous ? " (no events)" : "")),
      band("exp1 expansions in [5, 20]", n >= 5 && n <= 20, std::to_string(n)),
      band("exp1 d_avg < d_max", lace.d_avg < static_cast<double>(lace.d_max),
           num(lace.d_avg) + " < " + std::to_string(lace.d_max)),
  };
}

std::vector<Check> exp2_checks(const ModeRuns& runs) {
  std::vector<Check> out;
  for (const Mode m : {Mode::dynamic, Mode::fixed_large}) {
    const ForgettingCurves curves = forgetting_curves(runs.report(m));
    bool ok = true;
    double worst = 0.0;
    std::size_t worst_domain = 0;
    for (std::size_t d = 0; d < curves.num_domains; ++d) {
      const auto peak = curves.peak(d);
      const auto last = curves.final_value(d);
      if (!peak || !last) {
        ok = false;
        continue;
      }
      const double drop = *peak - *last;
      if (drop > worst) {
        worst = drop;
        worst_domain = d;
      }
      ok = ok && *last >= *peak - 0.05;
    }
    out.push_back(band("exp2 " + mode_label(m) + " final >= peak - 0.05 for every domain", ok,
                       "largest drop " + num(worst) + " (domain " + std::to_string(worst_domain) + ")"));
  }
  return out;
}

std::vector<Check> exp3_checks(std::span<const AblationRow> rows) {
  const auto baseline = std::find_if(rows.begin(), rows.end(),
                                     [](const AblationRow& r) { return r.condition == "baseline"; });
  const auto all = std::find_if(rows.begin(), rows.end(),
                                [](const AblationRow& r) { return r.condition == "all adapter dims"; });
  double max_single = 0.0;
  for (const auto& r : rows) {
    if (r.dim) max_single = std::max(max_single, r.drop);
  }
  const double collective = all == rows.end() ? 0.0 : all->drop;
  return {
      band("exp3 baseline drop = 0", baseline != rows.end() && baseline->drop == 0.0,
           baseline == rows.end() ? "missing" : num(baseline->drop)),
      band("exp3 collective drop >= 0.01", all != rows.end() && collective >= 0.01, num(collective)),
      band("exp3 collective drop >= max individual drop",
           all != rows.end() && collective >= max_single,
           num(collective) + " vs " + num(max_single)),
  };
}

std::vector<Check> exp4_checks(std::span<const ConfirmationRow> rows) {
  std::vector<Check> out;
  for (const auto& row : rows) {
    const std::string k = "K=" + std::to_string(row.confirm);
    out.push_back(band("exp4 " + k + " boundary precision = 1.0", row.report.boundary_precision == 1.0,
                       num(row.report.boundary_precision)));
    out.push_back(band("exp4 " + k + " accuracy >= 0.98", row.report.final_accuracy >= 0.98,
                       num(row.report.final_accuracy)));
  }
  const auto find = [&](std::size_t k) {
    return std::find_if(rows.begin(), rows.end(), [k](const ConfirmationRow& r) { return r.confirm == k; });
  };
  const auto k1 = find(1);
  const auto k3 = find(3);
  if (k1 != rows.end() && k3 != rows.end()) {
    out.push_back(band("exp4 replayed expansions K=3 <= K=1",
                       k3->replay_expansions <= k1->replay_expansions,
                       std::to_string(k3->replay_expansions) + " vs " +
                           std::to_string(k1->replay_expansions)));
  }
  return out;
}

std::vector<Check> exp5_checks(const ModeRuns& runs) {
  const RunReport& lace = runs.report(Mode::dynamic);
  const double acc = lace.final_accuracy;
  const double large = runs.report(Mode::fixed_large).final_accuracy;
  const double small = runs.report(Mode::fixed_small).final_accuracy;
  return {
      band("exp5 Fixed-Small + 0.10 <= LACE", small + 0.10 <= acc, num(small) + " + 0.10 vs " + num(acc)),
      band("exp5 LACE <= Fixed-Large + 0.02", acc <= large + 0.02, num(acc) + " vs " + num(large) + " + 0.02"),
      band("exp5 Fixed-Small <= 0.7 x Fixed-Large", small <= 0.7 * large,
           num(small) + " vs " + num(0.7 * large)),
      band("exp5 LACE d_final in (d_base, d_max]", lace.d_final > lace.d_base && lace.d_final <= lace.d_max,
           std::to_string(lace.d_final)),
  };
}

std::vector<Check> real_embed_checks(const ModeRuns& runs) {
  const RunReport& lace = runs.report(Mode::dynamic);
  const double large = runs.report(Mode::fixed_large).final_accuracy;
  const double small = runs.report(Mode::fixed_small).final_accuracy;
  std::size_t covered = 0;
  for (std::size_t i = 1; i < lace.introductions.size(); ++i) {
    const long start = lace.introductions[i];
    const long end = i + 1 < lace.introductions.size() ? lace.introductions[i + 1]
                                                        : std::numeric_limits<long>::max();
    const bool hit = std::any_of(lace.events.begin(), lace.events.end(), [&](const ExpansionEvent& e) {
      return e.step >= start && e.step < end;
    });
    covered += hit ? 1 : 0;
  }
  const std::size_t boundaries = lace.introductions.empty() ? 0 : lace.introductions.size() - 1;
  return {
      band("real-embed expansion after every boundary", covered == boundaries,
           std::to_string(covered) + " of " + std::to_string(boundaries)),
      band("real-embed boundary precision = 1.0", lace.boundary_precision == 1.0,
           num(lace.boundary_precision)),
      band("real-embed Fixed-Small <= LACE <= Fixed-Large",
           small <= lace.final_accuracy && lace.final_accuracy <= large,
           num(small) + " / " + num(lace.final_accuracy) + " / " + num(large)),
  };
}

std::unique_ptr<FeatureTask> load_feature_task(std::span<const std::string> files,
                                               std::span<const long> phases, double holdout_fraction,
                                               double current_fraction) {
  if (files.empty()) throw ConfigError("real-embed needs at least one input file");
  if (phases.size() > files.size()) throw ConfigError("more phases than input files");
  std::vector<std::vector<std::vector<double>>> per_domain;
  std::vector<long> lengths;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const ActivationSet set = read_lact(files[i]);
    std::vector<std::vector<double>> rows;
    rows.reserve(set.n());
    for (std::size_t r = 0; r < set.n(); ++r) {
      const auto row = set.values.row(r);
      rows.emplace_back(row.begin(), row.end());
    }
    per_domain.push_back(std::move(rows));
    lengths.push_back(i < phases.size() ? phases[i] : 300);
  }
  return std::make_unique<FeatureTask>(std::move(per_domain), std::move(lengths), current_fraction,
                                       holdout_fraction);
}

CsvTable checks_table(std::span<const Check> checks) {
  CsvTable t({"check", "pass", "detail"});
  for (const auto& c : checks) t.add({c.name, c.pass ? "1" : "0", c.detail});
  return t;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  if (!std::filesystem::is_directory(out_dir)) {
    throw ConfigError("output directory " + out_dir.string() + " does not exist");
  }
  ExperimentResult result;
  auto& written = result.written;
  write_text(out_dir / "config.txt", to_text(config));
  written.push_back(out_dir / "config.txt");
  const TrainConfig& tc = config.train;
  const std::string title(to_string(config.experiment));

  switch (config.experiment) {
    case Experiment::exp1:
    case Experiment::exp2:
    case Experiment::exp5: {
      const ModeRuns runs = run_modes(tc);
      write_modes(runs, out_dir, title, written);
      if (config.experiment == Experiment::exp1) result.checks = exp1_checks(runs);
      if (config.experiment == Experiment::exp5) result.checks = exp5_checks(runs);
      if (config.experiment == Experiment::exp2) {
        result.checks = exp2_checks(runs);
        forgetting_table(runs).write(out_dir / "forgetting.csv");
        written.push_back(out_dir / "forgetting.csv");
      }
      break;
    }
    case Experiment::exp3: {
      TrainConfig c = tc;
      c.mode = Mode::dynamic;
      const SyntheticTask task(DomainSchedule::sequential(c.num_domains, c.phase_length, c.seed),
                               c.eval_per_domain, c.seed, c.current_fraction);
      const TrainedRun run = train(c, task);
      write_run(run.report, out_dir / "dynamic", title, written);
      run.model.save(out_dir / "dynamic" / "lace_model.bin");
      written.push_back(out_dir / "dynamic" / "lace_model.bin");
      CsvTable summary(summary_header());
      summary.add(summary_row("LACE", run.report));
      summary.write(out_dir / "summary.csv");
      written.push_back(out_dir / "summary.csv");
      const auto rows = ablation_sweep(run.model, task);
      ablation_table(rows).write(out_dir / "ablation.csv");
      write_text(out_dir / "ablation.svg", svg_ablation_bars(rows, "adapter ablation"));
      written.push_back(out_dir / "ablation.csv");
      written.push_back(out_dir / "ablation.svg");
      result.checks = exp3_checks(rows);
      break;
    }
    case Experiment::exp4: {
      TrainConfig c = tc;
      c.mode = Mode::dynamic;
      const auto rows = compare_confirmation(c, config.confirm_values);
      std::vector<std::string> header = summary_header();
      header.push_back("confirm");
      header.push_back("replay_expansions");
      CsvTable summary(header);
      std::vector<std::pair<std::string, const RunReport*>> curves;
      for (const auto& row : rows) {
        const std::string label = "K=" + std::to_string(row.confirm);
        auto cells = summary_row(label, row.report);
        cells.push_back(std::to_string(row.confirm));
        cells.push_back(std::to_string(row.replay_expansions));
        summary.add(std::move(cells));
        write_run(row.report, out_dir / ("k" + std::to_string(row.confirm)), title + " " + label, written);
        curves.emplace_back(label, &row.report);
      }
      summary.write(out_dir / "summary.csv");
      write_text(out_dir / "accuracy.svg", svg_accuracy_curves(curves, title));
      written.push_back(out_dir / "summary.csv");
      written.push_back(out_dir / "accuracy.svg");
      result.checks = exp4_checks(rows);
      break;
    }
    case Experiment::cluster_sweep: {
      if (config.inputs.empty()) throw ConfigError("cluster-sweep needs LACT inputs");
      std::vector<ActivationSet> layers;
      for (const auto& f : config.inputs) layers.push_back(read_lact(f));
      const auto sweep = layer_sweep(layers, config.d_pca, config.delta);
      layer_table(sweep).write(out_dir / "layers.csv");
      write_text(out_dir / "purity.svg", svg_layer_purity(sweep, "cluster purity by layer"));
      written.push_back(out_dir / "layers.csv");
      written.push_back(out_dir / "purity.svg");
      break;
    }
    case Experiment::real_embed: {
      const auto task =
          load_feature_task(config.inputs, config.phases, config.holdout_fraction, tc.current_fraction);
      const ModeRuns runs = run_modes(tc, *task);
      write_modes(runs, out_dir, title, written);
      result.checks = real_embed_checks(runs);
      break;
    }
  }
  checks_table(result.checks).write(out_dir / "checks.csv");
  written.push_back(out_dir / "checks.csv");
  return result;
}

}  // namespace lace
