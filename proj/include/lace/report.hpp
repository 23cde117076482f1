#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lace/clustering.hpp"
#include "lace/detector.hpp"
#include "lace/trainer.hpp"

namespace lace {

// Shortest decimal form that round-trips; identical across runs.
std::string format_number(double v);

// Comma-joined row; fields containing ',', '"' or a line break are quoted.
std::string csv_row(std::span<const std::string> fields);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<std::string> row);  // throws ShapeError on a width mismatch
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// step, loss, d_active, decision
CsvTable report_table(const RunReport& report);
// step, loss, baseline, decision, cooldown_remaining
CsvTable detector_table(std::span<const DetectorRecord> records);
CsvTable detector_table(const RunReport& report);
// eval_step, domain, accuracy (introduced domains only)
CsvTable perdomain_table(const RunReport& report);
// step, d_before, d_after, signal
CsvTable events_table(std::span<const ExpansionEvent> events);
// condition, dim, accuracy, drop
CsvTable ablation_table(std::span<const AblationRow> rows);
// layer, purity, k
CsvTable layer_table(std::span<const LayerPurity> layers);

// One summary row per run: label, mode, final_acc, expansions, d_final,
// d_avg, precision, precision_vacuous.
std::vector<std::string> summary_header();
std::vector<std::string> summary_row(std::string_view label, const RunReport& report);

// Loss (left axis) and d_active (right axis) over steps, with domain
// boundaries and expansion markers.
std::string svg_loss_capacity(const RunReport& report, std::string_view title);
// Domain x eval-step heat strip of held-out accuracy.
std::string svg_accuracy_strip(const RunReport& report, std::string_view title);
// Accuracy drop per ablation condition.
std::string svg_ablation_bars(std::span<const AblationRow> rows, std::string_view title);
// Purity by layer.
std::string svg_layer_purity(std::span<const LayerPurity> layers, std::string_view title);
// Overall accuracy over steps, one line per labeled run.
std::string svg_accuracy_curves(std::span<const std::pair<std::string, const RunReport*>> runs,
                                std::string_view title);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace lace
