#include "lace/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lace/errors.hpp"

namespace lace {

std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string csv_row(std::span<const std::string> fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out += f;
      continue;
    }
    out += '"';
    for (const char c : f) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
  }
  return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw ShapeError("csv row has " + std::to_string(row.size()) + " fields, header has " +
                     std::to_string(header_.size()));
  }
  rows_.push_back(std::move(row));
}

void CsvTable::write(std::ostream& out) const {
  out << csv_row(header_) << '\n';
  for (const auto& row : rows_) out << csv_row(row) << '\n';
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write(out);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

CsvTable report_table(const RunReport& report) {
  CsvTable t({"step", "loss", "d_active", "decision"});
  for (const auto& r : report.trace) {
    t.add({std::to_string(r.step), format_number(r.loss), std::to_string(r.d_active),
           std::string(to_string(r.decision))});
  }
  return t;
}

CsvTable detector_table(std::span<const DetectorRecord> records) {
  CsvTable t({"step", "loss", "baseline", "decision", "cooldown_remaining"});
  for (const auto& r : records) {
    t.add({std::to_string(r.step), format_number(r.loss),
           r.baseline ? format_number(*r.baseline) : "", std::string(to_string(r.decision)),
           std::to_string(r.cooldown_remaining)});
  }
  return t;
}

CsvTable detector_table(const RunReport& report) {
  CsvTable t({"step", "loss", "baseline", "decision", "cooldown_remaining"});
  for (const auto& r : report.trace) {
    t.add({std::to_string(r.step), format_number(r.loss),
           r.baseline ? format_number(*r.baseline) : "", std::string(to_string(r.decision)),
           std::to_string(r.cooldown_remaining)});
  }
  return t;
}

CsvTable perdomain_table(const RunReport& report) {
  CsvTable t({"eval_step", "domain", "accuracy"});
  for (const auto& e : report.evals) {
    for (std::size_t d = 0; d < e.per_domain.size(); ++d) {
      if (!e.per_domain[d]) continue;
      t.add({std::to_string(e.step), std::to_string(d), format_number(*e.per_domain[d])});
    }
  }
  return t;
}

CsvTable events_table(std::span<const ExpansionEvent> events) {
  CsvTable t({"step", "d_before", "d_after", "signal"});
  for (const auto& e : events) {
    t.add({std::to_string(e.step), std::to_string(e.d_before), std::to_string(e.d_after),
           e.signal == ExpansionSignal::spike ? "spike" : "sustained"});
  }
  return t;
}

CsvTable ablation_table(std::span<const AblationRow> rows) {
  CsvTable t({"condition", "dim", "accuracy", "drop"});
  for (const auto& r : rows) {
    t.add({r.condition, r.dim ? std::to_string(*r.dim) : "", format_number(r.accuracy),
           format_number(r.drop)});
  }
  return t;
}

CsvTable layer_table(std::span<const LayerPurity> layers) {
  CsvTable t({"layer", "purity", "k"});
  for (const auto& l : layers) {
    t.add({std::to_string(l.layer), format_number(l.report.purity), std::to_string(l.report.k)});
  }
  return t;
}

std::vector<std::string> summary_header() {
  return {"run",   "mode",  "final_acc", "expansions", "d_final",
          "d_avg", "precision", "precision_vacuous"};
}

std::vector<std::string> summary_row(std::string_view label, const RunReport& report) {
  return {std::string(label),
          std::string(to_string(report.mode)),
          format_number(report.final_accuracy),
          std::to_string(report.events.size()),
          std::to_string(report.d_final),
          format_number(report.d_avg),
          format_number(report.boundary_precision),
          report.precision_vacuous ? "1" : "0"};
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 760;
constexpr double kHeight = 380;
constexpr double kLeft = 64;
constexpr double kRight = 64;
constexpr double kTop = 40;
constexpr double kBottom = 48;

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string escape_xml(std::string_view text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

class Svg {
 public:
  explicit Svg(std::string_view title) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(kWidth / 2, 22, title, "middle", 14);
  }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1,
            std::string_view dash = {}) {
    out_ << "<line x1=\"" << fixed(x1) << "\" y1=\"" << fixed(y1) << "\" x2=\"" << fixed(x2)
         << "\" y2=\"" << fixed(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << '"';
    if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << '"';
    out_ << "/>\n";
  }

  void rect(double x, double y, double w, double h, std::string_view fill) {
    out_ << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" width=\"" << fixed(std::max(w, 0.0))
         << "\" height=\"" << fixed(std::max(h, 0.0)) << "\" fill=\"" << fill << "\"/>\n";
  }

  void circle(double x, double y, double r, std::string_view fill) {
    out_ << "<circle cx=\"" << fixed(x) << "\" cy=\"" << fixed(y) << "\" r=\"" << r << "\" fill=\""
         << fill << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke,
                double width = 1.2) {
    if (pts.empty()) return;
    out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width
         << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i > 0) out_ << ' ';
      out_ << fixed(pts[i].first) << ',' << fixed(pts[i].second);
    }
    out_ << "\"/>\n";
  }

  void text(double x, double y, std::string_view s, std::string_view anchor = "start",
            double size = 11, std::string_view fill = "black") {
    out_ << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" text-anchor=\"" << anchor
         << "\" font-size=\"" << size << "\" fill=\"" << fill << "\">" << escape_xml(s) << "</text>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  double px_lo = 0.0;
  double px_hi = 1.0;

  double map(double v) const {
    if (hi == lo) return (px_lo + px_hi) / 2;
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

void frame(Svg& svg, const Axis& x, const Axis& y, std::string_view x_label,
           std::string_view y_label, int digits) {
  svg.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");
  svg.line(kLeft, kTop, kLeft, kHeight - kBottom, "black");
  for (int i = 0; i <= 4; ++i) {
    const double xv = x.lo + (x.hi - x.lo) * i / 4.0;
    const double yv = y.lo + (y.hi - y.lo) * i / 4.0;
    svg.text(x.map(xv), kHeight - kBottom + 14, fixed(xv, 0), "middle");
    svg.text(kLeft - 6, y.map(yv) + 4, fixed(yv, digits), "end");
    svg.line(kLeft, y.map(yv), kWidth - kRight, y.map(yv), "#e5e5e5");
  }
  svg.text((kLeft + kWidth - kRight) / 2, kHeight - 12, x_label, "middle");
  svg.text(14, kTop - 10, y_label, "start");
}

const std::array<std::string_view, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                  "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string svg_loss_capacity(const RunReport& report, std::string_view title) {
  Svg svg(title);
  const auto& trace = report.trace;
  const double last = trace.empty() ? 1.0 : static_cast<double>(trace.back().step);
  double max_loss = 0.0;
  for (const auto& r : trace) max_loss = std::max(max_loss, r.loss);
  if (max_loss <= 0.0) max_loss = 1.0;
  const Axis x{0.0, last, kLeft, kWidth - kRight};
  const Axis y{0.0, max_loss, kHeight - kBottom, kTop};
  const Axis yd{0.0, static_cast<double>(std::max<std::size_t>(report.d_max, 1)), kHeight - kBottom,
                kTop};
  frame(svg, x, y, "step", "loss", 2);
  for (const long b : report.introductions) {
    if (b > 0) svg.line(x.map(static_cast<double>(b)), kTop, x.map(static_cast<double>(b)),
                        kHeight - kBottom, "#bbbbbb", 1, "3,3");
  }
  // Loss is drawn at no more than ~1000 points.
  const std::size_t stride = std::max<std::size_t>(1, trace.size() / 1000);
  std::vector<std::pair<double, double>> loss_pts, dim_pts;
  for (std::size_t i = 0; i < trace.size(); i += stride) {
    loss_pts.emplace_back(x.map(static_cast<double>(trace[i].step)), y.map(trace[i].loss));
  }
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const bool change = i == 0 || i + 1 == trace.size() || trace[i].d_active != trace[i - 1].d_active;
    if (!change) continue;
    const double px = x.map(static_cast<double>(trace[i].step));
    if (!dim_pts.empty()) dim_pts.emplace_back(px, dim_pts.back().second);
    dim_pts.emplace_back(px, yd.map(static_cast<double>(trace[i].d_active)));
  }
  svg.polyline(loss_pts, kPalette[0], 1.0);
  svg.polyline(dim_pts, kPalette[1], 1.6);
  for (const auto& e : report.events) {
    svg.circle(x.map(static_cast<double>(e.step)), yd.map(static_cast<double>(e.d_after)), 3,
               e.signal == ExpansionSignal::spike ? kPalette[1] : kPalette[4]);
  }
  for (int i = 0; i <= 4; ++i) {
    const double dv = yd.hi * i / 4.0;
    svg.text(kWidth - kRight + 6, yd.map(dv) + 4, fixed(dv, 0), "start", 11, kPalette[1]);
  }
  svg.text(kWidth - kRight, kTop - 10, "d_active", "end", 11, kPalette[1]);
  return svg.finish();
}

std::string svg_accuracy_strip(const RunReport& report, std::string_view title) {
  Svg svg(title);
  const std::size_t cols = report.evals.size();
  const std::size_t rows = report.evals.empty() ? 0 : report.evals.front().per_domain.size();
  const double w = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(cols, 1));
  const double h = (kHeight - kTop - kBottom) / static_cast<double>(std::max<std::size_t>(rows, 1));
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& acc = report.evals[c].per_domain[r];
      std::string fill = "#f2f2f2";
      if (acc) {
        // White (0) to dark blue (1).
        const double a = std::clamp(*acc, 0.0, 1.0);
        const int red = static_cast<int>(std::lround(255 - a * (255 - 8)));
        const int green = static_cast<int>(std::lround(255 - a * (255 - 48)));
        const int blue = static_cast<int>(std::lround(255 - a * (255 - 107)));
        std::ostringstream s;
        s << "rgb(" << red << ',' << green << ',' << blue << ')';
        fill = s.str();
      }
      svg.rect(kLeft + static_cast<double>(c) * w, kTop + static_cast<double>(r) * h, w + 0.3, h + 0.3,
               fill);
    }
  }
  const std::size_t label_every = std::max<std::size_t>(1, rows / 10);
  for (std::size_t r = 0; r < rows; r += label_every) {
    svg.text(kLeft - 6, kTop + (static_cast<double>(r) + 0.5) * h + 4, "d" + std::to_string(r), "end");
  }
  if (cols > 0) {
    svg.text(kLeft, kHeight - kBottom + 14, std::to_string(report.evals.front().step), "start");
    svg.text(kWidth - kRight, kHeight - kBottom + 14, std::to_string(report.evals.back().step), "end");
  }
  svg.text((kLeft + kWidth - kRight) / 2, kHeight - 12, "eval step (white 0, dark 1)", "middle");
  return svg.finish();
}

std::string svg_ablation_bars(std::span<const AblationRow> rows, std::string_view title) {
  Svg svg(title);
  double max_drop = 0.01;
  for (const auto& r : rows) max_drop = std::max(max_drop, r.drop);
  const Axis y{0.0, max_drop, kHeight - kBottom, kTop};
  const Axis x{0.0, static_cast<double>(rows.size()), kLeft, kWidth - kRight};
  frame(svg, x, y, "condition", "accuracy drop", 3);
  const double w = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double drop = std::max(rows[i].drop, 0.0);
    const bool collective = !rows[i].dim && rows[i].condition != "baseline";
    const std::string_view fill = collective ? kPalette[1] : (drop > 0.01 ? kPalette[4] : kPalette[0]);
    svg.rect(kLeft + static_cast<double>(i) * w + w * 0.1, y.map(drop), w * 0.8,
             y.map(0.0) - y.map(drop), fill);
  }
  return svg.finish();
}

std::string svg_layer_purity(std::span<const LayerPurity> layers, std::string_view title) {
  Svg svg(title);
  double last = 1.0;
  for (const auto& l : layers) last = std::max(last, static_cast<double>(l.layer));
  const Axis x{0.0, last, kLeft, kWidth - kRight};
  const Axis y{0.0, 1.0, kHeight - kBottom, kTop};
  frame(svg, x, y, "layer", "purity", 2);
  std::vector<std::pair<double, double>> pts;
  for (const auto& l : layers) {
    pts.emplace_back(x.map(static_cast<double>(l.layer)), y.map(l.report.purity));
  }
  svg.polyline(pts, kPalette[0], 1.6);
  for (const auto& p : pts) svg.circle(p.first, p.second, 3, kPalette[0]);
  return svg.finish();
}

std::string svg_accuracy_curves(std::span<const std::pair<std::string, const RunReport*>> runs,
                                std::string_view title) {
  Svg svg(title);
  double last = 1.0;
  for (const auto& [label, run] : runs) {
    if (!run->evals.empty()) last = std::max(last, static_cast<double>(run->evals.back().step));
  }
  const Axis x{0.0, last, kLeft, kWidth - kRight};
  const Axis y{0.0, 1.0, kHeight - kBottom, kTop};
  frame(svg, x, y, "step", "accuracy", 2);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : runs[i].second->evals) {
      pts.emplace_back(x.map(static_cast<double>(e.step)), y.map(e.overall));
    }
    const auto colour = kPalette[i % kPalette.size()];
    svg.polyline(pts, colour, 1.6);
    svg.text(kLeft + 10, kTop + 14 + 14 * static_cast<double>(i), runs[i].first, "start", 11, colour);
  }
  return svg.finish();
}

}  // namespace lace
