#include "lace/clustering.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "lace/binary_io.hpp"
#include "lace/errors.hpp"
#include "lace/parallel.hpp"

namespace lace {

void ActivationSet::validate() const {
  if (!labels.empty() && labels.size() != n()) {
    throw ShapeError("activation set has " + std::to_string(n()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  for (const double v : values.data()) {
    if (!std::isfinite(v)) throw FormatError("activation set contains a non-finite value");
  }
}

void write_lact(const std::filesystem::path& path, const ActivationSet& set) {
  set.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write("LACT", 4);
  binary::write_u32(out, kLactVersion);
  binary::write_u32(out, set.layer.value_or(0));
  binary::write_u32(out, static_cast<std::uint32_t>(set.n()));
  binary::write_u32(out, static_cast<std::uint32_t>(set.d()));
  for (const double v : set.values.data()) binary::write_f32(out, static_cast<float>(v));
  for (std::size_t i = 0; i < set.n(); ++i) {
    const char b = static_cast<char>(set.labeled() ? set.labels[i] : kUnlabeled);
    out.write(&b, 1);
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

ActivationSet read_lact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  binary::Reader r(in);
  r.expect_magic("LACT");
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kLactVersion) {
    throw FormatError("unsupported LACT version " + std::to_string(version) + " at offset " +
                      std::to_string(version_at));
  }
  ActivationSet set;
  set.layer = r.u32("layer");
  const std::uint32_t n = r.u32("n");
  const std::uint32_t d = r.u32("d");
  set.values = Matrix(n, d);
  for (double& v : set.values.data()) {
    const std::uint64_t at = r.offset();
    const float f = r.f32("activation value");
    if (!std::isfinite(f)) {
      throw FormatError("non-finite activation value at offset " + std::to_string(at));
    }
    v = f;
  }
  set.labels.resize(n);
  bool any = false;
  for (auto& b : set.labels) {
    b = r.u8("label");
    any = any || b != kUnlabeled;
  }
  if (!r.at_eof()) {
    throw FormatError("trailing bytes after labels at offset " + std::to_string(r.offset()));
  }
  if (!any) set.labels.clear();
  return set;
}

Vector Pca::project(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    throw ShapeError("pca expects width " + std::to_string(mean.size()) + ", got " +
                     std::to_string(x.size()));
  }
  Vector centered(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - mean[i];
  return linear_forward(components, centered);
}

Pca fit_pca(const ActivationSet& acts, std::size_t d_pca) {
  const std::size_t n = acts.n();
  const std::size_t d = acts.d();
  if (d_pca == 0) throw ConfigError("d_pca must be positive");
  if (d_pca > d) {
    throw ShapeError("d_pca " + std::to_string(d_pca) + " exceeds input width " + std::to_string(d));
  }
  if (n < d_pca || n < 2) {
    throw InsufficientData("pca needs at least " + std::to_string(std::max<std::size_t>(d_pca, 2)) +
                           " samples, got " + std::to_string(n));
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> x(acts.values.data().data(), static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("covariance eigensolve did not converge");

  Pca pca;
  pca.mean.assign(mu.data(), mu.data() + d);
  pca.components = Matrix(d_pca, d);
  pca.eigenvalues.resize(d_pca);
  // Eigenvalues come back ascending.
  for (std::size_t k = 0; k < d_pca; ++k) {
    const auto col = static_cast<Eigen::Index>(d - 1 - k);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0.0) v = -v;
    for (std::size_t j = 0; j < d; ++j) pca.components(k, j) = v(static_cast<Eigen::Index>(j));
    pca.eigenvalues[k] = solver.eigenvalues()(col);
  }
  return pca;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine distance needs equal widths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine distance of a zero vector is undefined");
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

ClusterModel::ClusterModel(double delta) : delta_(delta) {
  if (!(delta >= 0.0 && delta <= 2.0)) throw ConfigError("delta must lie in [0, 2]");
}

std::size_t ClusterModel::assign(std::span<const double> x) {
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) {
    throw ZeroVector("cannot cluster a zero vector");
  }
  if (!centers_.empty() && x.size() != centers_.front().size()) {
    throw ShapeError("cluster input width " + std::to_string(x.size()) + " != " +
                     std::to_string(centers_.front().size()));
  }
  std::size_t best = 0;
  double best_dist = 0.0;
  for (std::size_t c = 0; c < centers_.size(); ++c) {
    const double dist = cosine_distance(x, centers_[c]);
    if (c == 0 || dist < best_dist) {
      best = c;
      best_dist = dist;
    }
  }
  ++seen_;
  if (centers_.empty() || best_dist > delta_) {
    centers_.emplace_back(x.begin(), x.end());
    counts_.push_back(1);
    return centers_.size() - 1;
  }
  auto& center = centers_[best];
  const double count = static_cast<double>(++counts_[best]);
  for (std::size_t i = 0; i < x.size(); ++i) center[i] += (x[i] - center[i]) / count;
  return best;
}

PurityReport purity(std::span<const std::size_t> assignments, std::span<const std::size_t> labels) {
  if (assignments.size() != labels.size()) {
    throw ShapeError("purity needs one label per assignment (" + std::to_string(assignments.size()) +
                     " vs " + std::to_string(labels.size()) + ")");
  }
  if (assignments.empty()) throw InsufficientData("purity of an empty assignment");
  std::map<std::size_t, std::map<std::size_t, std::size_t>> table;
  for (std::size_t i = 0; i < assignments.size(); ++i) ++table[assignments[i]][labels[i]];

  PurityReport report;
  std::size_t total = 0;
  for (const auto& [cluster, tally] : table) {
    ClusterPurity row;
    row.cluster = cluster;
    for (const auto& [label, count] : tally) {
      row.size += count;
      if (count > row.majority_count) {
        row.majority_count = count;
        row.majority_label = label;
      }
    }
    total += row.majority_count;
    report.clusters.push_back(row);
  }
  report.k = report.clusters.size();
  report.purity = static_cast<double>(total) / static_cast<double>(assignments.size());
  return report;
}

ClusterRun cluster_activations(const ActivationSet& acts, std::size_t d_pca, double delta) {
  acts.validate();
  ClusterRun run{fit_pca(acts, d_pca), ClusterModel(delta), {}, {}};
  run.assignments.reserve(acts.n());
  for (std::size_t i = 0; i < acts.n(); ++i) {
    run.assignments.push_back(run.model.assign(run.pca.project(acts.values.row(i))));
  }
  std::vector<std::size_t> assigned, labels;
  for (std::size_t i = 0; acts.labeled() && i < acts.n(); ++i) {
    if (acts.labels[i] == kUnlabeled) continue;
    assigned.push_back(run.assignments[i]);
    labels.push_back(acts.labels[i]);
  }
  if (!labels.empty()) run.report = purity(assigned, labels);
  run.report.k = run.model.k();
  return run;
}

std::vector<LayerPurity> layer_sweep(std::span<const ActivationSet> layers, std::size_t d_pca,
                                     double delta) {
  if (layers.empty()) throw InsufficientData("layer sweep needs at least one layer");
  for (const auto& set : layers) {
    if (!set.labeled()) throw InsufficientData("layer sweep needs labeled activations");
  }
  std::vector<LayerPurity> out(layers.size());
  parallel_for(layers.size(), [&](std::size_t i) {
    out[i].layer = layers[i].layer.value_or(static_cast<std::uint32_t>(i));
    out[i].report = cluster_activations(layers[i], d_pca, delta).report;
  });
  return out;
}

}  // namespace lace
