#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "lace/nn_core.hpp"

namespace lace {

inline constexpr std::uint8_t kUnlabeled = 0xFF;

// n activation vectors of width d, optionally labeled by domain.
struct ActivationSet {
  Matrix values;                     // n x d
  std::vector<std::uint8_t> labels;  // empty, or one per row (kUnlabeled allowed)
  std::optional<std::uint32_t> layer;

  std::size_t n() const { return values.rows(); }
  std::size_t d() const { return values.cols(); }
  bool labeled() const { return !labels.empty(); }

  // Throws ShapeError on a label count mismatch, FormatError on non-finite values.
  void validate() const;
};

// LACT: "LACT", version u32, layer u32, n u32, d u32, n*d float32 row-major,
// then n label bytes (0xFF = unlabeled). Little-endian throughout.
inline constexpr std::uint32_t kLactVersion = 1;

void write_lact(const std::filesystem::path& path, const ActivationSet& set);
ActivationSet read_lact(const std::filesystem::path& path);

struct Pca {
  Vector mean;              // length d
  Matrix components;        // d_pca x d, one principal direction per row
  Vector eigenvalues;       // descending, sample covariance (n - 1 denominator)

  std::size_t input_dim() const { return mean.size(); }
  std::size_t output_dim() const { return components.rows(); }
  Vector project(std::span<const double> x) const;
};

// Top d_pca directions of the mean-centered sample covariance. Each direction
// is signed so its largest-magnitude component is positive.
// Throws InsufficientData when n < d_pca and ShapeError when d_pca > d.
Pca fit_pca(const ActivationSet& acts, std::size_t d_pca);

// Streaming clustering with cosine distance: a sample joins the nearest center
// when 1 - cos <= delta, moving it to the running mean of its members;
// otherwise it spawns a new center.
class ClusterModel {
 public:
  explicit ClusterModel(double delta = 0.15);

  // Throws ShapeError on a width mismatch and ZeroVector on an all-zero input.
  std::size_t assign(std::span<const double> x);

  double delta() const { return delta_; }
  std::size_t k() const { return centers_.size(); }
  const std::vector<Vector>& centers() const { return centers_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  std::size_t samples_seen() const { return seen_; }

 private:
  double delta_;
  std::vector<Vector> centers_;
  std::vector<std::size_t> counts_;
  std::size_t seen_ = 0;
};

double cosine_distance(std::span<const double> a, std::span<const double> b);

struct ClusterPurity {
  std::size_t cluster = 0;
  std::size_t size = 0;
  std::size_t majority_label = 0;
  std::size_t majority_count = 0;
};

struct PurityReport {
  double purity = 0.0;
  std::size_t k = 0;
  std::vector<ClusterPurity> clusters;
};

// (1/N) * sum over clusters of the largest single-label count in the cluster.
PurityReport purity(std::span<const std::size_t> assignments, std::span<const std::size_t> labels);

struct ClusterRun {
  Pca pca;
  ClusterModel model;
  std::vector<std::size_t> assignments;
  PurityReport report;  // purity over labeled rows; k counts every cluster
};

// fit_pca, then one streaming pass in row order.
ClusterRun cluster_activations(const ActivationSet& acts, std::size_t d_pca = 32,
                               double delta = 0.15);

struct LayerPurity {
  std::uint32_t layer = 0;
  PurityReport report;
};

// Independent PCA and clustering per layer; layers are processed in parallel.
std::vector<LayerPurity> layer_sweep(std::span<const ActivationSet> layers, std::size_t d_pca = 32,
                                     double delta = 0.15);

}  // namespace lace
