#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <vector>

#include "lace/nn_core.hpp"
#include "lace/rng.hpp"
#include "lace/sample.hpp"

namespace lace {

struct ModelShape {
  std::size_t vocab = 128;  // 0 means the embedding table is bypassed
  std::size_t seq_len = 32;
  std::size_t d_emb = 32;
  std::size_t d_base = 64;
  std::size_t d_max = 84;
  std::size_t num_classes = 10;
};

// Standard deviations of the Gaussian initializers.
struct InitScales {
  double embed = 1.0;
  double proj = 0.0;  // 0 selects sqrt(2 / d_emb)
  double head = 0.0;  // 0 selects sqrt(1 / d_max)
};

enum class ExpansionSignal { spike, sustained };

struct ExpansionEvent {
  long step = -1;
  std::size_t d_before = 0;
  std::size_t d_after = 0;
  ExpansionSignal signal = ExpansionSignal::spike;

  friend bool operator==(const ExpansionEvent&, const ExpansionEvent&) = default;
};

// Dimensions switched off for an ablation forward pass. Indices must be < d_active.
struct AblationMask {
  std::set<std::size_t> disabled_dims;
};

struct ForwardResult {
  Vector logits;
  Vector hidden;  // length d_max; zero at masked indices
};

struct Gradients {
  double loss = 0.0;  // mean over the batch
  Matrix embed;
  Matrix proj;
  Matrix head;
};

// Embedding -> masked projection -> ReLU -> linear head.
//
//   x      = mean_t embed[token_t]
//   hidden = ReLU(proj x) * mask,   mask_i = 1 iff i < d_active
//   logits = head hidden
//
// proj and head are allocated at d_max from the start; expanding flips the
// next mask bit and re-initializes the corresponding proj row.
class DynamicModel {
 public:
  DynamicModel(const ModelShape& shape, double lr, std::uint64_t seed,
               const InitScales& scales = {});

  const ModelShape& shape() const { return shape_; }
  std::size_t d_active() const { return d_active_; }
  std::size_t d_base() const { return shape_.d_base; }
  std::size_t d_max() const { return shape_.d_max; }
  std::size_t num_classes() const { return shape_.num_classes; }
  bool uses_embedding() const { return shape_.vocab > 0; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  // Forces d_active (mask prefix) without touching weights. Used to pin the
  // fixed-width baselines; must stay within [d_base, d_max] unless
  // `allow_below_base` is set (test-only full-mask checks).
  void set_active(std::size_t d_active, bool allow_below_base = false);

  // Mean-pooled embedding of a token sequence.
  Vector pool(std::span<const Token> tokens) const;

  ForwardResult forward(std::span<const Token> tokens) const;
  ForwardResult forward_features(std::span<const double> x) const;
  Vector forward_ablated(std::span<const Token> tokens, const AblationMask& ablation) const;
  Vector forward_features_ablated(std::span<const double> x, const AblationMask& ablation) const;

  // Activates row d_active with N(0, sigma^2) weights and zeroed Adam moments.
  // Throws CapacityExhausted (model untouched) when d_active == d_max.
  ExpansionEvent expand(double sigma, Rng& rng);

  Gradients compute_gradients(std::span<const Sample> batch) const;
  Gradients compute_gradients(std::span<const FeatureSample> batch) const;
  double loss(std::span<const Sample> batch) const;
  double loss(std::span<const FeatureSample> batch) const;

  // One Adam step on the mean batch loss; returns the pre-update loss.
  double train_step(std::span<const Sample> batch);
  double train_step(std::span<const FeatureSample> batch);

  Matrix& embed() { return embed_; }
  Matrix& proj() { return proj_; }
  Matrix& head() { return head_; }
  const Matrix& embed() const { return embed_; }
  const Matrix& proj() const { return proj_; }
  const Matrix& head() const { return head_; }
  const AdamState& proj_optimizer() const { return proj_opt_; }

  // Binary checkpoint: "LACE", version, shape header, then embed/proj/head as
  // float32 little-endian. Optimizer state is not persisted.
  void save(const std::filesystem::path& path) const;
  static DynamicModel load(const std::filesystem::path& path, double lr = 3e-4);

  static constexpr std::uint32_t kCheckpointVersion = 1;

 private:
  DynamicModel() = default;

  ForwardResult forward_core(std::span<const double> x, const std::set<std::size_t>* disabled) const;
  void check_tokens(std::span<const Token> tokens) const;
  void accumulate(std::span<const double> x, std::size_t label, double scale, Gradients& grads,
                  Vector* grad_x) const;
  void apply(const Gradients& grads);

  ModelShape shape_;
  std::size_t d_active_ = 0;
  std::vector<std::uint8_t> mask_;
  Matrix embed_;
  Matrix proj_;
  Matrix head_;
  AdamState embed_opt_;
  AdamState proj_opt_;
  AdamState head_opt_;
};

}  // namespace lace
