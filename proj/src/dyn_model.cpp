#include "lace/dyn_model.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "lace/binary_io.hpp"
#include "lace/errors.hpp"

namespace lace {

namespace {

void init_gaussian(Matrix& m, double stddev, Rng& rng) {
  for (auto& w : m.data()) w = rng.normal(0.0, stddev);
}

}  // namespace

DynamicModel::DynamicModel(const ModelShape& shape, double lr, std::uint64_t seed,
                           const InitScales& scales)
    : shape_(shape) {
  if (shape.d_base > shape.d_max) throw ShapeError("d_base exceeds d_max");
  if (shape.d_emb == 0 || shape.d_max == 0 || shape.num_classes == 0) {
    throw ShapeError("model dimensions must be positive");
  }
  embed_ = Matrix(shape.vocab, shape.d_emb);
  proj_ = Matrix(shape.d_max, shape.d_emb);
  head_ = Matrix(shape.num_classes, shape.d_max);

  Rng rng(seed);
  const double proj_std = scales.proj > 0.0 ? scales.proj : std::sqrt(2.0 / static_cast<double>(shape.d_emb));
  const double head_std = scales.head > 0.0 ? scales.head : std::sqrt(1.0 / static_cast<double>(shape.d_max));
  init_gaussian(embed_, scales.embed, rng);
  init_gaussian(proj_, proj_std, rng);
  init_gaussian(head_, head_std, rng);

  embed_opt_ = AdamState(embed_.rows(), embed_.cols(), lr);
  proj_opt_ = AdamState(proj_.rows(), proj_.cols(), lr);
  head_opt_ = AdamState(head_.rows(), head_.cols(), lr);

  mask_.assign(shape.d_max, 0);
  set_active(shape.d_base);
}

void DynamicModel::set_active(std::size_t d_active, bool allow_below_base) {
  if (d_active > shape_.d_max || (!allow_below_base && d_active < shape_.d_base)) {
    throw ShapeError("d_active " + std::to_string(d_active) + " outside [d_base, d_max]");
  }
  d_active_ = d_active;
  for (std::size_t i = 0; i < mask_.size(); ++i) mask_[i] = i < d_active_ ? 1 : 0;
}

void DynamicModel::check_tokens(std::span<const Token> tokens) const {
  if (!uses_embedding()) throw ShapeError("model has no embedding table; use forward_features");
  if (shape_.seq_len != 0 && tokens.size() != shape_.seq_len) {
    throw ShapeError("sequence length " + std::to_string(tokens.size()) + " != " +
                     std::to_string(shape_.seq_len));
  }
  if (tokens.empty()) throw ShapeError("empty token sequence");
  for (const Token t : tokens) {
    if (t >= shape_.vocab) {
      throw IndexError("token id " + std::to_string(t) + " out of range for vocab " +
                       std::to_string(shape_.vocab));
    }
  }
}

Vector DynamicModel::pool(std::span<const Token> tokens) const {
  check_tokens(tokens);
  Vector x(shape_.d_emb, 0.0);
  for (const Token t : tokens) {
    const auto e = embed_.row(t);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] += e[c];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (auto& v : x) v *= inv;
  return x;
}

ForwardResult DynamicModel::forward_core(std::span<const double> x,
                                         const std::set<std::size_t>* disabled) const {
  ForwardResult out;
  out.hidden = relu(linear_forward_rows(proj_, x, d_active_));
  for (std::size_t i = 0; i < out.hidden.size(); ++i) out.hidden[i] *= mask_[i];
  if (disabled) {
    for (const auto i : *disabled) out.hidden[i] = 0.0;
  }
  out.logits = linear_forward(head_, out.hidden);
  return out;
}

ForwardResult DynamicModel::forward(std::span<const Token> tokens) const {
  const Vector x = pool(tokens);
  return forward_core(x, nullptr);
}

ForwardResult DynamicModel::forward_features(std::span<const double> x) const {
  if (x.size() != shape_.d_emb) throw ShapeError("feature length does not match d_emb");
  return forward_core(x, nullptr);
}

namespace {

void check_ablation(const AblationMask& ablation, std::size_t d_active) {
  for (const auto i : ablation.disabled_dims) {
    if (i >= d_active) {
      throw InvalidAblation("ablated dimension " + std::to_string(i) + " is not active (d_active = " +
                            std::to_string(d_active) + ")");
    }
  }
}

}  // namespace

Vector DynamicModel::forward_ablated(std::span<const Token> tokens,
                                     const AblationMask& ablation) const {
  check_ablation(ablation, d_active_);
  const Vector x = pool(tokens);
  return forward_core(x, &ablation.disabled_dims).logits;
}

Vector DynamicModel::forward_features_ablated(std::span<const double> x,
                                              const AblationMask& ablation) const {
  check_ablation(ablation, d_active_);
  if (x.size() != shape_.d_emb) throw ShapeError("feature length does not match d_emb");
  return forward_core(x, &ablation.disabled_dims).logits;
}

ExpansionEvent DynamicModel::expand(double sigma, Rng& rng) {
  if (d_active_ >= shape_.d_max) {
    throw CapacityExhausted("cannot expand: d_active = d_max = " + std::to_string(shape_.d_max));
  }
  const std::size_t r = d_active_;
  for (auto& w : proj_.row(r)) w = sigma == 0.0 ? 0.0 : rng.normal(0.0, sigma);
  proj_opt_.reset_row(r);
  ExpansionEvent ev;
  ev.d_before = d_active_;
  mask_[r] = 1;
  ++d_active_;
  ev.d_after = d_active_;
  return ev;
}

void DynamicModel::accumulate(std::span<const double> x, std::size_t label, double scale,
                              Gradients& grads, Vector* grad_x) const {
  const Vector pre = linear_forward_rows(proj_, x, d_active_);
  Vector hidden = relu(pre);
  for (std::size_t i = 0; i < hidden.size(); ++i) hidden[i] *= mask_[i];
  const Vector logits = linear_forward(head_, hidden);
  const SoftmaxXent xent = softmax_xent(logits, label);
  grads.loss += scale * xent.loss;

  accumulate_outer(grads.head, xent.grad_logits, hidden, scale, head_.rows());
  Vector grad_hidden = linear_backward_input(head_, xent.grad_logits);
  for (std::size_t i = 0; i < grad_hidden.size(); ++i) grad_hidden[i] *= mask_[i];
  const Vector grad_pre = relu_backward(pre, grad_hidden);
  accumulate_outer(grads.proj, grad_pre, x, scale, d_active_);
  if (grad_x) *grad_x = linear_backward_input(proj_, grad_pre);
}

Gradients DynamicModel::compute_gradients(std::span<const Sample> batch) const {
  if (batch.empty()) throw ShapeError("empty batch");
  Gradients g{0.0, Matrix(embed_.rows(), embed_.cols()), Matrix(proj_.rows(), proj_.cols()),
              Matrix(head_.rows(), head_.cols())};
  const double scale = 1.0 / static_cast<double>(batch.size());
  Vector grad_x;
  for (const auto& s : batch) {
    const Vector x = pool(s.tokens);
    accumulate(x, s.label, scale, g, &grad_x);
    const double per_token = scale / static_cast<double>(s.tokens.size());
    for (const Token t : s.tokens) {
      auto row = g.embed.row(t);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += per_token * grad_x[c];
    }
  }
  return g;
}

Gradients DynamicModel::compute_gradients(std::span<const FeatureSample> batch) const {
  if (batch.empty()) throw ShapeError("empty batch");
  Gradients g{0.0, Matrix(embed_.rows(), embed_.cols()), Matrix(proj_.rows(), proj_.cols()),
              Matrix(head_.rows(), head_.cols())};
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    if (s.x.size() != shape_.d_emb) throw ShapeError("feature length does not match d_emb");
    accumulate(s.x, s.label, scale, g, nullptr);
  }
  return g;
}

double DynamicModel::loss(std::span<const Sample> batch) const {
  if (batch.empty()) throw ShapeError("empty batch");
  double total = 0.0;
  for (const auto& s : batch) total += softmax_xent(forward(s.tokens).logits, s.label).loss;
  return total / static_cast<double>(batch.size());
}

double DynamicModel::loss(std::span<const FeatureSample> batch) const {
  if (batch.empty()) throw ShapeError("empty batch");
  double total = 0.0;
  for (const auto& s : batch) total += softmax_xent(forward_features(s.x).logits, s.label).loss;
  return total / static_cast<double>(batch.size());
}

void DynamicModel::apply(const Gradients& grads) {
  if (uses_embedding()) adam_step(embed_, grads.embed, embed_opt_);
  adam_step(proj_, grads.proj, proj_opt_);
  adam_step(head_, grads.head, head_opt_);
}

double DynamicModel::train_step(std::span<const Sample> batch) {
  const Gradients g = compute_gradients(batch);
  apply(g);
  return g.loss;
}

double DynamicModel::train_step(std::span<const FeatureSample> batch) {
  const Gradients g = compute_gradients(batch);
  apply(g);
  return g.loss;
}

namespace {

void write_matrix(std::ostream& out, const Matrix& m) {
  binary::write_u32(out, static_cast<std::uint32_t>(m.rows()));
  binary::write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (const double v : m.data()) binary::write_f32(out, static_cast<float>(v));
}

Matrix read_matrix(binary::Reader& in, std::size_t rows, std::size_t cols, const char* name) {
  const auto offset = in.offset();
  const std::uint32_t r = in.u32(name);
  const std::uint32_t c = in.u32(name);
  if (r != rows || c != cols) {
    throw FormatError(std::string(name) + " dims " + std::to_string(r) + "x" + std::to_string(c) +
                      " inconsistent with header at offset " + std::to_string(offset));
  }
  Matrix m(r, c);
  for (auto& v : m.data()) {
    v = static_cast<double>(in.f32(name));
    if (!std::isfinite(v)) {
      throw FormatError(std::string("non-finite value in ") + name + " at offset " +
                        std::to_string(in.offset() - 4));
    }
  }
  return m;
}

}  // namespace

void DynamicModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write("LACE", 4);
  binary::write_u32(out, kCheckpointVersion);
  for (const std::size_t v : {shape_.d_base, d_active_, shape_.d_max, shape_.vocab, shape_.d_emb,
                              shape_.num_classes}) {
    binary::write_u32(out, static_cast<std::uint32_t>(v));
  }
  write_matrix(out, embed_);
  write_matrix(out, proj_);
  write_matrix(out, head_);
  if (!out) throw Error("write failed for " + path.string());
}

DynamicModel DynamicModel::load(const std::filesystem::path& path, double lr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  binary::Reader reader(in);
  reader.expect_magic("LACE");
  const std::uint32_t version = reader.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " at offset 4");
  }
  DynamicModel m;
  m.shape_.d_base = reader.u32("d_base");
  const std::size_t d_active = reader.u32("d_active");
  m.shape_.d_max = reader.u32("d_max");
  m.shape_.vocab = reader.u32("vocab");
  m.shape_.d_emb = reader.u32("d_emb");
  m.shape_.num_classes = reader.u32("num_classes");
  m.shape_.seq_len = m.shape_.vocab > 0 ? ModelShape{}.seq_len : 0;
  if (m.shape_.d_base > d_active || d_active > m.shape_.d_max) {
    throw FormatError("header violates d_base <= d_active <= d_max at offset 8");
  }
  m.embed_ = read_matrix(reader, m.shape_.vocab, m.shape_.d_emb, "embed");
  m.proj_ = read_matrix(reader, m.shape_.d_max, m.shape_.d_emb, "proj");
  m.head_ = read_matrix(reader, m.shape_.num_classes, m.shape_.d_max, "head");
  m.embed_opt_ = AdamState(m.embed_.rows(), m.embed_.cols(), lr);
  m.proj_opt_ = AdamState(m.proj_.rows(), m.proj_.cols(), lr);
  m.head_opt_ = AdamState(m.head_.rows(), m.head_.cols(), lr);
  m.mask_.assign(m.shape_.d_max, 0);
  m.set_active(d_active);
  return m;
}

}  // namespace lace
