#include "lace/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lace/errors.hpp"

namespace lace {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Vector linear_forward(const Matrix& weights, std::span<const double> x) {
  return linear_forward_rows(weights, x, weights.rows());
}

Vector linear_forward_rows(const Matrix& weights, std::span<const double> x,
                           std::size_t active_rows) {
  if (x.size() != weights.cols()) {
    throw ShapeError("linear_forward: input length " + std::to_string(x.size()) +
                     " does not match weight cols " + std::to_string(weights.cols()));
  }
  Vector y(weights.rows(), 0.0);
  const std::size_t n = std::min(active_rows, weights.rows());
  for (std::size_t r = 0; r < n; ++r) {
    const auto w = weights.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
  return y;
}

Vector linear_backward_input(const Matrix& weights, std::span<const double> grad_out) {
  if (grad_out.size() != weights.rows()) {
    throw ShapeError("linear_backward_input: gradient length mismatch");
  }
  Vector g(weights.cols(), 0.0);
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    const double gr = grad_out[r];
    if (gr == 0.0) continue;
    const auto w = weights.row(r);
    for (std::size_t c = 0; c < w.size(); ++c) g[c] += gr * w[c];
  }
  return g;
}

void accumulate_outer(Matrix& weight_grad, std::span<const double> grad_out,
                      std::span<const double> x, double scale, std::size_t active_rows) {
  if (grad_out.size() != weight_grad.rows() || x.size() != weight_grad.cols()) {
    throw ShapeError("accumulate_outer: shape mismatch");
  }
  const std::size_t n = std::min(active_rows, weight_grad.rows());
  for (std::size_t r = 0; r < n; ++r) {
    const double gr = grad_out[r] * scale;
    if (gr == 0.0) continue;
    auto row = weight_grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += gr * x[c];
  }
}

Vector relu(std::span<const double> v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

Vector relu_backward(std::span<const double> pre_activation, std::span<const double> grad_out) {
  if (pre_activation.size() != grad_out.size()) {
    throw ShapeError("relu_backward: length mismatch");
  }
  Vector g(grad_out.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = pre_activation[i] > 0.0 ? grad_out[i] : 0.0;
  return g;
}

SoftmaxXent softmax_xent(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw IndexError("softmax_xent: label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  SoftmaxXent out;
  out.grad_logits.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.grad_logits[i] = std::exp(logits[i] - max_logit);
    sum += out.grad_logits[i];
  }
  const double log_sum = std::log(sum);
  for (auto& p : out.grad_logits) p /= sum;
  out.loss = -(logits[label] - max_logit - log_sum);
  // -log p is never negative; guard the rounding of a saturated softmax.
  if (out.loss < 0.0) out.loss = 0.0;
  out.grad_logits[label] -= 1.0;
  return out;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void AdamState::reset_row(std::size_t r) {
  for (auto& x : m.row(r)) x = 0.0;
  for (auto& x : v.row(r)) x = 0.0;
}

void adam_step(Matrix& param, const Matrix& grad, AdamState& state) {
  if (!param.same_shape(grad) || !param.same_shape(state.m) || !param.same_shape(state.v)) {
    throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  auto p = param.data();
  const auto g = grad.data();
  auto m = state.m.data();
  auto v = state.v.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    if (m[i] == 0.0) continue;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace lace
