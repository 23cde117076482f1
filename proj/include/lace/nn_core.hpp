#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace lace {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double value);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// y = W x. Throws ShapeError when x.size() != W.cols().
Vector linear_forward(const Matrix& weights, std::span<const double> x);

// Only the first `active_rows` rows are evaluated; the remainder of the
// output is zero.
Vector linear_forward_rows(const Matrix& weights, std::span<const double> x,
                           std::size_t active_rows);

// x_grad = W^T g
Vector linear_backward_input(const Matrix& weights, std::span<const double> grad_out);

// W_grad += scale * g x^T, restricted to the first `active_rows` rows.
void accumulate_outer(Matrix& weight_grad, std::span<const double> grad_out,
                      std::span<const double> x, double scale, std::size_t active_rows);

Vector relu(std::span<const double> v);

// d/dv relu(v) applied to an upstream gradient.
Vector relu_backward(std::span<const double> pre_activation, std::span<const double> grad_out);

struct SoftmaxXent {
  double loss = 0.0;
  Vector grad_logits;
};

// Cross-entropy of softmax(logits) against `label`, stabilized by
// max-subtraction. grad_logits = softmax(logits) - onehot(label).
SoftmaxXent softmax_xent(std::span<const double> logits, std::size_t label);

std::size_t argmax(std::span<const double> v);

struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols, double learning_rate)
      : m(rows, cols), v(rows, cols), lr(learning_rate) {}

  // Zeroes both moments of one row (used when a parameter row is re-initialized).
  void reset_row(std::size_t r);
};

// One bias-corrected Adam update of `param` in place; increments state.step.
void adam_step(Matrix& param, const Matrix& grad, AdamState& state);

}  // namespace lace
