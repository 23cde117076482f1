#include <doctest.h>

#include <cmath>

#include "lace/errors.hpp"
#include "lace/nn_core.hpp"
#include "lace/rng.hpp"
#include "oracles.hpp"

using namespace lace;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("linear forward and shape errors") {
  Matrix w(2, 3);
  w(0, 0) = 1;
  w(0, 2) = 2;
  w(1, 1) = -1;
  const Vector y = linear_forward(w, Vector{1, 2, 3});
  CHECK(y == Vector{7, -2});
  CHECK_THROWS_AS(linear_forward(w, Vector{1, 2}), ShapeError);
  const Vector partial = linear_forward_rows(w, Vector{1, 2, 3}, 1);
  CHECK(partial == Vector{7, 0});
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Vector logits = random_vector(5, rng);
    const std::size_t label = rng.below(5);
    const auto sx = softmax_xent(logits, label);
    const auto fd = oracle::fd_gradient(logits, [&] { return softmax_xent(logits, label).loss; });
    CHECK(oracle::rel_error(sx.grad_logits, fd) < 1e-6);
  }
}

TEST_CASE("softmax cross-entropy is stable for large logits") {
  const auto sx = softmax_xent(Vector{1000.0, 0.0}, 0);
  CHECK(sx.loss == doctest::Approx(0.0));
  CHECK(std::isfinite(softmax_xent(Vector{-1000.0, 1000.0}, 0).loss));
}

TEST_CASE("linear and relu backward match finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix w = random_matrix(4, 3, rng);
    Vector x = random_vector(3, rng);
    const Vector up = random_vector(4, rng);
    const auto objective = [&] {
      const Vector h = relu(linear_forward(w, x));
      double s = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) s += up[i] * h[i];
      return s;
    };
    const Vector pre = linear_forward(w, x);
    const Vector g = relu_backward(pre, up);
    Matrix gw(4, 3);
    accumulate_outer(gw, g, x, 1.0, 4);
    const Vector gx = linear_backward_input(w, g);
    const auto fd_w = oracle::fd_gradient(w.data(), objective);
    const auto fd_x = oracle::fd_gradient(x, objective);
    CHECK(oracle::rel_error(gw.data(), fd_w) < 1e-4);
    CHECK(oracle::rel_error(gx, fd_x) < 1e-4);
  }
}

TEST_CASE("accumulate_outer leaves rows past active_rows untouched") {
  Matrix g(3, 2);
  accumulate_outer(g, Vector{1, 1, 1}, Vector{2, 3}, 0.5, 2);
  CHECK(g(0, 0) == 1.0);
  CHECK(g(1, 1) == 1.5);
  CHECK(g(2, 0) == 0.0);
  CHECK(g(2, 1) == 0.0);
}

TEST_CASE("Adam first step moves each parameter by lr * sign(grad)") {
  Matrix p(1, 3, 1.0);
  Matrix g(1, 3);
  g(0, 0) = 0.5;
  g(0, 1) = -2.0;
  g(0, 2) = 0.0;
  AdamState s(1, 3, 0.1);
  adam_step(p, g, s);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  CHECK(p(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p(0, 1) == doctest::Approx(1.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(p(0, 2) == 1.0);
  CHECK(s.step == 1);
}

TEST_CASE("Adam with a constant gradient follows the closed form") {
  Matrix p(1, 1, 0.0);
  Matrix g(1, 1, 3.0);
  AdamState s(1, 1, 0.01);
  for (int t = 1; t <= 5; ++t) adam_step(p, g, s);
  // Bias-corrected moments of a constant gradient equal g and g^2 exactly.
  CHECK(p(0, 0) == doctest::Approx(-5 * 0.01 * 3.0 / (3.0 + 1e-8)).epsilon(1e-10));
  CHECK(s.m(0, 0) == doctest::Approx(3.0 * (1 - std::pow(0.9, 5))));
  CHECK(s.v(0, 0) == doctest::Approx(9.0 * (1 - std::pow(0.999, 5))));
}

TEST_CASE("Adam reset_row zeroes one row of both moments") {
  AdamState s(2, 2, 0.1);
  s.m.fill(1.0);
  s.v.fill(2.0);
  s.reset_row(1);
  CHECK(s.m(0, 1) == 1.0);
  CHECK(s.m(1, 0) == 0.0);
  CHECK(s.v(1, 1) == 0.0);
  CHECK(s.v(0, 0) == 2.0);
}

TEST_CASE("argmax returns the first maximum") {
  CHECK(argmax(Vector{1, 3, 3, 2}) == 1);
}
