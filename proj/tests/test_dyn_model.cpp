#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lace/dyn_model.hpp"
#include "lace/errors.hpp"
#include "model_checks.hpp"

using namespace lace;

namespace {

ModelShape tiny() {
  ModelShape s;
  s.vocab = 4;
  s.seq_len = 2;
  s.d_emb = 3;
  s.d_base = 2;
  s.d_max = 3;
  s.num_classes = 2;
  return s;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("construction rejects inconsistent shapes") {
  ModelShape s = tiny();
  s.d_base = 4;
  CHECK_THROWS_AS(DynamicModel(s, 1e-3, 1), ShapeError);
  s = tiny();
  s.num_classes = 0;
  CHECK_THROWS_AS(DynamicModel(s, 1e-3, 1), ShapeError);
}

TEST_CASE("full pipeline gradient matches finite differences on a single sample") {
  DynamicModel m(tiny(), 1e-3, 3);
  const std::vector<Sample> batch{{{1, 3}, 1}};
  const auto err = checks::model_fd_error(m, batch);
  CHECK(err.embed < 1e-6);
  CHECK(err.proj < 1e-6);
  CHECK(err.head < 1e-6);
}

TEST_CASE("batch gradient matches finite differences") {
  ModelShape s = tiny();
  s.vocab = 6;
  s.seq_len = 4;
  s.d_emb = 5;
  s.d_base = 3;
  s.d_max = 6;
  s.num_classes = 4;
  Rng rng(5);
  DynamicModel m(s, 1e-3, 9);
  const auto batch = checks::random_batch(s, 8, rng);
  CHECK(checks::model_fd_error(m, batch).worst() < 1e-4);
}

TEST_CASE("feature inputs bypass the embedding") {
  ModelShape s = tiny();
  s.vocab = 0;
  DynamicModel m(s, 1e-3, 2);
  CHECK_FALSE(m.uses_embedding());
  const std::vector<FeatureSample> batch{{{0.5, -1.0, 2.0}, 1}, {{1.0, 0.0, 0.3}, 0}};
  const Gradients g = m.compute_gradients(batch);
  const auto fd = oracle::fd_gradient(m.proj().data(), [&] { return m.loss(batch); });
  CHECK(oracle::rel_error(g.proj.data(), fd) < 1e-6);
  CHECK_THROWS_AS(m.forward(std::vector<Token>{1, 2}), ShapeError);
}

TEST_CASE("masked rows receive exactly zero gradient") {
  ModelShape s = tiny();
  s.d_base = 1;
  s.d_max = 3;
  Rng rng(1);
  DynamicModel m(s, 1e-3, 4);
  const auto batch = checks::random_batch(s, 5, rng);
  const Gradients g = m.compute_gradients(batch);
  CHECK(checks::masked_gradients_zero(m, g));
  const auto hidden = m.forward(batch[0].tokens).hidden;
  CHECK(hidden[1] == 0.0);
  CHECK(hidden[2] == 0.0);
}

TEST_CASE("sigma zero expansion leaves logits bitwise unchanged") {
  DynamicModel m(tiny(), 1e-3, 8);
  Rng rng(2);
  const std::vector<Token> probe{2, 1};
  const Vector before = m.forward(probe).logits;
  const ExpansionEvent ev = m.expand(0.0, rng);
  CHECK(ev.d_before == 2);
  CHECK(ev.d_after == 3);
  CHECK(m.d_active() == 3);
  CHECK(m.forward(probe).logits == before);
}

TEST_CASE("expansion reinitializes one row and clears its Adam moments") {
  ModelShape s = tiny();
  Rng data(3);
  DynamicModel m(s, 1e-2, 8);
  m.set_active(3);
  for (int i = 0; i < 5; ++i) m.train_step(checks::random_batch(s, 4, data));
  m.set_active(2);
  const Matrix proj_before = m.proj();
  CHECK(m.proj_optimizer().m(2, 0) != 0.0);
  Rng rng(4);
  m.expand(0.01, rng);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < s.d_emb; ++c) CHECK(m.proj()(r, c) == proj_before(r, c));
  }
  for (std::size_t c = 0; c < s.d_emb; ++c) {
    CHECK(m.proj()(2, c) != proj_before(2, c));
    CHECK(std::abs(m.proj()(2, c)) < 0.1);
    CHECK(m.proj_optimizer().m(2, c) == 0.0);
    CHECK(m.proj_optimizer().v(2, c) == 0.0);
  }
  CHECK(m.proj_optimizer().m(0, 0) != 0.0);
}

TEST_CASE("expanding at capacity throws and leaves the model untouched") {
  DynamicModel m(tiny(), 1e-3, 1);
  Rng rng(1);
  m.expand(0.01, rng);
  const Matrix proj = m.proj();
  CHECK_THROWS_AS(m.expand(0.01, rng), CapacityExhausted);
  CHECK(m.d_active() == 3);
  CHECK(m.proj() == proj);
}

TEST_CASE("ablation zeroes the chosen hidden dimensions") {
  DynamicModel m(tiny(), 1e-3, 6);
  Rng rng(1);
  m.expand(0.5, rng);
  const std::vector<Token> probe{0, 3};
  CHECK(m.forward_ablated(probe, {}) == m.forward(probe).logits);
  const Vector hidden = m.forward(probe).hidden;
  const Vector ablated = m.forward_ablated(probe, AblationMask{{2}});
  for (std::size_t c = 0; c < m.num_classes(); ++c) {
    double expect = 0.0;
    for (std::size_t i = 0; i < 2; ++i) expect += m.head()(c, i) * hidden[i];
    CHECK(ablated[c] == doctest::Approx(expect));
  }
  CHECK_THROWS_AS(m.forward_ablated(probe, AblationMask{{3}}), InvalidAblation);
}

TEST_CASE("token validation") {
  DynamicModel m(tiny(), 1e-3, 1);
  CHECK_THROWS_AS(m.forward(std::vector<Token>{1, 9}), IndexError);
  CHECK_THROWS_AS(m.forward(std::vector<Token>{1}), ShapeError);
}

TEST_CASE("a training step lowers the loss on a fixed batch") {
  ModelShape s = tiny();
  Rng rng(12);
  DynamicModel m(s, 1e-2, 3);
  const auto batch = checks::random_batch(s, 6, rng);
  const double first = m.train_step(batch);
  for (int i = 0; i < 50; ++i) m.train_step(batch);
  CHECK(m.loss(batch) < first);
}

TEST_CASE("checkpoint round-trips weights at float32 precision") {
  DynamicModel m(tiny(), 1e-3, 10);
  Rng rng(1);
  m.expand(0.3, rng);
  const auto path = temp_file("lace_ckpt_test.bin");
  m.save(path);
  const DynamicModel back = DynamicModel::load(path);
  CHECK(back.d_active() == m.d_active());
  CHECK(back.d_base() == m.d_base());
  CHECK(back.shape().seq_len == 32);
  for (std::size_t i = 0; i < m.proj().size(); ++i) {
    CHECK(back.proj().data()[i] == static_cast<double>(static_cast<float>(m.proj().data()[i])));
  }
  const auto again = temp_file("lace_ckpt_test2.bin");
  back.save(again);
  std::ifstream a(path, std::ios::binary), b(again, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  std::filesystem::remove(path);
  std::filesystem::remove(again);
}

TEST_CASE("checkpoint errors cite the failure") {
  const auto path = temp_file("lace_ckpt_bad.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_AS(DynamicModel::load(path), FormatError);
  DynamicModel m(tiny(), 1e-3, 1);
  m.save(path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  try {
    DynamicModel::load(path);
    FAIL("truncated checkpoint loaded");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  std::filesystem::remove(path);
}
