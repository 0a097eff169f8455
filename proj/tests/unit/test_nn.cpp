#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "ddosnet/errors.hpp"
#include "ddosnet/nn.hpp"
#include "ddosnet/rng.hpp"

using namespace ddosnet;
using doctest::Approx;

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  CHECK(Rng::derive(1, 0) != Rng::derive(1, 1));
  CHECK(Rng::derive(1, 0) != Rng::derive(2, 0));
}

TEST_CASE("rng uniform and below stay in range") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7u);
  }
}

TEST_CASE("rng normal has roughly unit moments") {
  Rng rng(11);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(s / n == Approx(0.0).epsilon(0.01));
  CHECK(s2 / n == Approx(1.0).epsilon(0.01));
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(9);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("relu examples") {
  const Vector x{-1.0, 0.0, 2.0};
  CHECK(nn::relu(x) == Vector{0.0, 0.0, 2.0});
  CHECK(nn::relu_grad(x) == Vector{0.0, 0.0, 1.0});
}

TEST_CASE("relu is idempotent") {
  Rng rng(1);
  Vector x(100);
  for (double& v : x) v = rng.uniform(-5, 5);
  const auto once = nn::relu(x);
  CHECK(nn::relu(once) == once);
}

TEST_CASE("softmax examples") {
  auto p = nn::softmax(Vector{0.0, 0.0});
  CHECK(p[0] == Approx(0.5));
  CHECK(p[1] == Approx(0.5));
  for (double c : {-7.0, 0.0, 3.5, 200.0}) {
    p = nn::softmax(Vector{c, c + std::log(3.0)});
    CHECK(p[0] == Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == Approx(0.75).epsilon(1e-12));
  }
  p = nn::softmax(Vector{1000.0, 0.0});
  CHECK(std::isfinite(p[0]));
  CHECK(p[0] == Approx(1.0));
  CHECK(p[1] == Approx(0.0));
}

TEST_CASE("cross-entropy examples") {
  CHECK(nn::categorical_crossentropy(Vector{1.0, 0.0}, Vector{1.0, 0.0}) == Approx(0.0));
  CHECK(nn::categorical_crossentropy(Vector{0.5, 0.5}, Vector{1.0, 0.0}) ==
        Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(nn::categorical_crossentropy(Vector{0.0, 1.0}, Vector{1.0, 0.0}) ==
        Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK_THROWS_AS(nn::categorical_crossentropy(Vector{1.0}, Vector{1.0, 0.0}), DataError);
}

TEST_CASE("mse examples") {
  CHECK(nn::mse(Vector{1.0, 2.0}, Vector{1.0, 2.0}) == 0.0);
  CHECK(nn::mse(Vector{0.0, 0.0}, Vector{1.0, 1.0}) == 1.0);
  Rng rng(2);
  Vector a(9), b(9);
  for (std::size_t i = 0; i < 9; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  CHECK(nn::mse(a, b) == nn::mse(b, a));
}

TEST_CASE("adam with zero gradient from a fresh state keeps params") {
  Vector p{1.0, -2.0};
  nn::AdamState st(2);
  const Vector before = p;
  CHECK(nn::adam_step(p, Vector{0.0, 0.0}, st, 0.01) == nn::AdamStatus::Applied);
  CHECK(p == before);
}

TEST_CASE("adam with zero gradient decays moments and coasts on momentum") {
  Vector p{1.0, -2.0};
  nn::AdamState st(2);
  st.first_moment = {0.5, -0.5};
  st.second_moment = {0.25, 0.25};
  CHECK(nn::adam_step(p, Vector{0.0, 0.0}, st, 0.01) == nn::AdamStatus::Applied);
  CHECK(st.first_moment[0] == Approx(0.45));
  CHECK(st.second_moment[1] == Approx(0.24975));
  CHECK(p[0] < 1.0);
  CHECK(p[1] > -2.0);
}

TEST_CASE("adam with lr 0 leaves params bitwise unchanged") {
  Rng rng(4);
  Vector p(20), g(20);
  for (std::size_t i = 0; i < 20; ++i) {
    p[i] = rng.normal();
    g[i] = rng.normal();
  }
  const Vector before = p;
  nn::AdamState st(20);
  for (int k = 0; k < 5; ++k) nn::adam_step(p, g, st, 0.0);
  CHECK(p == before);
}

TEST_CASE("adam first step moves by -sign(g) * lr") {
  // t=1: m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps).
  const double lr = 1e-3;
  Vector p{0.0, 0.0, 0.0};
  const Vector g{3.0, -0.2, 1e-3};
  nn::AdamState st(3);
  nn::adam_step(p, g, st, lr);
  for (std::size_t i = 0; i < 3; ++i) {
    const double expected = -lr * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(p[i] == Approx(expected).epsilon(1e-12));
    CHECK(p[i] == Approx(-lr * (g[i] > 0 ? 1 : -1)).epsilon(1e-4));
  }
}

TEST_CASE("adam is deterministic and skips non-finite gradients") {
  Vector p1{0.3, 0.4}, p2{0.3, 0.4};
  nn::AdamState s1(2), s2(2);
  nn::adam_step(p1, Vector{0.1, -0.7}, s1, 0.01);
  nn::adam_step(p2, Vector{0.1, -0.7}, s2, 0.01);
  CHECK(p1 == p2);
  CHECK(s1.first_moment == s2.first_moment);

  const Vector before = p1;
  const auto steps = s1.step_count;
  CHECK(nn::adam_step(p1, Vector{std::numeric_limits<double>::quiet_NaN(), 0.0}, s1, 0.01) ==
        nn::AdamStatus::SkippedNonFinite);
  CHECK(p1 == before);
  CHECK(s1.step_count == steps);
}

TEST_CASE("finite differences") {
  const auto g = nn::finite_diff_grad([](std::span<const double> p) { return p[0] * p[0]; },
                                      Vector{3.0}, 1e-5);
  CHECK(std::abs(g[0] - 6.0) < 1e-6);

  const Vector s{2.0, -1.5, 0.25};
  const auto lin = nn::finite_diff_grad(
      [&](std::span<const double> p) { return s[0] * p[0] + s[1] * p[1] + s[2] * p[2] + 4.0; },
      Vector{0.1, 0.2, 0.3}, 1e-5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(lin[i] == Approx(s[i]).epsilon(1e-9));
}

TEST_CASE("glorot init") {
  Rng r1(1), r2(1);
  CHECK(nn::init_weights(2, 3, r1) == nn::init_weights(2, 3, r2));
  Rng rng(4);
  const auto w = nn::init_weights(64, 32, rng);
  const double bound = std::sqrt(6.0 / 96.0);
  CHECK(bound == Approx(0.25));
  for (double v : w.values()) CHECK(std::abs(v) <= bound);
  const auto z = nn::init_weights(5, 4, rng, nn::InitScheme::Zeros);
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("activation names") {
  CHECK(nn::parse_activation("tanh") == nn::Activation::Tanh);
  CHECK(nn::activation_name(nn::Activation::ReLU) == "relu");
  CHECK_THROWS_AS(nn::parse_activation("gelu"), ConfigError);
}
