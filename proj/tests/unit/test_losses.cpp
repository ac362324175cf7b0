#include <doctest.h>

#include <cmath>
#include <limits>
#include <oracles.hpp>

#include "vmflow/error.hpp"
#include "vmflow/losses.hpp"
#include "vmflow/ops.hpp"

using namespace vmflow;
namespace o = oracle;

namespace {

double kl_ref(const std::vector<float>& mu, const std::vector<float>& lv, std::size_t batch) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    s += 0.5 * (std::exp(static_cast<double>(lv[i])) + static_cast<double>(mu[i]) * mu[i] - 1.0 - lv[i]);
  return s / static_cast<double>(batch);
}

double disp_ref(const std::vector<float>& z, std::size_t b, std::size_t f, double tau) {
  double s = 0.0;
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < f; ++k) {
        const double d = static_cast<double>(z[i * f + k]) - z[j * f + k];
        d2 += d * d;
      }
      s += std::exp(-d2 / tau);
    }
  return std::log(s / static_cast<double>(b * b));
}

}  // namespace

TEST_CASE("KL examples") {
  CHECK(kl_loss(Tensor::zeros({4, 3}), Tensor::zeros({4, 3})).item() == 0.0f);
  CHECK(kl_loss(Tensor::full({1, 1}, 1.0f), Tensor::zeros({1, 1})).item() == doctest::Approx(0.5));
  CHECK(kl_loss(Tensor::full({2, 5}, 1.0f), Tensor::zeros({2, 5})).item() == doctest::Approx(2.5));
  CHECK(kl_loss(Tensor::zeros({1, 1}), Tensor::full({1, 1}, std::log(2.0f))).item() ==
        doctest::Approx(0.5 * (2.0 - 1.0 - std::log(2.0))).epsilon(1e-6));
  CHECK_THROWS_AS(kl_loss(Tensor::zeros({2}), Tensor::zeros({3})), Error);
  CHECK_THROWS_AS(kl_loss(Tensor::full({1}, std::numeric_limits<float>::quiet_NaN()), Tensor::zeros({1})), Error);
}

TEST_CASE("KL is non-negative and matches the formula on random inputs") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu = o::random_vec(12, rng, 2.0f), lv = o::random_vec(12, rng, 3.0f);
    const float v = kl_loss(Tensor::from_data({3, 4}, mu), Tensor::from_data({3, 4}, lv)).item();
    REQUIRE(v >= 0.0f);
    CHECK(v == doctest::Approx(kl_ref(mu, lv, 3)).epsilon(1e-5));
  }
  CHECK(kl_loss(Tensor::zeros({3}), Tensor::full({3}, 1e-8f)).item() >= 0.0f);
}

TEST_CASE("dispersive examples") {
  CHECK(dispersive_loss(Tensor::full({5, 3}, 0.7f), 1.0f).item() == 0.0f);
  // two rows at squared distance tau
  const Tensor z = Tensor::from_data({2, 2}, {0.0f, 0.0f, 1.0f, 1.0f});
  CHECK(dispersive_loss(z, 2.0f).item() == doctest::Approx(std::log((2.0 + 2.0 * std::exp(-1.0)) / 4.0)).epsilon(1e-6));
  CHECK(std::log((2.0 + 2.0 * std::exp(-1.0)) / 4.0) == doctest::Approx(-0.3799).epsilon(1e-4));
  CHECK_THROWS_AS(dispersive_loss(z, 0.0f), Error);
  CHECK_THROWS_AS(dispersive_loss(z, -1.0f), Error);
}

TEST_CASE("dispersive is non-positive, matches the formula and never rises when rows spread") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto z = o::random_vec(b * 3, rng);
    const float tau = 0.5f + rng.uniform();
    const float v = dispersive_loss(Tensor::from_data({b, 3}, z), tau).item();
    REQUIRE(v <= 0.0f);
    CHECK(v == doctest::Approx(disp_ref(z, b, 3, tau)).epsilon(1e-4));
    if (b >= 2) {
      // scaling about the origin stretches every pairwise distance
      std::vector<float> spread(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) spread[i] = 1.5f * z[i];
      CHECK(dispersive_loss(Tensor::from_data({b, 3}, spread), tau).item() <= v + 1e-6f);
    }
  }
}

TEST_CASE("loss gradients and tangents against finite differences") {
  Rng rng(3);
  const Tensor mu = Tensor::randn({3, 4}, rng), lv = Tensor::randn({3, 4}, rng);
  auto kl = [](const std::vector<Tensor>& in) { return kl_loss(in[0], in[1]); };
  auto g = o::grad_check(kl, {mu, lv}, rng, 1e-2);
  CHECK(o::rel_error(g.analytic, g.numeric) < 1e-2);
  std::vector<std::vector<float>> dirs = {o::random_vec(12, rng), o::random_vec(12, rng)};
  CHECK(o::rel_error(o::jvp(kl, {mu, lv}, dirs), o::fd_directional(kl, {mu, lv}, dirs, 1e-3)) < 1e-2);

  const Tensor z = Tensor::randn({5, 3}, rng);
  auto disp = [](const std::vector<Tensor>& in) { return dispersive_loss(in[0], 2.0f); };
  g = o::grad_check(disp, {z}, rng, 1e-2);
  CHECK(o::rel_error(g.analytic, g.numeric) < 1e-2);
  dirs = {o::random_vec(15, rng)};
  CHECK(o::rel_error(o::jvp(disp, {z}, dirs), o::fd_directional(disp, {z}, dirs, 1e-3)) < 1e-2);
}

TEST_CASE("time sampling") {
  Rng rng(4);
  TimeSampling always;
  always.p_equal = 1.0f;
  for (int i = 0; i < 1000; ++i) {
    const auto [t, r] = sample_time_pair(always, rng);
    REQUIRE(t == r);
  }
  TimeSampling uni;
  uni.p_equal = 0.0f;
  const int n = 10000;
  std::vector<float> ts, rs;
  for (int i = 0; i < n; ++i) {
    const auto [t, r] = sample_time_pair(uni, rng);
    REQUIRE(r <= t);
    REQUIRE(r >= 0.0f);
    REQUIRE(t <= 1.0f);
    ts.push_back(t);
    rs.push_back(r);
  }
  // Order statistics of two uniforms: E[max] = 2/3, E[min] = 1/3; empirical CDFs ordered.
  double mt = 0, mr = 0;
  for (int i = 0; i < n; ++i) {
    mt += ts[i];
    mr += rs[i];
  }
  CHECK(mt / n == doctest::Approx(2.0 / 3).epsilon(0.02));
  CHECK(mr / n == doctest::Approx(1.0 / 3).epsilon(0.03));
  for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    int ct = 0, cr = 0;
    for (int i = 0; i < n; ++i) {
      ct += ts[i] <= q;
      cr += rs[i] <= q;
    }
    CHECK(ct <= cr);
  }
  TimeSampling ln;
  ln.strategy = TimeStrategy::kLogNormal;
  ln.p_equal = 0.5f;
  int equal = 0;
  for (int i = 0; i < n; ++i) {
    const auto [t, r] = sample_time_pair(ln, rng);
    REQUIRE(r > 0.0f);
    REQUIRE(t < 1.0f);
    REQUIRE(r <= t);
    equal += t == r;
  }
  CHECK(equal / static_cast<double>(n) == doctest::Approx(0.5).epsilon(0.05));
}
