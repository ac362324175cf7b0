#include <doctest.h>

#include <oracles.hpp>

#include "vmflow/cat_model.hpp"
#include "vmflow/error.hpp"
#include "vmflow/ops.hpp"

using namespace vmflow;

namespace {

ModelDims tiny() {
  ModelDims d;
  d.token_dim = 3;
  d.sample_len = 6;
  d.cond_dim = 4;
  d.cond_len = 2;
  d.latent_dim = 5;
  d.latent_tokens = 1;
  d.width = 16;
  d.heads = 2;
  d.blocks = 2;
  d.mlp_ratio = 2;
  d.time_freqs = 4;
  d.disp_layer = 1;
  d.phi_hidden = 8;
  return d;
}

struct Fixture {
  ModelDims d = tiny();
  Rng init{21};
  CatModel model{d, init};
  Rng rng{22};
  std::size_t batch = 3;
  Tensor c = Tensor::randn({3, 2, 4}, rng);
  Tensor h = Tensor::randn({3, 1, 5}, rng);
  Tensor x = Tensor::randn({3, 6, 3}, rng);
  Tensor z = Tensor::randn({3, 6, 3}, rng);
  Tensor t = Tensor::from_data({3}, {0.9f, 0.5f, 0.3f});
  Tensor r = Tensor::from_data({3}, {0.1f, 0.5f, 0.0f});

  ThetaInputs inputs(const AttentionMask& m, const Tensor& xp_source) const {
    ThetaInputs in;
    in.c = c;
    in.h = m.latent_len ? h : Tensor();
    if (m.visible_len) in.x_p = ops::slice(xp_source, 1, 0, m.visible_len);
    in.z = z;
    in.t = t;
    in.r = r;
    return in;
  }
};

}  // namespace

TEST_CASE("inference layout: no h, no x_p") {
  Fixture f;
  const auto m = build_mask(6, 2, 0, single_group(6));
  ThetaInputs in;
  in.c = f.c;
  in.z = f.z;
  in.t = Tensor::full({3}, 1.0f);
  in.r = Tensor::full({3}, 0.0f);
  const auto out = f.model.forward(in, m);
  CHECK(out.u.shape() == Shape{3, 6, 3});
  CHECK(out.hidden.shape() == Shape{3, 6 * 16});
  for (float v : out.u.data()) CHECK(std::isfinite(v));
}

TEST_CASE("forward is deterministic and reproducible from the seed") {
  Fixture a, b;
  const auto m = build_mask(6, 2, 1, split_from_sizes({2, 3, 1}));
  const auto ua = a.model.forward(a.inputs(m, a.x), m).u.to_vector();
  CHECK(ua == a.model.forward(a.inputs(m, a.x), m).u.to_vector());
  CHECK(ua == b.model.forward(b.inputs(m, b.x), m).u.to_vector());
}

TEST_CASE("x_p columns blocked for every row: x_p changes nothing") {
  Fixture f;
  auto m = build_mask(6, 2, 1, split_from_sizes({2, 3, 1}));
  const std::size_t seq = m.seq_len();
  for (std::size_t r = 0; r < seq; ++r)
    for (std::size_t c = m.visible_offset(); c < m.sample_offset(); ++c) m.blocked[r * seq + c] = 1;
  Rng rng(5);
  const Tensor other = Tensor::randn({3, 6, 3}, rng, 10.0f);
  CHECK(f.model.forward(f.inputs(m, f.x), m).u.to_vector() == f.model.forward(f.inputs(m, other), m).u.to_vector());
}

TEST_CASE("perturbing an x_p group reaches exactly the z groups allowed to see it") {
  Fixture f;
  const auto split = split_from_sizes({1, 2, 2, 1});
  const auto m = build_mask(6, 2, 1, split);
  const auto base = f.model.forward(f.inputs(m, f.x), m).u.to_vector();
  for (std::size_t j = 0; j + 1 < split.groups(); ++j) {
    std::vector<float> xv = f.x.to_vector();
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t p = split.cumsum[j]; p < split.cumsum[j + 1]; ++p)
        for (std::size_t k = 0; k < 3; ++k) xv[(b * 6 + p) * 3 + k] += 5.0f;
    const auto out = f.model.forward(f.inputs(m, Tensor::from_data({3, 6, 3}, xv)), m).u.to_vector();
    for (std::size_t i = 0; i < split.groups(); ++i) {
      bool changed = false;
      for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t p = split.cumsum[i]; p < split.cumsum[i + 1]; ++p)
          for (std::size_t k = 0; k < 3; ++k) changed = changed || out[(b * 6 + p) * 3 + k] != base[(b * 6 + p) * 3 + k];
      CAPTURE(j);
      CAPTURE(i);
      CHECK(changed == (j < i));
    }
  }
}

TEST_CASE("z tokens in different groups do not see each other") {
  Fixture f;
  const auto split = split_from_sizes({3, 3});
  const auto m = build_mask(6, 2, 1, split);
  auto in = f.inputs(m, f.x);
  const auto base = f.model.forward(in, m).u.to_vector();
  std::vector<float> zv = f.z.to_vector();
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t k = 0; k < 3; ++k) zv[(b * 6 + 5) * 3 + k] -= 3.0f;
  in.z = Tensor::from_data({3, 6, 3}, zv);
  const auto out = f.model.forward(in, m).u.to_vector();
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t k = 0; k < 3; ++k) CHECK(out[(b * 6 + p) * 3 + k] == base[(b * 6 + p) * 3 + k]);
}

TEST_CASE("dropping every condition equals the null-condition branch") {
  Fixture f;
  const auto m = build_mask(6, 2, 0, single_group(6));
  ThetaInputs a;
  a.c = f.c;
  a.drop_condition = {1, 1, 1};
  a.z = f.z;
  a.t = f.t;
  a.r = f.r;
  ThetaInputs b = a;
  b.c = Tensor();
  b.drop_condition.clear();
  CHECK(f.model.forward(a, m).u.to_vector() == f.model.forward(b, m).u.to_vector());
  ThetaInputs keep = a;
  keep.drop_condition = {0, 0, 0};
  ThetaInputs plain = a;
  plain.drop_condition.clear();
  CHECK(f.model.forward(keep, m).u.to_vector() == f.model.forward(plain, m).u.to_vector());
}

TEST_CASE("time embedding") {
  Fixture f;
  const auto e1 = f.model.embed_time(Tensor::from_data({1}, {0.5f}), Tensor::from_data({1}, {0.25f})).to_vector();
  const auto e2 = f.model.embed_time(Tensor::from_data({1}, {0.25f}), Tensor::from_data({1}, {0.5f})).to_vector();
  CHECK(e1 != e2);
  const auto same = f.model.embed_time(Tensor::from_data({1}, {0.4f}), Tensor::from_data({1}, {0.4f}));
  for (float v : same.data()) CHECK(std::isfinite(v));
  CHECK(f.model.embed_time(Tensor::from_data({1}, {1.0f}), Tensor::from_data({1}, {0.0f})).shape() == Shape{1, 16});
  CHECK_THROWS_AS(f.model.embed_time(Tensor::from_data({1}, {1.5f}), Tensor::from_data({1}, {0.0f})), Error);
  CHECK_THROWS_AS(f.model.embed_time(Tensor::from_data({1}, {0.5f}), Tensor::from_data({1}, {-0.1f})), Error);
}

TEST_CASE("layout errors") {
  Fixture f;
  const auto m = build_mask(6, 2, 1, split_from_sizes({2, 4}));
  auto in = f.inputs(m, f.x);
  in.h = Tensor();
  CHECK_THROWS_AS(f.model.forward(in, m), Error);
  auto empty = f.inputs(m, f.x);
  empty.z = Tensor::zeros({3, 0, 3});
  CHECK_THROWS_AS(f.model.forward(empty, m), Error);
  auto order = f.inputs(m, f.x);
  order.r = Tensor::full({3}, 0.95f);
  CHECK_THROWS_AS(f.model.forward(order, m), Error);
}

TEST_CASE("parameter names and shapes") {
  Fixture f;
  for (const auto& e : f.model.params().entries()) CHECK(e.name.rfind("theta/", 0) == 0);
  CHECK(f.model.params().get("theta/c_null").shape() == Shape{2, 4});
  ModelDims bad = tiny();
  bad.heads = 3;
  Rng rng(1);
  CHECK_THROWS_AS(CatModel(bad, rng), Error);
}
