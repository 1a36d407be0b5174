#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "zohfl/objectives.hpp"
#include "zohfl/oracles.hpp"

using namespace zohfl;

namespace {

DatasetShard single_sample_shard() {
  // C=2, n=1, one sample u=1 with label 0
  return make_shard({1.0}, {0}, 1, 2);
}

DatasetShard random_shard(std::uint64_t seed, int classes, std::size_t dim, std::size_t n) {
  RngStream rng(seed, 0);
  return synth_blobs(rng, classes, dim, n, 0.8);
}

}  // namespace

TEST_CASE("f1 loss values") {
  SECTION("zero weights give log C") {
    const DatasetShard s = random_shard(1, 10, 4, 30);
    const SoftmaxModel m = SoftmaxModel::zeros(10, 4);
    REQUIRE(f1_loss(m, s) == Catch::Approx(std::log(10.0)).epsilon(1e-12));
  }
  SECTION("symmetric two-class case gives log 2") {
    const DatasetShard s = single_sample_shard();
    const SoftmaxModel m{{0.0, 0.0}, 2, 1};
    REQUIRE(f1_loss(m, s) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SECTION("hand-evaluated logit gap") {
    const DatasetShard s = single_sample_shard();
    const SoftmaxModel m{{1.0, 0.0}, 2, 1};
    REQUIRE(f1_loss(m, s) == Catch::Approx(0.3132616875182228).epsilon(1e-12));
  }
  SECTION("empty shard rejected") {
    DatasetShard empty;
    empty.feature_dim = 1;
    empty.num_classes = 2;
    const SoftmaxModel m{{0.0, 0.0}, 2, 1};
    REQUIRE_THROWS_AS(f1_loss(m, empty), DataError);
  }
  SECTION("dimension mismatch rejected") {
    const DatasetShard s = single_sample_shard();
    const SoftmaxModel m = SoftmaxModel::zeros(3, 2);
    REQUIRE_THROWS_AS(f1_loss(m, s), DimensionError);
  }
  SECTION("large logits stay finite") {
    const DatasetShard s = single_sample_shard();
    const SoftmaxModel m{{5000.0, -5000.0}, 2, 1};
    REQUIRE(std::isfinite(f1_loss(m, s)));
    REQUIRE(f1_loss(m, s) >= 0.0);
  }
}

TEST_CASE("stochastic gradient") {
  const DatasetShard s = random_shard(2, 3, 5, 40);
  SoftmaxModel m = SoftmaxModel::zeros(3, 5);
  RngStream noise(9, 9);
  for (auto& w : m.weights) w = 0.3 * noise.normal();

  SECTION("full batch equals the deterministic gradient") {
    RngStream rng(1, 1);
    const Vec g = f1_stoch_grad(m, s, rng, s.num_samples);
    REQUIRE(g == f1_grad(m, s));
  }
  SECTION("matches central differences") {
    const Vec g = f1_grad(m, s);
    const Vec fd = finite_diff_grad(
        [&](const Vec& w) {
          const SoftmaxModel probe{w, m.num_classes, m.feature_dim};
          return f1_loss(probe, s);
        },
        m.weights, 1e-6);
    for (std::size_t i = 0; i < g.size(); ++i) {
      REQUIRE(g[i] == Catch::Approx(fd[i]).margin(1e-5 * std::max(1.0, std::abs(g[i]))));
    }
  }
  SECTION("batch-one draws are unbiased") {
    RngStream rng(4, 2);
    const Vec full = f1_grad(m, s);
    VecMoments acc(m.dim());
    for (int k = 0; k < 10000; ++k) acc.add(f1_stoch_grad(m, s, rng, 1));
    const Vec mean = acc.mean();
    const Vec se = acc.std_error();
    for (std::size_t i = 0; i < full.size(); ++i) {
      REQUIRE(std::abs(mean[i] - full[i]) <= 3.0 * se[i] + 1e-12);
    }
  }
  SECTION("zero batch rejected") {
    RngStream rng(1, 1);
    REQUIRE_THROWS_AS(f1_stoch_grad(m, s, rng, 0), ParameterError);
    REQUIRE_THROWS_AS(f1_stoch_grad(m, s, rng, s.num_samples + 1), ParameterError);
  }
}

TEST_CASE("local objective gradient") {
  const DatasetShard s = random_shard(5, 3, 4, 30);
  RngStream init(6, 0);
  Vec x(12), y(12);
  for (auto& v : x) v = 0.4 * init.normal();
  for (auto& v : y) v = 0.4 * init.normal();

  SECTION("prox vanishes at the anchor") {
    RngStream rng(1, 1);
    const Vec g = local_objective_grad(x, x, s, 2.5, rng, s.num_samples);
    REQUIRE(g == ce_grad(x, s));
  }
  SECTION("mu zero reduces to the data term") {
    RngStream r1(2, 2), r2(2, 2);
    const Vec a = local_objective_grad(x, y, s, 0.0, r1, 4);
    const Vec b = ce_stoch_grad(y, s, r2, 4);
    REQUIRE(a == b);
  }
  SECTION("matches central differences of the full objective") {
    const double mu = 1.7;
    RngStream rng(3, 3);
    const Vec g = local_objective_grad(x, y, s, mu, rng, s.num_samples);
    const Vec fd = finite_diff_grad(
        [&](const Vec& probe) {
          const SoftmaxModel pm{probe, 3, 4};
          return f1_loss(pm, s) + 0.5 * mu * dist_sq(x, probe);
        },
        y, 1e-6);
    for (std::size_t i = 0; i < g.size(); ++i) {
      REQUIRE(g[i] == Catch::Approx(fd[i]).margin(1e-5 * std::max(1.0, std::abs(g[i]))));
    }
  }
  SECTION("strong convexity witness") {
    const double mu = 0.9;
    RngStream rng(8, 8);
    for (int trial = 0; trial < 50; ++trial) {
      Vec y1(12), y2(12);
      for (auto& v : y1) v = rng.normal();
      for (auto& v : y2) v = rng.normal();
      RngStream r1(1, 1), r2(1, 1);
      const Vec g1 = local_objective_grad(x, y1, s, mu, r1, s.num_samples);
      const Vec g2 = local_objective_grad(x, y2, s, mu, r2, s.num_samples);
      const double inner = dot(sub(g1, g2), sub(y1, y2));
      REQUIRE(inner >= mu * dist_sq(y1, y2) - 1e-9);
    }
  }
}

TEST_CASE("penalty value") {
  SECTION("zero at equal points") { REQUIRE(penalty_value({1, 2}, {1, 2}, 3.0, 1.0) == 0.0); }
  SECTION("formula arithmetic") {
    REQUIRE(penalty_value({2.0, 0.0}, {0.0, 0.0}, 2.0, 1.0) == Catch::Approx(4.0));
  }
  SECTION("zero weight") { REQUIRE(penalty_value({9, 9}, {0, 0}, 1.0, 0.0) == 0.0); }
  SECTION("symmetry") {
    RngStream rng(4, 4);
    for (int trial = 0; trial < 100; ++trial) {
      Vec a{rng.normal(), rng.normal(), rng.normal()};
      Vec b{rng.normal(), rng.normal(), rng.normal()};
      REQUIRE(penalty_value(a, b, 1.3, 0.7) == penalty_value(b, a, 1.3, 0.7));
    }
  }
  SECTION("validation") {
    REQUIRE_THROWS_AS(penalty_value({1.0}, {1.0, 2.0}, 1.0, 1.0), DimensionError);
    REQUIRE_THROWS_AS(penalty_value({1.0}, {1.0}, -1.0, 1.0), ParameterError);
    REQUIRE_THROWS_AS(penalty_value({1.0}, {1.0}, 1.0, -0.5), ParameterError);
    // lambda zero is the degenerate no-coupling mode
    REQUIRE(penalty_value({5.0}, {1.0}, 0.0, 1.0) == 0.0);
  }
}

TEST_CASE("quadratic oracle") {
  SECTION("identity system") {
    const auto q = QuadraticProblem::make({1, 0, 0, 1}, {-1.0, -2.0});
    const Vec y = quad_solution(q, ConstraintSpec::unconstrained(), {0.0, 0.0});
    REQUIRE(y[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(y[1] == Catch::Approx(2.0).margin(1e-12));
  }
  SECTION("ball projection of the free solution") {
    const auto q = QuadraticProblem::make({1, 0, 0, 1}, {-3.0, 0.0});
    const Vec y = quad_solution(q, ConstraintSpec::ball(1.0), {0.0, 0.0});
    REQUIRE(y[0] == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(y[1] == Catch::Approx(0.0).margin(1e-9));
  }
  SECTION("diagonal system") {
    const auto q = QuadraticProblem::make({2, 0, 0, 4}, {-2.0, -4.0});
    const Vec y = quad_solution(q, ConstraintSpec::unconstrained(), {0.0, 0.0});
    REQUIRE(y[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(y[1] == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("orthant clamp for diagonal problems") {
    const auto q = QuadraticProblem::make({2, 0, 0, 4}, {3.0, -4.0});
    const Vec y = quad_solution(q, ConstraintSpec::orthant(), {0.0, 0.0});
    REQUIRE(y[0] == 0.0);
    REQUIRE(y[1] == Catch::Approx(1.0));
  }
  SECTION("orthant with coupling is unsupported") {
    const auto q = QuadraticProblem::make({2, 0.5, 0.5, 2}, {1.0, 1.0});
    REQUIRE_THROWS_AS(quad_solution(q, ConstraintSpec::orthant(), {0.0, 0.0}), OracleError);
  }
  SECTION("construction validates symmetry and definiteness") {
    REQUIRE_THROWS_AS(QuadraticProblem::make({1, 0.2, 0.3, 1}, {0.0, 0.0}), ParameterError);
    REQUIRE_THROWS_AS(QuadraticProblem::make({1, 0, 0, -1}, {0.0, 0.0}), ParameterError);
  }
  SECTION("ball solution sits on the boundary and beats feasible rivals") {
    const auto q = QuadraticProblem::make({3, 1, 0, 1, 2, 0.5, 0, 0.5, 1},
                                          {1.0, -2.0, 0.5});
    const Vec anchor{0.3, -0.1, 0.2};
    const Vec y = quad_solution(q, ConstraintSpec::ball(0.4), anchor);
    REQUIRE(dist(y, anchor) == Catch::Approx(0.4).margin(1e-9));
    RngStream rng(12, 0);
    for (int trial = 0; trial < 200; ++trial) {
      Vec z = sample_unit_ball(rng, 3);
      for (std::size_t i = 0; i < 3; ++i) z[i] = anchor[i] + 0.4 * z[i];
      REQUIRE(q.value(y) <= q.value(z) + 1e-9);
    }
  }
}

TEST_CASE("descent sanity") {
  // every loss decreases under a small full-batch gradient step
  const DatasetShard s = random_shard(13, 4, 6, 50);
  RngStream rng(14, 0);
  const double mu = 0.8;
  for (int trial = 0; trial < 20; ++trial) {
    Vec w(24), anchor(24);
    for (auto& v : w) v = rng.normal();
    for (auto& v : anchor) v = rng.normal();
    const SoftmaxModel m{w, 4, 6};
    Vec stepped = w;
    axpy(-1e-3, ce_grad(w, s), stepped);
    const SoftmaxModel m2{stepped, 4, 6};
    REQUIRE(f1_loss(m2, s) < f1_loss(m, s));

    auto local_value = [&](const Vec& y) {
      return f1_loss({y, 4, 6}, s) + 0.5 * mu * dist_sq(anchor, y);
    };
    RngStream unused(0, 0);
    Vec local_stepped = w;
    axpy(-1e-3, local_objective_grad(anchor, w, s, mu, unused, s.num_samples), local_stepped);
    REQUIRE(local_value(local_stepped) < local_value(w));
  }
}
