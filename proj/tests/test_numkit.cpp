#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "zohfl/numkit.hpp"

using namespace zohfl;

TEST_CASE("sphere sampling") {
  SECTION("dim 1 gives a sign") {
    RngStream rng(7, 0);
    for (int i = 0; i < 20; ++i) {
      const Vec v = sample_unit_sphere(rng, 1);
      REQUIRE((v[0] == 1.0 || v[0] == -1.0));
    }
  }
  SECTION("unit norm") {
    RngStream rng(42, 0);
    const Vec v = sample_unit_sphere(rng, 3);
    REQUIRE(std::abs(norm(v) - 1.0) < 1e-12);
  }
  SECTION("zero dim rejected") {
    RngStream rng(1, 1);
    REQUIRE_THROWS_AS(sample_unit_sphere(rng, 0), DimensionError);
  }
  SECTION("coordinate means vanish") {
    RngStream rng(3, 9);
    const std::size_t draws = 100000;
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const Vec v = sample_unit_sphere(rng, 2);
      m0 += v[0];
      m1 += v[1];
    }
    const double band = 3.0 / std::sqrt(static_cast<double>(draws));
    REQUIRE(std::abs(m0 / draws) < band);
    REQUIRE(std::abs(m1 / draws) < band);
  }
  SECTION("covariance is I/n") {
    RngStream rng(11, 2);
    const std::size_t dim = 4, draws = 100000;
    std::vector<double> cov(dim * dim, 0.0);
    for (std::size_t s = 0; s < draws; ++s) {
      const Vec v = sample_unit_sphere(rng, dim);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) cov[i * dim + j] += v[i] * v[j];
    }
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double want = (i == j) ? 0.25 : 0.0;
        REQUIRE(std::abs(cov[i * dim + j] / draws - want) < 0.01);
      }
    }
  }
}

TEST_CASE("ball sampling") {
  SECTION("support") {
    RngStream rng(5, 0);
    for (int i = 0; i < 2000; ++i) {
      REQUIRE(norm(sample_unit_ball(rng, 3)) <= 1.0 + 1e-15);
    }
  }
  SECTION("dim 1 mean magnitude is one half") {
    RngStream rng(6, 0);
    double acc = 0.0;
    const std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) acc += std::abs(sample_unit_ball(rng, 1)[0]);
    REQUIRE(std::abs(acc / draws - 0.5) < 0.02);
  }
  SECTION("dim 2 radial cdf at one half") {
    RngStream rng(8, 0);
    const std::size_t draws = 100000;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < draws; ++i) {
      if (norm(sample_unit_ball(rng, 2)) <= 0.5) ++inside;
    }
    REQUIRE(std::abs(double(inside) / draws - 0.25) < 0.02);
  }
  SECTION("zero dim rejected") {
    RngStream rng(1, 1);
    REQUIRE_THROWS_AS(sample_unit_ball(rng, 0), DimensionError);
  }
}

TEST_CASE("projection") {
  const Vec anchor{0.0, 0.0};
  SECTION("unconstrained identity") {
    const Vec p{3.5, -2.0};
    REQUIRE(project(p, ConstraintSpec::unconstrained(), anchor) == p);
  }
  SECTION("ball radial scaling") {
    const Vec p{3.0, 0.0};
    const Vec q = project(p, ConstraintSpec::ball(1.0), anchor);
    REQUIRE(q[0] == Catch::Approx(1.0));
    REQUIRE(q[1] == Catch::Approx(0.0));
  }
  SECTION("orthant clamp") {
    const Vec q = project({-2.0, 3.0}, ConstraintSpec::orthant(), anchor);
    REQUIRE(q == Vec{0.0, 3.0});
  }
  SECTION("dimension mismatch") {
    REQUIRE_THROWS_AS(project({1.0, 2.0, 3.0}, ConstraintSpec::orthant(), anchor),
                      DimensionError);
  }
  SECTION("bad radius") { REQUIRE_THROWS_AS(ConstraintSpec::ball(0.0), ParameterError); }

  SECTION("idempotence and nonexpansiveness") {
    RngStream rng(100, 0);
    const std::vector<ConstraintSpec> specs = {ConstraintSpec::unconstrained(),
                                               ConstraintSpec::ball(0.7),
                                               ConstraintSpec::orthant()};
    const Vec c{0.5, -0.25, 0.1};
    for (int trial = 0; trial < 1000; ++trial) {
      Vec a(3), b(3);
      for (auto& x : a) x = 2.0 * rng.normal();
      for (auto& x : b) x = 2.0 * rng.normal();
      for (const auto& spec : specs) {
        const Vec pa = project(a, spec, c);
        REQUIRE(dist(project(pa, spec, c), pa) <= 1e-12);
        REQUIRE(dist(pa, project(b, spec, c)) <= dist(a, b) + 1e-12);
        REQUIRE(is_feasible(pa, spec, c));
      }
    }
  }
  SECTION("feasible points map to themselves") {
    RngStream rng(101, 0);
    const Vec c{0.0, 0.0};
    for (int trial = 0; trial < 200; ++trial) {
      Vec a{rng.normal(), rng.normal()};
      const Vec inside = scaled(0.49 / std::max(1.0, norm(a)), a);
      REQUIRE(project(inside, ConstraintSpec::ball(0.5), c) == inside);
    }
  }
}

TEST_CASE("dirichlet") {
  SECTION("degenerate simplex") {
    RngStream rng(1, 2);
    const Vec p = dirichlet(rng, 3.0, 1);
    REQUIRE(p.size() == 1);
    REQUIRE(p[0] == 1.0);
  }
  SECTION("sums to one") {
    RngStream rng(2, 3);
    for (double alpha : {0.1, 1.0, 1000.0}) {
      const Vec p = dirichlet(rng, alpha, 10);
      double s = 0.0;
      for (double x : p) {
        REQUIRE(x >= 0.0);
        s += x;
      }
      REQUIRE(std::abs(s - 1.0) < 1e-12);
    }
  }
  SECTION("large alpha concentrates near uniform") {
    RngStream rng(4, 4);
    for (int draw = 0; draw < 100; ++draw) {
      const Vec p = dirichlet(rng, 1000.0, 10);
      REQUIRE(*std::max_element(p.begin(), p.end()) < 0.2);
    }
  }
  SECTION("small alpha is sparse") {
    RngStream rng(5, 5);
    std::vector<double> maxima;
    for (int draw = 0; draw < 100; ++draw) {
      const Vec p = dirichlet(rng, 0.1, 10);
      maxima.push_back(*std::max_element(p.begin(), p.end()));
    }
    std::nth_element(maxima.begin(), maxima.begin() + 50, maxima.end());
    REQUIRE(maxima[50] > 0.5);
  }
  SECTION("bad alpha rejected") {
    RngStream rng(1, 1);
    REQUIRE_THROWS_AS(dirichlet(rng, 0.0, 4), ParameterError);
    REQUIRE_THROWS_AS(dirichlet(rng, -1.0, 4), ParameterError);
  }
}

TEST_CASE("stream determinism") {
  SECTION("equal ids replay bitwise") {
    RngStream a(123, 456), b(123, 456);
    for (int i = 0; i < 1000; ++i) {
      switch (i % 4) {
        case 0: REQUIRE(a.next_u64() == b.next_u64()); break;
        case 1: REQUIRE(a.uniform() == b.uniform()); break;
        case 2: REQUIRE(a.normal() == b.normal()); break;
        default: REQUIRE(a.gamma(0.5 + i % 7) == b.gamma(0.5 + i % 7)); break;
      }
    }
  }
  SECTION("different stream ids decorrelate") {
    RngStream a(123, 456), b(123, 457);
    int same = 0;
    for (int i = 0; i < 64; ++i) {
      if (a.next_u64() == b.next_u64()) ++same;
    }
    REQUIRE(same == 0);
  }
  SECTION("copying a stream replays its future") {
    RngStream a(9, 9);
    a.normal();
    RngStream b = a;
    for (int i = 0; i < 100; ++i) REQUIRE(a.uniform() == b.uniform());
  }
  SECTION("derive_stream separates roles") {
    REQUIRE(derive_stream(StreamRole::ClientPlus, 1, 2) !=
            derive_stream(StreamRole::ClientMinus, 1, 2));
    REQUIRE(derive_stream(StreamRole::ClientPlus, 1, 2) !=
            derive_stream(StreamRole::ClientPlus, 2, 1));
  }
}

TEST_CASE("gamma sampler moments") {
  // E[Gamma(a)] = a, Var = a; checked at one small and one large shape
  for (double alpha : {0.4, 6.0}) {
    RngStream rng(77, static_cast<std::uint64_t>(alpha * 10));
    const std::size_t draws = 200000;
    double mean = 0.0;
    for (std::size_t i = 0; i < draws; ++i) mean += rng.gamma(alpha);
    mean /= draws;
    const double se = std::sqrt(alpha / draws);
    REQUIRE(std::abs(mean - alpha) < 5.0 * se);
  }
}
