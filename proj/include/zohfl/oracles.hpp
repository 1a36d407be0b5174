#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zohfl/local_solver.hpp"
#include "zohfl/numkit.hpp"
#include "zohfl/objectives.hpp"
#include "zohfl/smoothing.hpp"

namespace zohfl {

struct OracleReport {
  std::string name;
  std::vector<double> observed;
  std::vector<double> expected;
  double tolerance = 0.0;
  bool pass = false;
};

inline OracleReport make_report(std::string name, std::vector<double> observed,
                                std::vector<double> expected, double tolerance) {
  OracleReport r{std::move(name), std::move(observed), std::move(expected), tolerance, true};
  if (r.observed.size() != r.expected.size()) {
    r.pass = false;
    return r;
  }
  for (std::size_t i = 0; i < r.observed.size(); ++i) {
    if (!(std::abs(r.observed[i] - r.expected[i]) <= r.tolerance)) r.pass = false;
  }
  return r;
}

inline nlohmann::json report_to_json(const OracleReport& r) {
  return {{"check", r.name},
          {"observed", r.observed},
          {"expected", r.expected},
          {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

inline void write_reports(std::ostream& out, const std::vector<OracleReport>& reports) {
  for (const auto& r : reports) out << report_to_json(r).dump() << '\n';
}

// ---------------------------------------------------------------------------
// The ReLU bilevel example: upper level 0.5||x + 1 - y(x)||^2 with the
// closed-form lower-level solution y(x) = max(x, 0). Nonsmooth wherever a
// coordinate of x is zero.

inline double relu_bilevel_implicit(const Vec& x) {
  double s = 0.0;
  for (double xi : x) {
    const double resid = xi + 1.0 - std::max(xi, 0.0);
    s += resid * resid;
  }
  return 0.5 * s;
}

// Runs the projected-SGD solver (noiseless, full gradient of 0.5||y - x||^2)
// over the nonnegative orthant and compares the resulting implicit value
// against the closed form. With init = x the first projected step lands on
// max(x, 0) exactly, so the bound below is a machine-precision one.
inline OracleReport check_bilevel_pipeline(const Vec& x, std::size_t budget) {
  if (budget == 0) throw ParameterError("check_bilevel_pipeline: budget must be >= 1");
  const LocalSchedule schedule{1.0, 1.0};
  const auto report = local_solve_with(
      x, x, [&](const Vec& y) { return sub(y, x); }, ConstraintSpec::orthant(), schedule, budget);
  double observed = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double resid = x[i] + 1.0 - report.final_iterate[i];
    observed += 0.5 * resid * resid;
  }
  const double expected = relu_bilevel_implicit(x);
  const double scale = std::max(1.0, std::abs(expected));
  return make_report("relu_bilevel_pipeline", {observed}, {expected}, 1e-10 * scale);
}

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h.
template <typename F>
Vec finite_diff_grad(F&& f, const Vec& x, double h) {
  if (!(h > 0.0)) throw ParameterError("finite_diff_grad: h must be > 0");
  Vec g(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// The `validate` battery. Each check compares an implementation path against
// an independent ground truth; Monte Carlo checks use 3*SE bands computed
// from the sample variance.

inline std::vector<OracleReport> run_validation_battery(std::uint64_t seed = 20240901) {
  std::vector<OracleReport> reports;
  auto stream = [&](std::uint64_t tag) {
    return RngStream(seed, derive_stream(StreamRole::Generic, tag, 0));
  };

  // projection: idempotence and nonexpansiveness over random points
  {
    RngStream rng = stream(1);
    const std::vector<ConstraintSpec> specs = {ConstraintSpec::unconstrained(),
                                               ConstraintSpec::ball(1.3),
                                               ConstraintSpec::orthant()};
    double worst_idem = 0.0, worst_nonexp = 0.0;
    const Vec anchor(6, 0.25);
    for (int trial = 0; trial < 1000; ++trial) {
      Vec a(6), b(6);
      for (auto& x : a) x = 3.0 * rng.normal();
      for (auto& x : b) x = 3.0 * rng.normal();
      for (const auto& spec : specs) {
        const Vec pa = project(a, spec, anchor);
        const Vec paa = project(pa, spec, anchor);
        worst_idem = std::max(worst_idem, dist(pa, paa));
        const Vec pb = project(b, spec, anchor);
        worst_nonexp = std::max(worst_nonexp, dist(pa, pb) - dist(a, b));
      }
    }
    reports.push_back(make_report("projection_idempotent", {worst_idem}, {0.0}, 1e-12));
    reports.push_back(make_report("projection_nonexpansive", {worst_nonexp}, {0.0}, 1e-12));
  }

  // sphere sampler: norms exact, covariance ~= I/n
  {
    RngStream rng = stream(2);
    const std::size_t dim = 4, draws = 100000;
    double worst_norm = 0.0;
    std::vector<double> cov(dim * dim, 0.0);
    for (std::size_t s = 0; s < draws; ++s) {
      const Vec v = sample_unit_sphere(rng, dim);
      worst_norm = std::max(worst_norm, std::abs(norm(v) - 1.0));
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) cov[i * dim + j] += v[i] * v[j];
    }
    double worst_cov = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double want = (i == j) ? 1.0 / static_cast<double>(dim) : 0.0;
        worst_cov = std::max(worst_cov,
                             std::abs(cov[i * dim + j] / static_cast<double>(draws) - want));
      }
    }
    reports.push_back(make_report("sphere_unit_norm", {worst_norm}, {0.0}, 1e-12));
    reports.push_back(make_report("sphere_covariance", {worst_cov}, {0.0}, 0.01));
  }

  // ball sampler: support and radial law
  {
    RngStream rng = stream(3);
    const std::size_t draws = 100000;
    double worst = 0.0;
    std::size_t inside_half = 0;
    for (std::size_t s = 0; s < draws; ++s) {
      const Vec u = sample_unit_ball(rng, 2);
      const double r = norm(u);
      worst = std::max(worst, r);
      if (r <= 0.5) ++inside_half;
    }
    reports.push_back(make_report("ball_support", {worst <= 1.0 ? 0.0 : worst - 1.0}, {0.0}, 0.0));
    reports.push_back(make_report(
        "ball_radial_cdf_half",
        {static_cast<double>(inside_half) / static_cast<double>(draws)}, {0.25}, 0.02));
  }

  // smoothed gradient of a random SPD quadratic against the closed form
  {
    RngStream rng = stream(4);
    const std::size_t n = 5;
    std::vector<double> root(n * n);
    for (auto& x : root) x = rng.normal();
    std::vector<double> A(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += root[i * n + k] * root[j * n + k];
        A[i * n + j] = s + (i == j ? 0.5 : 0.0);
      }
    }
    Vec b(n), x(n);
    for (auto& v : b) v = rng.normal();
    for (auto& v : x) v = rng.normal();
    const SmoothingParams params{0.1, n};
    const auto exact = smoothed_quadratic_exact(A, b, x, params);
    auto f = [&](const Vec& y) {
      double q = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += A[i * n + j] * y[j];
        q += y[i] * row;
      }
      return 0.5 * q + dot(b, y);
    };
    const auto mc = smoothed_grad_mc(f, x, params, rng, 200000);
    double excess = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      excess = std::max(excess,
                        std::abs(mc.mean[i] - exact.grad[i]) - 3.0 * mc.std_error[i]);
    }
    reports.push_back(make_report("smoothed_quadratic_grad_3se", {std::max(excess, 0.0)}, {0.0}, 0.0));
  }

  // |smoothed value - value| <= L0*eta for the 1-Lipschitz f(x) = ||x||
  {
    RngStream rng = stream(5);
    const std::size_t n = 8;
    const SmoothingParams params{0.1, n};
    auto f = [](const Vec& y) { return norm(y); };
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vec x(n);
      for (auto& v : x) v = rng.normal();
      const auto est = smoothed_value_mc(f, x, params, rng, 2000);
      const double bound = params.eta + 3.0 * est.std_error;
      worst = std::max(worst, std::abs(est.mean - norm(x)) - bound);
    }
    reports.push_back(make_report("smoothed_value_lipschitz_bound", {std::max(worst, 0.0)}, {0.0}, 0.0));
  }

  // one-point and two-point estimators agree in expectation
  {
    RngStream rng = stream(6);
    const std::size_t n = 4;
    const SmoothingParams params{0.2, n};
    Vec x(n);
    for (auto& v : x) v = rng.normal();
    auto f = [](const Vec& y) { return norm(y) + 0.3 * y[0]; };
    const auto two = smoothed_grad_mc(f, x, params, rng, 400000);
    const auto one = smoothed_grad_mc_one_point(f, x, params, rng, 400000);
    double excess = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double band =
          3.0 * std::sqrt(two.std_error[i] * two.std_error[i] +
                          one.std_error[i] * one.std_error[i]);
      excess = std::max(excess, std::abs(two.mean[i] - one.mean[i]) - band);
    }
    reports.push_back(make_report("one_two_point_equivalence", {std::max(excess, 0.0)}, {0.0}, 0.0));
  }

  // the bilevel pipeline at interior, sign-mixed, far-negative and near-kink points
  {
    const std::vector<Vec> points = {{2.0, 3.0}, {-5.0, -5.0}, {-2.0, 3.0}, {1e-9, -1e-9}};
    double worst = 0.0;
    for (const auto& x : points) {
      const auto rep = check_bilevel_pipeline(x, 1000);
      worst = std::max(worst, std::abs(rep.observed[0] - rep.expected[0]));
    }
    reports.push_back(make_report("relu_bilevel_pipeline", {worst}, {0.0}, 1e-4));
  }

  return reports;
}

}  // namespace zohfl
