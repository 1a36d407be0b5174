#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "zohfl/numkit.hpp"

namespace zohfl {

struct SmoothingParams {
  double eta = 0.1;      // smoothing radius
  std::size_t dim = 0;   // ambient dimension of the smoothed function

  void validate() const {
    if (!(eta > 0.0)) throw ParameterError("SmoothingParams: eta must be > 0");
    if (dim == 0) throw DimensionError("SmoothingParams: dim must be >= 1");
  }
};

// Welford accumulators; the standard error drives the self-calibrating
// Monte Carlo acceptance bands.
class RunningMoments {
 public:
  void add(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const {
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  }
  double std_error() const {
    return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

class VecMoments {
 public:
  explicit VecMoments(std::size_t dim) : coords_(dim) {}
  void add(const Vec& x) {
    for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i].add(x[i]);
  }
  Vec mean() const {
    Vec r(coords_.size());
    for (std::size_t i = 0; i < coords_.size(); ++i) r[i] = coords_[i].mean();
    return r;
  }
  Vec std_error() const {
    Vec r(coords_.size());
    for (std::size_t i = 0; i < coords_.size(); ++i) r[i] = coords_[i].std_error();
    return r;
  }

 private:
  std::vector<RunningMoments> coords_;
};

struct MeanWithError {
  double mean = 0.0;
  double std_error = 0.0;
};

struct VecWithError {
  Vec mean;
  Vec std_error;
};

// The central-difference term (dim / 2 eta) * (f+ - f-) * v for one unit
// direction v.
inline Vec zo_term(double f_plus, double f_minus, const Vec& v, const SmoothingParams& params) {
  params.validate();
  if (v.size() != params.dim) {
    throw DimensionError("zo_term: direction dim " + std::to_string(v.size()) +
                         " != params.dim " + std::to_string(params.dim));
  }
  if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
    throw NumericsError("zo_term: nonfinite function value");
  }
  const double scale =
      static_cast<double>(params.dim) / (2.0 * params.eta) * (f_plus - f_minus);
  return scaled(scale, v);
}

// Monte Carlo estimate of E_{u in unit ball}[ f(x + eta u) ].
template <typename F>
MeanWithError smoothed_value_mc(F&& f, const Vec& x, const SmoothingParams& params,
                                RngStream& rng, std::size_t samples) {
  params.validate();
  if (x.size() != params.dim) throw DimensionError("smoothed_value_mc: x dim mismatch");
  if (samples == 0) throw ParameterError("smoothed_value_mc: samples must be >= 1");
  RunningMoments acc;
  Vec point(x.size());
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec u = sample_unit_ball(rng, params.dim);
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = x[i] + params.eta * u[i];
    acc.add(f(point));
  }
  return {acc.mean(), acc.std_error()};
}

// Monte Carlo mean of central-difference terms over fresh sphere directions.
template <typename F>
VecWithError smoothed_grad_mc(F&& f, const Vec& x, const SmoothingParams& params,
                              RngStream& rng, std::size_t samples) {
  params.validate();
  if (x.size() != params.dim) throw DimensionError("smoothed_grad_mc: x dim mismatch");
  if (samples == 0) throw ParameterError("smoothed_grad_mc: samples must be >= 1");
  VecMoments acc(params.dim);
  Vec plus(x.size()), minus(x.size());
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec v = sample_unit_sphere(rng, params.dim);
    for (std::size_t i = 0; i < x.size(); ++i) {
      plus[i] = x[i] + params.eta * v[i];
      minus[i] = x[i] - params.eta * v[i];
    }
    acc.add(zo_term(f(plus), f(minus), v, params));
  }
  return {acc.mean(), acc.std_error()};
}

// One-point variant (dim/eta) f(x + eta v) v; same expectation by the
// symmetry of the sphere distribution, larger variance.
template <typename F>
VecWithError smoothed_grad_mc_one_point(F&& f, const Vec& x, const SmoothingParams& params,
                                        RngStream& rng, std::size_t samples) {
  params.validate();
  if (x.size() != params.dim) throw DimensionError("smoothed_grad_mc_one_point: x dim mismatch");
  if (samples == 0) throw ParameterError("smoothed_grad_mc_one_point: samples must be >= 1");
  VecMoments acc(params.dim);
  Vec point(x.size());
  const double scale = static_cast<double>(params.dim) / params.eta;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec v = sample_unit_sphere(rng, params.dim);
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = x[i] + params.eta * v[i];
    acc.add(scaled(scale * f(point), v));
  }
  return {acc.mean(), acc.std_error()};
}

struct SmoothedQuadratic {
  double value = 0.0;
  Vec grad;
};

// Exact ball-smoothing of h(y) = 0.5 y'Ay + b'y at x:
//   value = h(x) + eta^2 tr(A) / (2 (dim + 2)),   grad = A x + b.
// The offset is constant in x, so the smoothed gradient equals the plain one.
inline SmoothedQuadratic smoothed_quadratic_exact(const std::vector<double>& matrix,
                                                  const Vec& linear, const Vec& x,
                                                  const SmoothingParams& params) {
  params.validate();
  const std::size_t n = x.size();
  if (n != params.dim) throw DimensionError("smoothed_quadratic_exact: x dim mismatch");
  if (matrix.size() != n * n) throw DimensionError("smoothed_quadratic_exact: matrix size");
  check_same_dim(linear, x, "smoothed_quadratic_exact");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(matrix[i * n + j] - matrix[j * n + i]) > 1e-12) {
        throw ParameterError("smoothed_quadratic_exact: matrix not symmetric");
      }
    }
  }
  double quad = 0.0, trace = 0.0;
  Vec grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += matrix[i * n + j] * x[j];
    grad[i] = row + linear[i];
    quad += x[i] * row;
    trace += matrix[i * n + i];
  }
  const double value = 0.5 * quad + dot(linear, x) +
                       params.eta * params.eta * trace /
                           (2.0 * (static_cast<double>(n) + 2.0));
  return {value, std::move(grad)};
}

}  // namespace zohfl
