#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "zohfl/data.hpp"
#include "zohfl/numkit.hpp"

namespace zohfl {

// ---------------------------------------------------------------------------
// Softmax regression model
//
// Weights are class-major: weights[c*feature_dim + j] is class c's weight on
// feature j. The flat layout is what the smoothing calculus perturbs.

struct SoftmaxModel {
  Vec weights;
  int num_classes = 0;
  std::size_t feature_dim = 0;

  std::size_t dim() const { return weights.size(); }

  static SoftmaxModel zeros(int num_classes, std::size_t feature_dim) {
    if (num_classes < 2) throw ParameterError("SoftmaxModel: need num_classes >= 2");
    if (feature_dim == 0) throw DimensionError("SoftmaxModel: need feature_dim >= 1");
    return {Vec(std::size_t(num_classes) * feature_dim, 0.0), num_classes, feature_dim};
  }
};

namespace detail {

inline void check_model_shard(std::size_t weights_dim, const DatasetShard& shard,
                              const char* where) {
  if (shard.empty()) throw DataError(std::string(where) + ": empty shard");
  const std::size_t want = std::size_t(shard.num_classes) * shard.feature_dim;
  if (weights_dim != want) {
    throw DimensionError(std::string(where) + ": weights dim " + std::to_string(weights_dim) +
                         " != classes*features = " + std::to_string(want));
  }
}

// log-sum-exp stabilized per-sample loss and optional gradient accumulation
struct CeWorkspace {
  Vec logits;
  explicit CeWorkspace(int num_classes) : logits(static_cast<std::size_t>(num_classes)) {}
};

inline double ce_sample(const Vec& weights, const DatasetShard& shard, std::size_t j,
                        CeWorkspace& ws, Vec* grad_out) {
  const std::size_t n = shard.feature_dim;
  const std::size_t C = ws.logits.size();
  const auto u = shard.row(j);
  for (std::size_t c = 0; c < C; ++c) {
    double z = 0.0;
    const double* wc = weights.data() + c * n;
    for (std::size_t k = 0; k < n; ++k) z += wc[k] * u[k];
    ws.logits[c] = z;
  }
  const double zmax = *std::max_element(ws.logits.begin(), ws.logits.end());
  double sum = 0.0;
  for (double z : ws.logits) sum += std::exp(z - zmax);
  const double lse = zmax + std::log(sum);
  const int label = shard.labels[j];
  if (grad_out != nullptr) {
    for (std::size_t c = 0; c < C; ++c) {
      const double p = std::exp(ws.logits[c] - lse);
      const double coef = p - (static_cast<int>(c) == label ? 1.0 : 0.0);
      double* gc = grad_out->data() + c * n;
      for (std::size_t k = 0; k < n; ++k) gc[k] += coef * u[k];
    }
  }
  return lse - ws.logits[static_cast<std::size_t>(label)];
}

// k distinct indices from [0, n), ascending (Floyd's sampling)
inline std::vector<std::size_t> sample_indices(RngStream& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = rng.uniform_index(j + 1);
    if (std::find(out.begin(), out.end(), t) != out.end()) {
      out.push_back(j);
    } else {
      out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Mean cross-entropy of the shard under the model.
inline double f1_loss(const SoftmaxModel& model, const DatasetShard& shard) {
  detail::check_model_shard(model.dim(), shard, "f1_loss");
  detail::CeWorkspace ws(shard.num_classes);
  double total = 0.0;
  for (std::size_t j = 0; j < shard.num_samples; ++j) {
    total += detail::ce_sample(model.weights, shard, j, ws, nullptr);
  }
  return total / static_cast<double>(shard.num_samples);
}

// Full-batch gradient of f1_loss.
inline Vec ce_grad(const Vec& weights, const DatasetShard& shard) {
  detail::check_model_shard(weights.size(), shard, "ce_grad");
  detail::CeWorkspace ws(shard.num_classes);
  Vec g(weights.size(), 0.0);
  for (std::size_t j = 0; j < shard.num_samples; ++j) {
    detail::ce_sample(weights, shard, j, ws, &g);
  }
  const double inv = 1.0 / static_cast<double>(shard.num_samples);
  for (auto& x : g) x *= inv;
  return g;
}

inline Vec f1_grad(const SoftmaxModel& model, const DatasetShard& shard) {
  return ce_grad(model.weights, shard);
}

// Mean cross-entropy gradient over a uniform without-replacement batch;
// batch == shard size takes the deterministic full-batch path.
inline Vec ce_stoch_grad(const Vec& weights, const DatasetShard& shard, RngStream& rng,
                         std::size_t batch) {
  detail::check_model_shard(weights.size(), shard, "ce_stoch_grad");
  if (batch == 0) throw ParameterError("ce_stoch_grad: batch must be >= 1");
  if (batch > shard.num_samples) {
    throw ParameterError("ce_stoch_grad: batch " + std::to_string(batch) +
                         " exceeds shard size " + std::to_string(shard.num_samples));
  }
  if (batch == shard.num_samples) return ce_grad(weights, shard);
  detail::CeWorkspace ws(shard.num_classes);
  Vec g(weights.size(), 0.0);
  const auto idx = detail::sample_indices(rng, shard.num_samples, batch);
  for (std::size_t j : idx) detail::ce_sample(weights, shard, j, ws, &g);
  const double inv = 1.0 / static_cast<double>(batch);
  for (auto& x : g) x *= inv;
  return g;
}

inline Vec f1_stoch_grad(const SoftmaxModel& model, const DatasetShard& shard, RngStream& rng,
                         std::size_t batch) {
  return ce_stoch_grad(model.weights, shard, rng, batch);
}

// Gradient in y of the client objective CE(y) + (mu/2)||x - y||^2.
inline Vec local_objective_grad(const Vec& x, const Vec& y, const DatasetShard& shard,
                                double mu, RngStream& rng, std::size_t batch) {
  check_same_dim(x, y, "local_objective_grad");
  Vec g = ce_stoch_grad(y, shard, rng, batch);
  for (std::size_t i = 0; i < y.size(); ++i) g[i] += mu * (y[i] - x[i]);
  return g;
}

// (lambda/2) * weight * ||x - y||^2. lambda == 0 is the degenerate
// no-coupling mode; negative values are rejected.
inline double penalty_value(const Vec& x, const Vec& y, double lambda, double weight) {
  check_same_dim(x, y, "penalty_value");
  if (lambda < 0.0) throw ParameterError("penalty_value: lambda must be >= 0");
  if (weight < 0.0) throw ParameterError("penalty_value: weight must be >= 0");
  return 0.5 * lambda * weight * dist_sq(x, y);
}

// ---------------------------------------------------------------------------
// Analytic quadratic test objective: 0.5 y'Ay + b'y (+ optional gradient noise)

struct QuadraticProblem {
  std::vector<double> matrix;  // n x n row-major, symmetric positive definite
  Vec linear;
  double noise_sigma = 0.0;

  std::size_t dim() const { return linear.size(); }

  double value(const Vec& y) const {
    check_same_dim(y, linear, "QuadraticProblem::value");
    const std::size_t n = dim();
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += matrix[i * n + j] * y[j];
      q += y[i] * row;
    }
    return 0.5 * q + dot(linear, y);
  }

  Vec grad(const Vec& y) const {
    check_same_dim(y, linear, "QuadraticProblem::grad");
    const std::size_t n = dim();
    Vec g(n);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += matrix[i * n + j] * y[j];
      g[i] = row + linear[i];
    }
    return g;
  }

  Vec stoch_grad(const Vec& y, RngStream& rng) const {
    Vec g = grad(y);
    if (noise_sigma > 0.0) {
      for (auto& x : g) x += noise_sigma * rng.normal();
    }
    return g;
  }

  bool is_diagonal(double tol = 1e-12) const {
    const std::size_t n = dim();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && std::abs(matrix[i * n + j]) > tol) return false;
      }
    }
    return true;
  }

  static QuadraticProblem make(std::vector<double> matrix, Vec linear, double noise_sigma = 0.0);
};

namespace detail {

// Cholesky factor (lower), throws ParameterError when not SPD.
inline std::vector<double> cholesky(const std::vector<double>& a, std::size_t n) {
  std::vector<double> L(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      if (i == j) {
        if (s <= 0.0) throw ParameterError("cholesky: matrix not positive definite");
        L[i * n + i] = std::sqrt(s);
      } else {
        L[i * n + j] = s / L[j * n + j];
      }
    }
  }
  return L;
}

inline Vec cholesky_solve(const std::vector<double>& L, std::size_t n, const Vec& rhs) {
  Vec z(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * z[k];
    z[i] = s / L[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= L[k * n + ii] * x[k];
    x[ii] = s / L[ii * n + ii];
  }
  return x;
}

}  // namespace detail

inline QuadraticProblem QuadraticProblem::make(std::vector<double> matrix, Vec linear,
                                               double noise_sigma) {
  const std::size_t n = linear.size();
  if (matrix.size() != n * n) {
    throw DimensionError("QuadraticProblem: matrix size " + std::to_string(matrix.size()) +
                         " != n*n = " + std::to_string(n * n));
  }
  if (noise_sigma < 0.0) throw ParameterError("QuadraticProblem: noise_sigma must be >= 0");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(matrix[i * n + j] - matrix[j * n + i]) > 1e-12) {
        throw ParameterError("QuadraticProblem: matrix not symmetric at (" +
                             std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  detail::cholesky(matrix, n);  // SPD gate
  return {std::move(matrix), std::move(linear), noise_sigma};
}

// Closed-form constrained minimizer of 0.5 y'Ay + b'y.
//   Unconstrained:      A y = -b by Cholesky
//   BallAroundAnchor:   KKT multiplier found by bisection to 1e-12
//   NonnegativeOrthant: coordinate clamp, diagonal A only
inline Vec quad_solution(const QuadraticProblem& q, const ConstraintSpec& spec,
                         const Vec& anchor) {
  const std::size_t n = q.dim();
  check_same_dim(q.linear, anchor, "quad_solution");
  switch (spec.kind) {
    case ConstraintSpec::Kind::Unconstrained: {
      const auto L = detail::cholesky(q.matrix, n);
      return detail::cholesky_solve(L, n, scaled(-1.0, q.linear));
    }
    case ConstraintSpec::Kind::BallAroundAnchor: {
      const auto L = detail::cholesky(q.matrix, n);
      Vec y = detail::cholesky_solve(L, n, scaled(-1.0, q.linear));
      if (dist(y, anchor) <= spec.radius) return y;
      // solve (A + nu I) y = -b + nu*anchor with ||y - anchor|| = radius
      auto solve_at = [&](double nu) {
        std::vector<double> shifted = q.matrix;
        for (std::size_t i = 0; i < n; ++i) shifted[i * n + i] += nu;
        Vec rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -q.linear[i] + nu * anchor[i];
        const auto Ls = detail::cholesky(shifted, n);
        return detail::cholesky_solve(Ls, n, rhs);
      };
      double lo = 0.0, hi = 1.0;
      while (dist(solve_at(hi), anchor) > spec.radius) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e18) throw OracleError("quad_solution: ball multiplier out of range");
      }
      for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(1.0, lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (dist(solve_at(mid), anchor) > spec.radius) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return solve_at(0.5 * (lo + hi));
    }
    case ConstraintSpec::Kind::NonnegativeOrthant: {
      if (!q.is_diagonal()) {
        throw OracleError("quad_solution: orthant case only supports diagonal matrices");
      }
      Vec y(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = std::max(0.0, -q.linear[i] / q.matrix[i * n + i]);
      }
      return y;
    }
  }
  throw ParameterError("quad_solution: unknown constraint kind");
}

}  // namespace zohfl
