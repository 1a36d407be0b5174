#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "zohfl/errors.hpp"

namespace zohfl {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Dense kernels

inline void check_same_dim(const Vec& a, const Vec& b, const char* where) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(where) + ": dimension mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

inline double dot(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const Vec& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "dist_sq");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double dist(const Vec& a, const Vec& b) { return std::sqrt(dist_sq(a, b)); }

// y += a*x
inline void axpy(double a, const Vec& x, Vec& y) {
  check_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Vec add(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "add");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "sub");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec scaled(double a, const Vec& x) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i];
  return r;
}

inline bool all_finite(const Vec& a) {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Seedable RNG streams
//
// A stream is identified by (seed, stream_id). Equal pairs replay the exact
// same draw sequence regardless of which other streams are in use, which is
// what makes parallel client execution schedule-independent.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream families used across the simulator. Values are part of the
// reproducibility contract: metric streams are byte-stable across runs
// only because every consumer derives its stream from these tags.
enum class StreamRole : std::uint64_t {
  Participation = 1,  // per round: which clients take part
  Direction = 2,      // per (client, round): the unit direction
  ServerBatch = 3,    // per round: server-side sample draws
  ClientPlus = 4,     // per (client, round): + branch local samples
  ClientMinus = 5,    // per (client, round): - branch local samples
  BaselineClient = 6, // per (client, round): baseline local SGD samples
  DataPipeline = 7,   // dataset synthesis and partitioning
  Generic = 8,
};

inline std::uint64_t derive_stream(StreamRole role, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(role));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return h;
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(splitmix64(splitmix64(seed) ^ stream_id)) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // (0, 1); safe under log() and pow(., 1/alpha)
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Unbiased draw from {0, ..., bound-1}.
  std::size_t uniform_index(std::size_t bound) {
    assert(bound > 0);
    const std::uint64_t n = static_cast<std::uint64_t>(bound);
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return static_cast<std::size_t>(r % n);
    }
  }

  // Marsaglia-Tsang; the alpha<1 case goes through the boost
  // gamma(alpha) = gamma(alpha+1) * U^{1/alpha}.
  double gamma(double alpha) {
    if (!(alpha > 0.0)) {
      throw ParameterError("gamma: alpha must be > 0, got " + std::to_string(alpha));
    }
    if (alpha < 1.0) {
      const double boost = std::pow(uniform_pos(), 1.0 / alpha);
      return gamma(alpha + 1.0) * boost;
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Constraint sets and Euclidean projection

struct ConstraintSpec {
  enum class Kind { Unconstrained, BallAroundAnchor, NonnegativeOrthant };

  Kind kind = Kind::Unconstrained;
  double radius = 0.0;  // only meaningful for BallAroundAnchor

  static ConstraintSpec unconstrained() { return {}; }

  static ConstraintSpec ball(double radius) {
    if (!(radius > 0.0)) {
      throw ParameterError("ConstraintSpec: ball radius must be > 0, got " +
                           std::to_string(radius));
    }
    return {Kind::BallAroundAnchor, radius};
  }

  static ConstraintSpec orthant() { return {Kind::NonnegativeOrthant, 0.0}; }
};

inline Vec project(const Vec& point, const ConstraintSpec& spec, const Vec& anchor) {
  check_same_dim(point, anchor, "project");
  switch (spec.kind) {
    case ConstraintSpec::Kind::Unconstrained:
      return point;
    case ConstraintSpec::Kind::BallAroundAnchor: {
      const double d = dist(point, anchor);
      if (d <= spec.radius) return point;
      const double scale = spec.radius / d;
      Vec r(point.size());
      for (std::size_t i = 0; i < point.size(); ++i) {
        r[i] = anchor[i] + scale * (point[i] - anchor[i]);
      }
      return r;
    }
    case ConstraintSpec::Kind::NonnegativeOrthant: {
      Vec r(point.size());
      for (std::size_t i = 0; i < point.size(); ++i) r[i] = std::max(0.0, point[i]);
      return r;
    }
  }
  throw ParameterError("project: unknown constraint kind");
}

inline bool is_feasible(const Vec& point, const ConstraintSpec& spec, const Vec& anchor,
                        double tol = 1e-9) {
  switch (spec.kind) {
    case ConstraintSpec::Kind::Unconstrained:
      return true;
    case ConstraintSpec::Kind::BallAroundAnchor:
      return dist(point, anchor) <= spec.radius + tol;
    case ConstraintSpec::Kind::NonnegativeOrthant:
      for (double x : point) {
        if (x < -tol) return false;
      }
      return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Sampling

// Uniform on the unit sphere: normalized Gaussian draw.
inline Vec sample_unit_sphere(RngStream& rng, std::size_t dim) {
  if (dim == 0) throw DimensionError("sample_unit_sphere: dim must be >= 1");
  Vec v(dim);
  double n = 0.0;
  do {
    for (auto& x : v) x = rng.normal();
    n = norm(v);
  } while (n < 1e-300);
  for (auto& x : v) x /= n;
  return v;
}

// Uniform on the unit ball: sphere direction scaled by U^{1/dim}.
inline Vec sample_unit_ball(RngStream& rng, std::size_t dim) {
  if (dim == 0) throw DimensionError("sample_unit_ball: dim must be >= 1");
  Vec v = sample_unit_sphere(rng, dim);
  const double r = std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  for (auto& x : v) x *= r;
  return v;
}

// Symmetric Dirichlet(alpha) over m categories via normalized Gamma draws.
inline Vec dirichlet(RngStream& rng, double alpha, std::size_t m) {
  if (!(alpha > 0.0)) {
    throw ParameterError("dirichlet: alpha must be > 0, got " + std::to_string(alpha));
  }
  if (m == 0) throw ParameterError("dirichlet: m must be >= 1");
  Vec p(m);
  double s = 0.0;
  for (auto& x : p) {
    x = rng.gamma(alpha);
    s += x;
  }
  if (s <= 0.0) {
    // all mass underflowed; fall back to a single random winner
    p.assign(m, 0.0);
    p[rng.uniform_index(m)] = 1.0;
    return p;
  }
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace zohfl
