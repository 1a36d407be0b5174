#pragma once

#include <cassert>
#include <optional>
#include <utility>

#include "zohfl/numkit.hpp"
#include "zohfl/objectives.hpp"

namespace zohfl {

// Diminishing step schedule gamma0 / (t + offset).
struct LocalSchedule {
  double gamma0 = 0.1;
  double offset = 1.0;

  double step(std::size_t t) const {
    return gamma0 / (static_cast<double>(t) + offset);
  }

  void validate() const {
    if (!(gamma0 > 0.0)) throw ParameterError("LocalSchedule: gamma0 must be > 0");
    if (!(offset > 0.0)) throw ParameterError("LocalSchedule: offset must be > 0");
  }
};

struct LocalRunReport {
  Vec final_iterate;
  std::size_t steps_taken = 0;
  double last_step_size = 0.0;
  std::size_t grad_eval_count = 0;
};

// Projected SGD on a caller-supplied stochastic gradient. The constraint is
// anchored at `anchor` (the broadcast input of the lower-level problem).
// budget == 0 returns the init untouched.
template <typename StochGrad>
LocalRunReport local_solve_with(const Vec& anchor, Vec init, StochGrad&& grad,
                                const ConstraintSpec& spec, const LocalSchedule& schedule,
                                std::size_t budget) {
  check_same_dim(anchor, init, "local_solve_with");
  schedule.validate();
  LocalRunReport report;
  Vec y = std::move(init);
  double last = 0.0;
  for (std::size_t t = 0; t < budget; ++t) {
    const double step = schedule.step(t);
    const Vec g = grad(y);
    Vec candidate = y;
    axpy(-step, g, candidate);
    y = project(candidate, spec, anchor);
    assert(is_feasible(y, spec, anchor));
    last = step;
  }
  report.final_iterate = std::move(y);
  report.steps_taken = budget;
  report.last_step_size = last;
  report.grad_eval_count = budget;
  return report;
}

// Dataset-backed lower-level solve: CE(y) + (mu/2)||x_input - y||^2 over the
// constraint anchored at x_input.
inline LocalRunReport local_solve(const Vec& x_input, const Vec& init, const DatasetShard& shard,
                                  double mu, const ConstraintSpec& spec,
                                  const LocalSchedule& schedule, std::size_t budget,
                                  RngStream& rng, std::size_t batch) {
  return local_solve_with(
      x_input, init,
      [&](const Vec& y) { return local_objective_grad(x_input, y, shard, mu, rng, batch); },
      spec, schedule, budget);
}

// Warm-start cache for the +/- perturbation branches of one client.
struct LocalState {
  std::optional<Vec> warm_plus;
  std::optional<Vec> warm_minus;
};

struct PmOptions {
  bool warm_start = false;   // reuse the previous round's same-sign iterate
  bool shared_noise = false; // run both branches on one sample stream (CRN)
};

struct PmPair {
  LocalRunReport plus;
  LocalRunReport minus;
  // distance from each branch init to its broadcast anchor; nonzero only for
  // warm starts, recorded so inexactness effects can be inspected post hoc
  double init_gap_plus = 0.0;
  double init_gap_minus = 0.0;
};

// The two lower-level solves of one round: at x + eta*v and x - eta*v, same
// budget, independent sample streams unless shared_noise.
inline PmPair solve_pm_pair(const Vec& x, const Vec& v, double eta, LocalState& state,
                            const DatasetShard& shard, double mu, const ConstraintSpec& spec,
                            const LocalSchedule& schedule, std::size_t budget,
                            RngStream& rng_plus, RngStream& rng_minus, std::size_t batch,
                            const PmOptions& opts = {}) {
  check_same_dim(x, v, "solve_pm_pair");
  Vec x_plus = x, x_minus = x;
  axpy(eta, v, x_plus);
  axpy(-eta, v, x_minus);
  const Vec init_plus =
      (opts.warm_start && state.warm_plus) ? *state.warm_plus : x_plus;
  const Vec init_minus =
      (opts.warm_start && state.warm_minus) ? *state.warm_minus : x_minus;

  PmPair pair;
  pair.init_gap_plus = dist(init_plus, x_plus);
  pair.init_gap_minus = dist(init_minus, x_minus);
  if (opts.shared_noise) {
    RngStream rng_shared = rng_plus;  // copy replays the identical draw sequence
    pair.plus = local_solve(x_plus, init_plus, shard, mu, spec, schedule, budget, rng_plus, batch);
    pair.minus =
        local_solve(x_minus, init_minus, shard, mu, spec, schedule, budget, rng_shared, batch);
  } else {
    pair.plus = local_solve(x_plus, init_plus, shard, mu, spec, schedule, budget, rng_plus, batch);
    pair.minus =
        local_solve(x_minus, init_minus, shard, mu, spec, schedule, budget, rng_minus, batch);
  }
  state.warm_plus = pair.plus.final_iterate;
  state.warm_minus = pair.minus.final_iterate;
  return pair;
}

}  // namespace zohfl
