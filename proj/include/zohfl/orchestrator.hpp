#pragma once

#include <chrono>
#include <cmath>
#include <future>
#include <vector>

#include "zohfl/config.hpp"
#include "zohfl/local_solver.hpp"
#include "zohfl/metrics.hpp"
#include "zohfl/objectives.hpp"
#include "zohfl/smoothing.hpp"

namespace zohfl {

// The partitioned world a run operates on.
struct FederatedData {
  DatasetShard server;
  std::vector<DatasetShard> clients;
  DatasetShard test;
  std::vector<double> client_weights;  // w_i
};

struct RoundPlan {
  std::size_t round = 0;
  std::vector<int> participants;       // ascending client ids
  std::vector<Vec> directions;         // unit, one per participant
  std::vector<std::size_t> budgets;    // H_{i,r}, one per participant
  double global_step_size = 0.0;
};

// Per-round local budget ceil(tau_i * sqrt(r+1)).
inline std::size_t budget_for(double tau, std::size_t round) {
  return static_cast<std::size_t>(
      std::ceil(tau * std::sqrt(static_cast<double>(round) + 1.0)));
}

inline double global_step_size(const RunConfig& cfg, std::size_t round) {
  return cfg.global_step_c / std::pow(static_cast<double>(round) + 1.0, cfg.global_step_p);
}

// Participant selection, directions, budgets, and the step size of round r.
// `rng` drives participant selection only; directions come from per-(client,
// round) streams so they are independent of scheduling and participation.
inline RoundPlan plan_round(std::size_t round, const RunConfig& cfg, std::size_t model_dim,
                            RngStream& rng) {
  if (!(cfg.beta > 0.0)) throw ParameterError("plan_round: beta must be > 0");
  const int m = cfg.num_clients;
  const int take = std::max(
      1, static_cast<int>(std::ceil(cfg.beta * static_cast<double>(m) - 1e-9)));

  RoundPlan plan;
  plan.round = round;
  std::vector<int> ids(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) ids[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < take; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        rng.uniform_index(static_cast<std::size_t>(m - i));
    std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
  }
  plan.participants.assign(ids.begin(), ids.begin() + take);
  std::sort(plan.participants.begin(), plan.participants.end());

  plan.directions.reserve(plan.participants.size());
  plan.budgets.reserve(plan.participants.size());
  for (int i : plan.participants) {
    RngStream dir_rng(cfg.algo_seed,
                      derive_stream(StreamRole::Direction, static_cast<std::uint64_t>(i), round));
    plan.directions.push_back(sample_unit_sphere(dir_rng, model_dim));
    plan.budgets.push_back(budget_for(cfg.tau_for(i), round));
  }
  plan.global_step_size = global_step_size(cfg, round);
  return plan;
}

// f1_grad + (1/denom) * sum of client terms; denom defaults to the number of
// terms (participation-renormalized average).
inline Vec assemble_gradient(const Vec& f1_grad, const std::vector<Vec>& client_terms,
                             std::size_t denom = 0) {
  if (client_terms.empty()) throw DataError("assemble_gradient: empty participant set");
  if (denom == 0) denom = client_terms.size();
  Vec g = f1_grad;
  const double inv = 1.0 / static_cast<double>(denom);
  for (const auto& term : client_terms) {
    check_same_dim(term, g, "assemble_gradient");
    axpy(inv, term, g);
  }
  return g;
}

// x - gamma * g; aborts on a nonfinite estimate instead of clipping.
inline SoftmaxModel global_step(const SoftmaxModel& x, const Vec& g, double gamma_r) {
  if (!(gamma_r > 0.0)) throw ParameterError("global_step: gamma must be > 0");
  check_same_dim(x.weights, g, "global_step");
  if (!all_finite(g)) throw NumericsError("global_step: nonfinite gradient estimate");
  SoftmaxModel next = x;
  axpy(-gamma_r, g, next.weights);
  return next;
}

namespace detail {

struct ParticipantResult {
  Vec term;
  double pm_gap = 0.0;
  double warm_gap = 0.0;
  std::size_t grad_evals = 0;
};

inline double test_accuracy(const SoftmaxModel& model, const DatasetShard& test);

// True-objective checkpoint: dedicated full-batch lower-level solves with the
// eval budget; pure metrics.
inline EvalRecord evaluate_checkpoint(const SoftmaxModel& model, const RunConfig& cfg,
                                      const FederatedData& data) {
  EvalRecord ev;
  ev.f1_value = f1_loss(model, data.server);
  const ConstraintSpec spec = cfg.constraint();
  RngStream unused(0, 0);
  double penalty = 0.0;
  for (std::size_t i = 0; i < data.clients.size(); ++i) {
    const auto rep =
        local_solve(model.weights, model.weights, data.clients[i], cfg.mu, spec,
                    cfg.local_schedule, cfg.eval_budget_steps, unused,
                    data.clients[i].num_samples);
    penalty += penalty_value(model.weights, rep.final_iterate, cfg.lambda,
                             data.client_weights[i]);
  }
  ev.penalty_value = penalty;
  ev.implicit_loss = ev.f1_value + penalty;
  ev.test_accuracy = test_accuracy(model, data.test);
  return ev;
}

inline double test_accuracy(const SoftmaxModel& model, const DatasetShard& test) {
  check_model_shard(model.dim(), test, "test_accuracy");
  const std::size_t n = test.feature_dim;
  std::size_t hits = 0;
  for (std::size_t j = 0; j < test.num_samples; ++j) {
    const auto u = test.row(j);
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.num_classes; ++c) {
      double z = 0.0;
      const double* wc = model.weights.data() + static_cast<std::size_t>(c) * n;
      for (std::size_t k = 0; k < n; ++k) z += wc[k] * u[k];
      if (z > best_score) {  // strict: ties resolve to the lowest class index
        best_score = z;
        best = c;
      }
    }
    if (best == test.labels[j]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.num_samples);
}

}  // namespace detail

// The full communication loop. Per round: plan -> per-participant +/- local
// solves -> central-difference terms -> assemble with the server gradient ->
// global step. Deterministic given (data_seed, algo_seed), also when
// participants run on threads, because every consumer owns a derived stream
// and the reduce order is fixed.
inline SoftmaxModel run_zohfl(const RunConfig& cfg, const FederatedData& data,
                              const MetricSink& sink) {
  cfg.validate();
  if (cfg.method != Method::ZoHFL) throw ParameterError("run_zohfl: method must be zohfl");
  const int C = data.server.num_classes;
  const std::size_t n = data.server.feature_dim;
  SoftmaxModel model = SoftmaxModel::zeros(C, n);
  const std::size_t d = model.dim();
  const SmoothingParams smoothing{cfg.eta, d};
  const ConstraintSpec spec = cfg.constraint();
  const PmOptions pm_opts{cfg.warm_start, cfg.shared_noise};
  std::vector<LocalState> states(data.clients.size());

  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RngStream part_rng(cfg.algo_seed, derive_stream(StreamRole::Participation, 0, r));
      const RoundPlan plan = plan_round(r, cfg, d, part_rng);
      const std::size_t k = plan.participants.size();

      std::vector<detail::ParticipantResult> results(k);
      auto work = [&](std::size_t idx) {
        const int i = plan.participants[idx];
        const auto iu = static_cast<std::size_t>(i);
        const Vec& v = plan.directions[idx];
        RngStream rng_plus(cfg.algo_seed,
                           derive_stream(StreamRole::ClientPlus, static_cast<std::uint64_t>(i), r));
        RngStream rng_minus(
            cfg.algo_seed,
            derive_stream(StreamRole::ClientMinus, static_cast<std::uint64_t>(i), r));
        const PmPair pair = solve_pm_pair(
            model.weights, v, cfg.eta, states[iu], data.clients[iu], cfg.mu, spec,
            cfg.local_schedule, plan.budgets[idx], rng_plus, rng_minus,
            std::min(cfg.client_batch, data.clients[iu].num_samples), pm_opts);
        Vec x_plus = model.weights, x_minus = model.weights;
        axpy(cfg.eta, v, x_plus);
        axpy(-cfg.eta, v, x_minus);
        const double f_plus =
            penalty_value(x_plus, pair.plus.final_iterate, cfg.lambda, data.client_weights[iu]);
        const double f_minus =
            penalty_value(x_minus, pair.minus.final_iterate, cfg.lambda, data.client_weights[iu]);
        detail::ParticipantResult res;
        res.term = zo_term(f_plus, f_minus, v, smoothing);
        res.pm_gap = dist(pair.plus.final_iterate, pair.minus.final_iterate);
        res.warm_gap = 0.5 * (pair.init_gap_plus + pair.init_gap_minus);
        res.grad_evals = pair.plus.grad_eval_count + pair.minus.grad_eval_count;
        results[idx] = std::move(res);
        return 0.5 * (f_plus + f_minus);
      };

      std::vector<double> branch_penalties(k, 0.0);
      if (cfg.parallel_clients && k > 1) {
        std::vector<std::future<double>> futs;
        futs.reserve(k);
        for (std::size_t idx = 0; idx < k; ++idx) {
          futs.push_back(std::async(std::launch::async, work, idx));
        }
        for (std::size_t idx = 0; idx < k; ++idx) branch_penalties[idx] = futs[idx].get();
      } else {
        for (std::size_t idx = 0; idx < k; ++idx) branch_penalties[idx] = work(idx);
      }

      RngStream server_rng(cfg.algo_seed, derive_stream(StreamRole::ServerBatch, 0, r));
      const Vec f1g = f1_stoch_grad(model, data.server, server_rng,
                                    std::min(cfg.server_batch, data.server.num_samples));
      std::vector<Vec> terms;
      terms.reserve(k);
      for (auto& res : results) terms.push_back(std::move(res.term));
      const std::size_t denom =
          cfg.renormalize_participation ? k : static_cast<std::size_t>(cfg.num_clients);
      const Vec g = assemble_gradient(f1g, terms, denom);

      RoundRecord rec;
      rec.round = r;
      rec.global_loss_f1 = f1_loss(model, data.server);
      double pen = 0.0;
      for (double b : branch_penalties) pen += b;
      rec.penalty_estimate = pen / static_cast<double>(k);
      rec.grad_estimate_norm = norm(g);
      rec.pm_gaps.reserve(k);
      for (const auto& res : results) rec.pm_gaps.push_back(res.pm_gap);
      if (cfg.warm_start) {
        rec.warm_gaps.reserve(k);
        for (const auto& res : results) rec.warm_gaps.push_back(res.warm_gap);
      }
      for (const auto& res : results) rec.client_grad_evals += res.grad_evals;

      model = global_step(model, g, plan.global_step_size);

      rec.wall_time_sec =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      MetricEvent event{cfg.run_id, r, std::move(rec), std::nullopt};
      const bool last = (r + 1 == cfg.rounds);
      if (last || (cfg.eval_every_rounds > 0 && (r + 1) % cfg.eval_every_rounds == 0)) {
        event.eval = detail::evaluate_checkpoint(model, cfg, data);
      }
      if (sink) sink(event);
    } catch (const Error& e) {
      throw Error("round " + std::to_string(r) + ": " + e.what());
    }
  }
  return model;
}

}  // namespace zohfl
