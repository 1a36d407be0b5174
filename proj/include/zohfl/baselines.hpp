#pragma once

#include <chrono>
#include <cmath>
#include <vector>

#include "zohfl/config.hpp"
#include "zohfl/metrics.hpp"
#include "zohfl/objectives.hpp"
#include "zohfl/orchestrator.hpp"

namespace zohfl {

// Reference methods for the accuracy comparison. They share the data,
// objectives, participation streams, and metric plumbing with the main loop.
struct BaselineConfig {
  Method method = Method::FedAvg;
  std::size_t local_steps = 20;  // per round, when match_tau is off
  double local_lr = 0.05;
  double prox_mu = 0.0;  // FedProx only
  std::size_t rounds = 100;
  double participation = 1.0;  // beta
  bool match_tau = false;      // per-round steps = 2 * ceil(tau_i sqrt(r+1))
  std::vector<double> tau{20.0};
  std::size_t batch = 1;
  std::uint64_t algo_seed = 1;
  std::size_t eval_every = 0;
  std::string run_id = "baseline";
  // diagnostic switch: keep all control variates at zero, which reduces
  // scaffold to fedavg step for step
  bool freeze_variates = false;

  static BaselineConfig from(const RunConfig& cfg) {
    BaselineConfig b;
    b.method = cfg.method;
    b.local_steps = cfg.baseline_local_steps;
    b.local_lr = cfg.baseline_local_lr;
    b.prox_mu = cfg.baseline_prox_mu;
    b.rounds = cfg.rounds;
    b.participation = cfg.beta;
    b.match_tau = cfg.baseline_match_tau;
    b.tau = cfg.tau;
    b.batch = cfg.client_batch;
    b.algo_seed = cfg.algo_seed;
    b.eval_every = cfg.eval_every_rounds;
    b.run_id = cfg.run_id;
    return b;
  }

  void validate() const {
    if (method == Method::ZoHFL) {
      throw ParameterError("BaselineConfig: method must be a baseline, not zohfl");
    }
    if (local_steps == 0 && !match_tau) {
      throw ParameterError("BaselineConfig: local_steps must be >= 1");
    }
    if (!(local_lr > 0.0)) throw ParameterError("BaselineConfig: local_lr must be > 0");
    if (prox_mu < 0.0) throw ParameterError("BaselineConfig: prox_mu must be >= 0");
    if (method != Method::FedProx && prox_mu != 0.0) {
      throw ParameterError("BaselineConfig: prox_mu is only used by fedprox");
    }
    if (!(participation > 0.0 && participation <= 1.0)) {
      throw ParameterError("BaselineConfig: participation must be in (0, 1]");
    }
    if (tau.empty()) throw ParameterError("BaselineConfig: tau must not be empty");
  }

  double tau_for(int client) const {
    return tau.size() == 1 ? tau[0] : tau[static_cast<std::size_t>(client)];
  }

  std::size_t steps_for(int client, std::size_t round) const {
    if (!match_tau) return local_steps;
    return 2 * budget_for(tau_for(client), round);
  }
};

// FedAvg / FedProx / SCAFFOLD with sample-count-weighted aggregation over the
// participating set. SCAFFOLD uses the gradient-difference (option II)
// control-variate update.
inline SoftmaxModel run_baseline(const BaselineConfig& cfg, const FederatedData& data,
                                 const MetricSink& sink) {
  cfg.validate();
  const int C = data.server.num_classes;
  const std::size_t n = data.server.feature_dim;
  SoftmaxModel model = SoftmaxModel::zeros(C, n);
  const std::size_t d = model.dim();
  const int m = static_cast<int>(data.clients.size());

  const bool scaffold = (cfg.method == Method::Scaffold) && !cfg.freeze_variates;
  Vec c_global(d, 0.0);
  std::vector<Vec> c_client(data.clients.size(), Vec(d, 0.0));

  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RngStream part_rng(cfg.algo_seed, derive_stream(StreamRole::Participation, 0, r));
      const int take = std::max(
          1, static_cast<int>(std::ceil(cfg.participation * static_cast<double>(m) - 1e-9)));
      std::vector<int> ids(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) ids[static_cast<std::size_t>(i)] = i;
      for (int i = 0; i < take; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) +
                              part_rng.uniform_index(static_cast<std::size_t>(m - i));
        std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
      }
      std::vector<int> participants(ids.begin(), ids.begin() + take);
      std::sort(participants.begin(), participants.end());

      double weight_total = 0.0;
      for (int i : participants) {
        weight_total += static_cast<double>(data.clients[static_cast<std::size_t>(i)].num_samples);
      }

      Vec model_delta(d, 0.0);
      Vec variate_delta(d, 0.0);
      std::size_t grad_evals = 0;
      for (int i : participants) {
        const auto iu = static_cast<std::size_t>(i);
        const DatasetShard& shard = data.clients[iu];
        const std::size_t steps = cfg.steps_for(i, r);
        RngStream rng(cfg.algo_seed,
                      derive_stream(StreamRole::BaselineClient, static_cast<std::uint64_t>(i), r));
        Vec y = model.weights;
        for (std::size_t t = 0; t < steps; ++t) {
          Vec g = ce_stoch_grad(y, shard, rng, std::min(cfg.batch, shard.num_samples));
          if (cfg.method == Method::FedProx) {
            for (std::size_t k = 0; k < d; ++k) g[k] += cfg.prox_mu * (y[k] - model.weights[k]);
          }
          if (scaffold) {
            for (std::size_t k = 0; k < d; ++k) g[k] += c_global[k] - c_client[iu][k];
          }
          axpy(-cfg.local_lr, g, y);
        }
        grad_evals += steps;
        const double w = static_cast<double>(shard.num_samples) / weight_total;
        for (std::size_t k = 0; k < d; ++k) model_delta[k] += w * (y[k] - model.weights[k]);
        if (scaffold && steps > 0) {
          // c_i+ = c_i - c + (x - y_K) / (K * lr)
          const double inv = 1.0 / (static_cast<double>(steps) * cfg.local_lr);
          for (std::size_t k = 0; k < d; ++k) {
            const double c_new = c_client[iu][k] - c_global[k] + inv * (model.weights[k] - y[k]);
            variate_delta[k] += c_new - c_client[iu][k];
            c_client[iu][k] = c_new;
          }
        }
      }

      if (!all_finite(model_delta)) {
        throw NumericsError("run_baseline: nonfinite aggregate update");
      }
      RoundRecord rec;
      rec.round = r;
      rec.global_loss_f1 = f1_loss(model, data.server);
      rec.grad_estimate_norm = norm(model_delta);
      rec.client_grad_evals = grad_evals;

      for (std::size_t k = 0; k < d; ++k) model.weights[k] += model_delta[k];
      if (scaffold) {
        const double scale = 1.0 / static_cast<double>(m);
        axpy(scale, variate_delta, c_global);
      }

      rec.wall_time_sec =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      MetricEvent event{cfg.run_id, r, std::move(rec), std::nullopt};
      const bool last = (r + 1 == cfg.rounds);
      if (last || (cfg.eval_every > 0 && (r + 1) % cfg.eval_every == 0)) {
        EvalRecord ev;
        ev.f1_value = f1_loss(model, data.server);
        ev.implicit_loss = ev.f1_value;
        ev.test_accuracy = detail::test_accuracy(model, data.test);
        event.eval = ev;
      }
      if (sink) sink(event);
    } catch (const Error& e) {
      throw Error("round " + std::to_string(r) + ": " + e.what());
    }
  }
  return model;
}

inline SoftmaxModel run_baseline(const RunConfig& cfg, const FederatedData& data,
                                 const MetricSink& sink) {
  cfg.validate();
  return run_baseline(BaselineConfig::from(cfg), data, sink);
}

}  // namespace zohfl
