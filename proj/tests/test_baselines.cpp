#include <catch2/catch_amalgamated.hpp>

#include "zohfl/baselines.hpp"
#include "zohfl/harness.hpp"

using namespace zohfl;

namespace {

RunConfig baseline_config(Method method) {
  RunConfig c;
  c.run_id = "bl";
  c.method = method;
  c.dataset.kind = "synth";
  c.dataset.classes = 3;
  c.dataset.feature_dim = 4;
  c.dataset.per_class = 40;
  c.dataset.spread = 0.8;
  c.num_clients = 4;
  c.rounds = 8;
  c.alpha = 10.0;
  c.beta = 1.0;
  c.baseline_local_steps = 6;
  c.baseline_match_tau = false;
  c.baseline_local_lr = 0.05;
  c.client_batch = 2;
  return c;
}

}  // namespace

TEST_CASE("fedavg equivalences") {
  SECTION("single client full participation is sequential SGD") {
    RunConfig cfg = baseline_config(Method::FedAvg);
    cfg.num_clients = 1;
    const FederatedData data = prepare_data(cfg);
    EventLog log;
    const SoftmaxModel model = run_baseline(cfg, data, log.sink());

    SoftmaxModel ref = SoftmaxModel::zeros(3, 4);
    for (std::size_t r = 0; r < cfg.rounds; ++r) {
      RngStream rng(cfg.algo_seed, derive_stream(StreamRole::BaselineClient, 0, r));
      for (std::size_t t = 0; t < cfg.baseline_local_steps; ++t) {
        const Vec g = ce_stoch_grad(ref.weights, data.clients[0], rng, cfg.client_batch);
        axpy(-cfg.baseline_local_lr, g, ref.weights);
      }
    }
    REQUIRE(model.weights == ref.weights);
    REQUIRE(log.events.size() == cfg.rounds);
  }

  SECTION("one round of weighted aggregation matches a hand computation") {
    RunConfig cfg = baseline_config(Method::FedAvg);
    cfg.num_clients = 2;
    cfg.rounds = 1;
    const FederatedData data = prepare_data(cfg);
    EventLog log;
    const SoftmaxModel model = run_baseline(cfg, data, log.sink());

    Vec expect(12, 0.0);
    const double n0 = double(data.clients[0].num_samples);
    const double n1 = double(data.clients[1].num_samples);
    for (int i = 0; i < 2; ++i) {
      RngStream rng(cfg.algo_seed,
                    derive_stream(StreamRole::BaselineClient, std::uint64_t(i), 0));
      Vec y(12, 0.0);
      for (std::size_t t = 0; t < cfg.baseline_local_steps; ++t) {
        const Vec g = ce_stoch_grad(y, data.clients[std::size_t(i)], rng, cfg.client_batch);
        axpy(-cfg.baseline_local_lr, g, y);
      }
      const double w = (i == 0 ? n0 : n1) / (n0 + n1);  // weights sum to one
      axpy(w, y, expect);
    }
    for (std::size_t k = 0; k < 12; ++k) {
      REQUIRE(model.weights[k] == Catch::Approx(expect[k]).margin(1e-15));
    }
  }
}

TEST_CASE("fedprox reduces to fedavg at zero prox") {
  RunConfig avg_cfg = baseline_config(Method::FedAvg);
  RunConfig prox_cfg = baseline_config(Method::FedProx);
  prox_cfg.baseline_prox_mu = 0.0;
  const FederatedData data = prepare_data(avg_cfg);
  EventLog la, lp;
  const SoftmaxModel a = run_baseline(avg_cfg, data, la.sink());
  const SoftmaxModel p = run_baseline(prox_cfg, data, lp.sink());
  REQUIRE(a.weights == p.weights);
}

TEST_CASE("fedprox with positive prox stays anchored") {
  RunConfig avg_cfg = baseline_config(Method::FedAvg);
  RunConfig prox_cfg = baseline_config(Method::FedProx);
  prox_cfg.baseline_prox_mu = 5.0;
  prox_cfg.rounds = 1;
  avg_cfg.rounds = 1;
  const FederatedData data = prepare_data(avg_cfg);
  EventLog la, lp;
  const SoftmaxModel a = run_baseline(avg_cfg, data, la.sink());
  const SoftmaxModel p = run_baseline(prox_cfg, data, lp.sink());
  // the prox pull shrinks the first-round update toward the zero init
  REQUIRE(norm(p.weights) < norm(a.weights));
  REQUIRE(norm(p.weights) > 0.0);
}

TEST_CASE("scaffold") {
  SECTION("frozen variates reduce to fedavg") {
    RunConfig avg_cfg = baseline_config(Method::FedAvg);
    const FederatedData data = prepare_data(avg_cfg);
    EventLog la, ls;
    const SoftmaxModel a = run_baseline(avg_cfg, data, la.sink());
    BaselineConfig sc = BaselineConfig::from(baseline_config(Method::Scaffold));
    sc.freeze_variates = true;
    const SoftmaxModel s = run_baseline(sc, data, ls.sink());
    REQUIRE(a.weights == s.weights);
  }
  SECTION("live variates change the trajectory under partial participation") {
    RunConfig avg_cfg = baseline_config(Method::FedAvg);
    avg_cfg.beta = 0.5;
    RunConfig sc_cfg = baseline_config(Method::Scaffold);
    sc_cfg.beta = 0.5;
    const FederatedData data = prepare_data(avg_cfg);
    EventLog la, ls;
    const SoftmaxModel a = run_baseline(avg_cfg, data, la.sink());
    const SoftmaxModel s = run_baseline(sc_cfg, data, ls.sink());
    REQUIRE(a.weights != s.weights);
    REQUIRE(all_finite(s.weights));
  }
}

TEST_CASE("matched budget across methods") {
  // with tau matching, every method consumes the same number of client
  // gradient evaluations per round as the two-sided local solves do
  RunConfig zo_cfg = baseline_config(Method::FedAvg);
  zo_cfg.method = Method::ZoHFL;
  zo_cfg.tau = {3.0};
  zo_cfg.lambda = 0.5;
  zo_cfg.mu = 1.0;
  const FederatedData data = prepare_data(zo_cfg);
  EventLog lz;
  (void)run_zohfl(zo_cfg, data, lz.sink());

  for (Method m : {Method::FedAvg, Method::FedProx, Method::Scaffold}) {
    RunConfig cfg = baseline_config(m);
    cfg.tau = {3.0};
    cfg.baseline_match_tau = true;
    cfg.baseline_prox_mu = (m == Method::FedProx) ? 0.1 : 0.0;
    EventLog lb;
    (void)run_baseline(cfg, data, lb.sink());
    REQUIRE(lb.events.size() == lz.events.size());
    for (std::size_t r = 0; r < lb.events.size(); ++r) {
      REQUIRE(lb.events[r].record.client_grad_evals == lz.events[r].record.client_grad_evals);
    }
  }
}

TEST_CASE("baseline config validation") {
  BaselineConfig c;
  c.method = Method::ZoHFL;
  REQUIRE_THROWS_AS(c.validate(), ParameterError);
  c.method = Method::FedAvg;
  c.prox_mu = 0.5;
  REQUIRE_THROWS_AS(c.validate(), ParameterError);
  c.prox_mu = 0.0;
  c.local_lr = 0.0;
  REQUIRE_THROWS_AS(c.validate(), ParameterError);
}
