#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zohfl/baselines.hpp"
#include "zohfl/config.hpp"
#include "zohfl/data.hpp"
#include "zohfl/metrics.hpp"
#include "zohfl/orchestrator.hpp"

namespace zohfl {

// Fraction of test samples whose highest score matches the label; score ties
// resolve to the lowest class index.
inline double evaluate_accuracy(const SoftmaxModel& model, const DatasetShard& test) {
  if (test.empty()) throw DataError("evaluate_accuracy: empty test set");
  return detail::test_accuracy(model, test);
}

// Same check for a flat weight vector, e.g. a client's local model.
inline double evaluate_accuracy(const Vec& weights, const DatasetShard& test) {
  if (test.empty()) throw DataError("evaluate_accuracy: empty test set");
  return detail::test_accuracy(SoftmaxModel{weights, test.num_classes, test.feature_dim},
                               test);
}

// ---------------------------------------------------------------------------
// Data preparation

inline DatasetShard load_base_dataset(const RunConfig& cfg) {
  if (cfg.dataset.kind == "synth") {
    RngStream rng(cfg.data_seed, derive_stream(StreamRole::DataPipeline, 0, 0));
    return synth_blobs(rng, cfg.dataset.classes, cfg.dataset.feature_dim,
                       cfg.dataset.per_class, cfg.dataset.spread);
  }
  if (cfg.dataset.kind == "idx") return load_idx(cfg.dataset.images, cfg.dataset.labels);
  if (cfg.dataset.kind == "csv") return load_csv(cfg.dataset.path);
  throw ParameterError("dataset.kind: unknown value '" + cfg.dataset.kind + "'");
}

inline Partition prepare_partition(const RunConfig& cfg) {
  const DatasetShard base = load_base_dataset(cfg);
  RngStream rng(cfg.data_seed, derive_stream(StreamRole::DataPipeline, 1, 0));
  return partition(base, cfg.alpha, cfg.num_clients, cfg.server_fraction, cfg.test_fraction,
                   rng, cfg.data_seed);
}

// w_i = N_i / N_tr with N_tr the full training pool (server + clients), or
// uniform 1/m.
inline std::vector<double> client_weights_for(const RunConfig& cfg, const DatasetShard& server,
                                              const std::vector<DatasetShard>& clients) {
  std::vector<double> w(clients.size(), 0.0);
  if (cfg.weight_mode == "uniform") {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(clients.size()));
    return w;
  }
  double n_tr = static_cast<double>(server.num_samples);
  for (const auto& c : clients) n_tr += static_cast<double>(c.num_samples);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    w[i] = static_cast<double>(clients[i].num_samples) / n_tr;
  }
  return w;
}

inline FederatedData prepare_data(const RunConfig& cfg) {
  Partition part = prepare_partition(cfg);
  FederatedData data;
  data.server = std::move(part.server);
  data.clients = std::move(part.clients);
  data.test = std::move(part.test);
  data.client_weights = client_weights_for(cfg, data.server, data.clients);
  return data;
}

// ---------------------------------------------------------------------------
// Run execution

struct RunResult {
  RunConfig config;
  SoftmaxModel final_model;
  std::vector<MetricEvent> events;
  double final_f1 = 0.0;
  double final_accuracy = 0.0;
  double wall_time_sec = 0.0;
};

inline RunResult execute_run(const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const FederatedData data = prepare_data(cfg);
  EventLog log;
  SoftmaxModel model = (cfg.method == Method::ZoHFL) ? run_zohfl(cfg, data, log.sink())
                                                     : run_baseline(cfg, data, log.sink());
  RunResult res{cfg, std::move(model), std::move(log.events)};
  res.final_f1 = f1_loss(res.final_model, data.server);
  res.final_accuracy = evaluate_accuracy(res.final_model, data.test);
  res.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json model_to_json(const SoftmaxModel& m) {
  return {{"num_classes", m.num_classes},
          {"feature_dim", m.feature_dim},
          {"weights", m.weights}};
}

inline SoftmaxModel model_from_json(const nlohmann::json& j) {
  SoftmaxModel m;
  m.num_classes = j.at("num_classes").get<int>();
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  m.weights = j.at("weights").get<Vec>();
  if (m.weights.size() != std::size_t(m.num_classes) * m.feature_dim) {
    throw FormatError("model: weights size does not match classes*features");
  }
  return m;
}

struct SummaryRow {
  std::string run_id;
  std::string method;
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  double wall_time_sec = 0.0;
};

inline SummaryRow summary_of(const RunResult& r) {
  return {r.config.run_id,        method_name(r.config.method),
          r.config.alpha,         r.config.beta,
          r.config.tau.front(),   r.final_f1,
          r.final_accuracy,       r.wall_time_sec};
}

inline void write_summary_csv(std::ostream& out, std::vector<SummaryRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const SummaryRow& a, const SummaryRow& b) { return a.run_id < b.run_id; });
  out << "run_id,method,alpha,beta,tau,final_loss,final_accuracy,wall_time_sec\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.method << ',' << r.alpha << ',' << r.beta << ',' << r.tau << ','
        << r.final_loss << ',' << r.final_accuracy << ',' << r.wall_time_sec << '\n';
  }
}

// Writes <run_id>.metrics.jsonl, <run_id>.config.json and <run_id>.model.json.
inline void write_run_files(const RunResult& res, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw Error(out_dir + "/" + name + ": cannot open for writing");
    return out;
  };
  {
    auto out = open(res.config.run_id + ".metrics.jsonl");
    write_events_jsonl(out, res.events, res.config.emit_timing);
  }
  {
    auto out = open(res.config.run_id + ".config.json");
    out << config_to_string(res.config);
  }
  {
    auto out = open(res.config.run_id + ".model.json");
    out << model_to_json(res.final_model).dump(2) << '\n';
  }
}

inline void append_summary(const std::vector<RunResult>& results, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream out(fs::path(out_dir) / "summary.csv");
  if (!out) throw Error(out_dir + "/summary.csv: cannot open for writing");
  std::vector<SummaryRow> rows;
  rows.reserve(results.size());
  for (const auto& r : results) rows.push_back(summary_of(r));
  write_summary_csv(out, rows);
}

// ---------------------------------------------------------------------------
// Presets
//
// Desk-scale counterparts of the heterogeneity experiments: dataset sizes and
// round counts shrink, the schedule shapes (c/sqrt(r+1) global, 1/(t+offset)
// local, ceil(tau sqrt(r+1)) budgets) stay.

// The square-summable-step long run: warm-started lower-level solves in the
// fast 1/(H+offset) regime make the estimator error decay with the round
// budget, which the asymptotic gradient-norm trend rides on.
inline RunConfig longrun_config() {
  RunConfig c;
  c.run_id = "asymptotic";
  c.dataset.kind = "synth";
  c.dataset.classes = 10;
  c.dataset.feature_dim = 20;
  c.dataset.per_class = 60;
  c.dataset.spread = 1.0;
  c.num_clients = 10;
  c.rounds = 10000;
  c.tau = {1.0};
  c.alpha = 1000.0;
  c.beta = 1.0;
  c.lambda = 0.5;
  c.mu = 1.0;
  c.local_schedule = {1.0, 2.0};
  c.global_step_c = 1.0;
  c.global_step_p = 0.75;
  c.server_batch = 1000000;
  c.client_batch = 1;
  c.warm_start = true;
  c.eval_every_rounds = 0;
  c.data_seed = 5;
  c.algo_seed = 5;
  return c;
}

inline std::string setting_tag(double alpha, double beta) {
  std::string a = (alpha >= 1000.0) ? "1000" : (alpha >= 1.0 ? "1" : "0.1");
  std::string b = std::to_string(static_cast<int>(std::lround(beta * 100.0)));
  return "a" + a + "_b" + b;
}

inline std::vector<std::pair<double, double>> heterogeneity_settings() {
  return {{1000.0, 0.9}, {1.0, 0.5}, {0.1, 0.1}};
}

inline RunConfig desk_base_config() {
  RunConfig c;
  c.dataset.kind = "synth";
  c.dataset.classes = 10;
  c.dataset.feature_dim = 20;
  c.dataset.per_class = 100;
  c.dataset.spread = 1.0;
  c.num_clients = 10;
  c.eta = 0.1;
  c.global_step_c = 0.3;
  c.global_step_p = 0.5;
  c.tau = {20.0};
  c.local_schedule = {0.1, 1.0};
  c.lambda = 1.0;
  c.mu = 1.0;
  c.alpha = 1000.0;
  c.beta = 1.0;
  c.server_batch = 1000000;  // clamped to the full server shard
  c.client_batch = 1;
  c.rounds = 300;
  c.eval_every_rounds = 0;
  c.eval_budget_steps = 500;
  return c;
}

// The local-budget comparison runs: the lower-level solves sit in the fast
// 1/(H+offset) regime, so the budget directly sets the estimator error, and
// aggregation keeps 1/m weighting so a lone participant cannot dominate a
// round.
inline RunConfig tau_compare_config(double alpha, double beta, double tau) {
  RunConfig c = desk_base_config();
  c.alpha = alpha;
  c.beta = beta;
  c.tau = {tau};
  c.rounds = 240;
  c.lambda = 7.0;
  c.mu = 2.0;
  c.local_schedule = {1.0, 2.0};
  c.global_step_c = 0.15;
  c.renormalize_participation = false;
  c.eval_every_rounds = 10;
  c.eval_budget_steps = 200;
  c.run_id = "taucmp_" + setting_tag(alpha, beta) + "_tau" +
             std::to_string(static_cast<int>(tau));
  return c;
}

// The accuracy-comparison runs behind the desk-scale method table. Baseline
// learning rate and prox weight come from a small grid over
// {0.02, 0.05, 0.1, 0.2} x {0.01, 0.1}, best for the baselines on this data.
inline RunConfig accuracy_compare_config(Method method, double alpha, double beta,
                                         bool full_scale = false) {
  RunConfig c = desk_base_config();
  c.method = method;
  c.alpha = alpha;
  c.beta = beta;
  c.tau = {20.0};
  c.rounds = full_scale ? 500 : 300;
  c.dataset.per_class = 60;
  c.dataset.spread = 0.8;
  c.lambda = 0.5;
  c.mu = 1.0;
  c.renormalize_participation = false;
  c.baseline_match_tau = true;
  c.baseline_local_lr = 0.02;
  c.baseline_prox_mu = (method == Method::FedProx) ? 0.01 : 0.0;
  if (full_scale) {
    c.dataset = DatasetSource{};
    c.dataset.kind = "idx";
    c.dataset.images = "data/mnist/train-images-idx3-ubyte";
    c.dataset.labels = "data/mnist/train-labels-idx1-ubyte";
    c.server_batch = 64;
    c.client_batch = 32;
  }
  c.run_id = std::string(full_scale ? "table1full_" : "table1_") + setting_tag(alpha, beta) +
             "_" + method_name(method);
  return c;
}

inline std::vector<RunConfig> preset_configs(const std::string& name) {
  std::vector<RunConfig> out;
  if (name == "smoke") {
    RunConfig c = desk_base_config();
    c.run_id = "smoke";
    c.dataset.classes = 3;
    c.dataset.feature_dim = 4;
    c.dataset.per_class = 30;
    c.num_clients = 3;
    c.tau = {2.0};
    c.rounds = 10;
    c.eval_every_rounds = 5;
    out.push_back(c);
    return out;
  }
  if (name == "tau-compare-desk") {
    for (const auto& [alpha, beta] : heterogeneity_settings()) {
      for (double tau : {5.0, 20.0, 50.0}) {
        out.push_back(tau_compare_config(alpha, beta, tau));
      }
    }
    return out;
  }
  if (name == "table1-desk" || name == "table1-full") {
    const bool full = (name == "table1-full");
    for (const auto& [alpha, beta] : heterogeneity_settings()) {
      for (Method method :
           {Method::ZoHFL, Method::FedAvg, Method::FedProx, Method::Scaffold}) {
        out.push_back(accuracy_compare_config(method, alpha, beta, full));
      }
    }
    return out;
  }
  if (name == "asymptotic-desk") {
    out.push_back(longrun_config());
    return out;
  }
  throw ParameterError("preset: unknown name '" + name + "'");
}

}  // namespace zohfl
