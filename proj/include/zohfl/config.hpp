#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "zohfl/local_solver.hpp"
#include "zohfl/numkit.hpp"

namespace zohfl {

enum class Method { ZoHFL, FedAvg, FedProx, Scaffold };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::ZoHFL: return "zohfl";
    case Method::FedAvg: return "fedavg";
    case Method::FedProx: return "fedprox";
    case Method::Scaffold: return "scaffold";
  }
  return "unknown";
}

inline Method method_from_name(const std::string& s) {
  if (s == "zohfl") return Method::ZoHFL;
  if (s == "fedavg") return Method::FedAvg;
  if (s == "fedprox") return Method::FedProx;
  if (s == "scaffold") return Method::Scaffold;
  throw ParameterError("method: unknown value '" + s + "'");
}

struct DatasetSource {
  std::string kind = "synth";  // synth | idx | csv

  // synth
  int classes = 10;
  std::size_t feature_dim = 20;
  std::size_t per_class = 100;
  double spread = 1.0;

  // idx
  std::string images;
  std::string labels;

  // csv
  std::string path;
};

// Every tunable of a single run. The JSON form is the external config format;
// serialize -> parse -> serialize is byte-identical.
struct RunConfig {
  std::string run_id = "run";
  Method method = Method::ZoHFL;

  int num_clients = 10;        // m
  std::size_t rounds = 500;    // R
  double eta = 0.1;            // smoothing radius
  double global_step_c = 0.01; // gamma_r = c / (r+1)^p
  double global_step_p = 0.5;
  std::vector<double> tau{20.0};  // scalar broadcast or one entry per client
  LocalSchedule local_schedule{0.1, 1.0};
  double lambda = 0.1;
  double mu = 0.1;

  std::string constraint_kind = "unconstrained";  // unconstrained | ball | orthant
  double constraint_radius = 1.0;                 // ball only

  double alpha = 1000.0;  // Dirichlet concentration
  double beta = 1.0;      // participation fraction
  double server_fraction = 0.3;
  double test_fraction = 0.1;

  std::size_t server_batch = 1;
  std::size_t client_batch = 1;
  std::uint64_t data_seed = 1;
  std::uint64_t algo_seed = 1;

  DatasetSource dataset;

  std::size_t eval_every_rounds = 0;  // 0: evaluate only after the last round
  std::size_t eval_budget_steps = 500;

  std::string weight_mode = "samples";  // samples: w_i = N_i/N_tr; uniform: 1/m
  bool renormalize_participation = true;
  bool warm_start = false;
  bool shared_noise = false;
  bool parallel_clients = false;
  bool emit_timing = false;

  // baseline knobs
  std::size_t baseline_local_steps = 20;
  bool baseline_match_tau = true;  // per-round steps = 2*ceil(tau*sqrt(r+1))
  double baseline_local_lr = 0.05;
  double baseline_prox_mu = 0.0;

  double tau_for(int client) const {
    if (tau.size() == 1) return tau[0];
    return tau[static_cast<std::size_t>(client)];
  }

  ConstraintSpec constraint() const {
    if (constraint_kind == "unconstrained") return ConstraintSpec::unconstrained();
    if (constraint_kind == "ball") return ConstraintSpec::ball(constraint_radius);
    if (constraint_kind == "orthant") return ConstraintSpec::orthant();
    throw ParameterError("constraint_kind: unknown value '" + constraint_kind + "'");
  }

  void validate() const;
};

inline void RunConfig::validate() const {
  if (run_id.empty()) throw ParameterError("run_id: must not be empty");
  if (num_clients < 1) throw ParameterError("num_clients: must be >= 1");
  if (!(eta > 0.0)) throw ParameterError("eta: must be > 0");
  if (!(global_step_c > 0.0)) throw ParameterError("global_step_c: must be > 0");
  if (!(global_step_p >= 0.5 && global_step_p <= 1.0)) {
    throw ParameterError("global_step_p: must be in [0.5, 1]");
  }
  if (tau.empty() || (tau.size() != 1 && tau.size() != static_cast<std::size_t>(num_clients))) {
    throw ParameterError("tau: need one entry or one per client");
  }
  for (double t : tau) {
    if (!(t > 0.0)) throw ParameterError("tau: entries must be > 0");
  }
  local_schedule.validate();
  if (lambda < 0.0) throw ParameterError("lambda: must be >= 0");
  if (!(mu > 0.0)) throw ParameterError("mu: must be > 0");
  constraint();  // validates kind and radius
  if (!(alpha > 0.0)) throw ParameterError("alpha: must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("beta: must be in (0, 1]");
  if (!(server_fraction >= 0.0 && server_fraction < 1.0)) {
    throw ParameterError("server_fraction: must be in [0, 1)");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ParameterError("test_fraction: must be in (0, 1)");
  }
  if (server_batch == 0) throw ParameterError("server_batch: must be >= 1");
  if (client_batch == 0) throw ParameterError("client_batch: must be >= 1");
  if (dataset.kind == "synth") {
    if (dataset.classes < 2) throw ParameterError("dataset.classes: must be >= 2");
    if (dataset.feature_dim < 2) throw ParameterError("dataset.feature_dim: must be >= 2");
    if (dataset.per_class == 0) throw ParameterError("dataset.per_class: must be >= 1");
    if (!(dataset.spread > 0.0)) throw ParameterError("dataset.spread: must be > 0");
  } else if (dataset.kind == "idx") {
    if (dataset.images.empty()) throw ParameterError("dataset.images: path required");
    if (dataset.labels.empty()) throw ParameterError("dataset.labels: path required");
  } else if (dataset.kind == "csv") {
    if (dataset.path.empty()) throw ParameterError("dataset.path: path required");
  } else {
    throw ParameterError("dataset.kind: unknown value '" + dataset.kind + "'");
  }
  if (weight_mode != "samples" && weight_mode != "uniform") {
    throw ParameterError("weight_mode: must be 'samples' or 'uniform'");
  }
  if (method != Method::ZoHFL) {
    if (baseline_local_steps == 0) throw ParameterError("baseline_local_steps: must be >= 1");
    if (!(baseline_local_lr > 0.0)) throw ParameterError("baseline_local_lr: must be > 0");
    if (baseline_prox_mu < 0.0) throw ParameterError("baseline_prox_mu: must be >= 0");
    if (method != Method::FedProx && baseline_prox_mu != 0.0) {
      throw ParameterError("baseline_prox_mu: only fedprox uses a prox term");
    }
  }
}

// ---------------------------------------------------------------------------
// JSON round trip

namespace detail {

template <typename T>
T get_field(const nlohmann::json& j, const std::string& path, const std::string& key,
            const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(path.empty() ? key + ": " + e.what()
                                      : path + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json to_json(const DatasetSource& d) {
  nlohmann::json j;
  j["kind"] = d.kind;
  if (d.kind == "synth") {
    j["classes"] = d.classes;
    j["feature_dim"] = d.feature_dim;
    j["per_class"] = d.per_class;
    j["spread"] = d.spread;
  } else if (d.kind == "idx") {
    j["images"] = d.images;
    j["labels"] = d.labels;
  } else if (d.kind == "csv") {
    j["path"] = d.path;
  }
  return j;
}

inline DatasetSource dataset_from_json(const nlohmann::json& j) {
  DatasetSource d;
  d.kind = detail::get_field(j, "dataset", "kind", d.kind);
  d.classes = detail::get_field(j, "dataset", "classes", d.classes);
  d.feature_dim = detail::get_field(j, "dataset", "feature_dim", d.feature_dim);
  d.per_class = detail::get_field(j, "dataset", "per_class", d.per_class);
  d.spread = detail::get_field(j, "dataset", "spread", d.spread);
  d.images = detail::get_field(j, "dataset", "images", d.images);
  d.labels = detail::get_field(j, "dataset", "labels", d.labels);
  d.path = detail::get_field(j, "dataset", "path", d.path);
  return d;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["run_id"] = c.run_id;
  j["method"] = method_name(c.method);
  j["num_clients"] = c.num_clients;
  j["rounds"] = c.rounds;
  j["eta"] = c.eta;
  j["global_step_c"] = c.global_step_c;
  j["global_step_p"] = c.global_step_p;
  j["tau"] = c.tau;
  j["local_gamma0"] = c.local_schedule.gamma0;
  j["local_gamma_offset"] = c.local_schedule.offset;
  j["lambda"] = c.lambda;
  j["mu"] = c.mu;
  j["constraint_kind"] = c.constraint_kind;
  j["constraint_radius"] = c.constraint_radius;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["server_fraction"] = c.server_fraction;
  j["test_fraction"] = c.test_fraction;
  j["server_batch"] = c.server_batch;
  j["client_batch"] = c.client_batch;
  j["data_seed"] = c.data_seed;
  j["algo_seed"] = c.algo_seed;
  j["dataset"] = to_json(c.dataset);
  j["eval_every_rounds"] = c.eval_every_rounds;
  j["eval_budget_steps"] = c.eval_budget_steps;
  j["weight_mode"] = c.weight_mode;
  j["renormalize_participation"] = c.renormalize_participation;
  j["warm_start"] = c.warm_start;
  j["shared_noise"] = c.shared_noise;
  j["parallel_clients"] = c.parallel_clients;
  j["emit_timing"] = c.emit_timing;
  j["baseline_local_steps"] = c.baseline_local_steps;
  j["baseline_match_tau"] = c.baseline_match_tau;
  j["baseline_local_lr"] = c.baseline_local_lr;
  j["baseline_prox_mu"] = c.baseline_prox_mu;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  using detail::get_field;
  c.run_id = get_field(j, "", "run_id", c.run_id);
  c.method = method_from_name(get_field(j, "", "method", method_name(c.method)));
  c.num_clients = get_field(j, "", "num_clients", c.num_clients);
  c.rounds = get_field(j, "", "rounds", c.rounds);
  c.eta = get_field(j, "", "eta", c.eta);
  c.global_step_c = get_field(j, "", "global_step_c", c.global_step_c);
  c.global_step_p = get_field(j, "", "global_step_p", c.global_step_p);
  if (j.contains("tau")) {
    if (j.at("tau").is_array()) {
      c.tau = get_field(j, "", "tau", c.tau);
    } else {
      c.tau = {get_field(j, "", "tau", c.tau[0])};
    }
  }
  c.local_schedule.gamma0 = get_field(j, "", "local_gamma0", c.local_schedule.gamma0);
  c.local_schedule.offset = get_field(j, "", "local_gamma_offset", c.local_schedule.offset);
  c.lambda = get_field(j, "", "lambda", c.lambda);
  c.mu = get_field(j, "", "mu", c.mu);
  c.constraint_kind = get_field(j, "", "constraint_kind", c.constraint_kind);
  c.constraint_radius = get_field(j, "", "constraint_radius", c.constraint_radius);
  c.alpha = get_field(j, "", "alpha", c.alpha);
  c.beta = get_field(j, "", "beta", c.beta);
  c.server_fraction = get_field(j, "", "server_fraction", c.server_fraction);
  c.test_fraction = get_field(j, "", "test_fraction", c.test_fraction);
  c.server_batch = get_field(j, "", "server_batch", c.server_batch);
  c.client_batch = get_field(j, "", "client_batch", c.client_batch);
  c.data_seed = get_field(j, "", "data_seed", c.data_seed);
  c.algo_seed = get_field(j, "", "algo_seed", c.algo_seed);
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
  c.eval_every_rounds = get_field(j, "", "eval_every_rounds", c.eval_every_rounds);
  c.eval_budget_steps = get_field(j, "", "eval_budget_steps", c.eval_budget_steps);
  c.weight_mode = get_field(j, "", "weight_mode", c.weight_mode);
  c.renormalize_participation =
      get_field(j, "", "renormalize_participation", c.renormalize_participation);
  c.warm_start = get_field(j, "", "warm_start", c.warm_start);
  c.shared_noise = get_field(j, "", "shared_noise", c.shared_noise);
  c.parallel_clients = get_field(j, "", "parallel_clients", c.parallel_clients);
  c.emit_timing = get_field(j, "", "emit_timing", c.emit_timing);
  c.baseline_local_steps = get_field(j, "", "baseline_local_steps", c.baseline_local_steps);
  c.baseline_match_tau = get_field(j, "", "baseline_match_tau", c.baseline_match_tau);
  c.baseline_local_lr = get_field(j, "", "baseline_local_lr", c.baseline_local_lr);
  c.baseline_prox_mu = get_field(j, "", "baseline_prox_mu", c.baseline_prox_mu);
  return c;
}

inline std::string config_to_string(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline RunConfig config_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace zohfl
