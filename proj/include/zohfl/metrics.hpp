#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zohfl/errors.hpp"

namespace zohfl {

// Checkpoint evaluation of the true objective: the lower level is re-solved
// with a dedicated budget, never feeding back into the optimization.
struct EvalRecord {
  double implicit_loss = 0.0;  // f1 + weighted penalty at dedicated solves
  double f1_value = 0.0;
  double penalty_value = 0.0;
  double test_accuracy = 0.0;
};

struct RoundRecord {
  std::size_t round = 0;
  double global_loss_f1 = 0.0;
  // round-local estimate: mean over participants of (f2+ + f2-)/2
  double penalty_estimate = 0.0;
  double grad_estimate_norm = 0.0;
  std::vector<double> pm_gaps;    // per participant ||y+ - y-||
  std::vector<double> warm_gaps;  // per participant init-to-anchor distance
  std::size_t client_grad_evals = 0;
  double wall_time_sec = 0.0;
};

struct MetricEvent {
  std::string run_id;
  std::size_t round = 0;
  RoundRecord record;
  std::optional<EvalRecord> eval;
};

using MetricSink = std::function<void(const MetricEvent&)>;

// Timing is off by default so equal-seed runs produce byte-identical streams.
inline nlohmann::json event_to_json(const MetricEvent& e, bool with_timing = false) {
  nlohmann::json j;
  j["run_id"] = e.run_id;
  j["round"] = e.round;
  j["f1"] = e.record.global_loss_f1;
  j["penalty"] = e.record.penalty_estimate;
  j["grad_norm"] = e.record.grad_estimate_norm;
  j["pm_gaps"] = e.record.pm_gaps;
  if (!e.record.warm_gaps.empty()) j["warm_gaps"] = e.record.warm_gaps;
  j["client_grad_evals"] = e.record.client_grad_evals;
  if (with_timing) j["wall_time_sec"] = e.record.wall_time_sec;
  if (e.eval) {
    j["eval"] = {{"implicit_loss", e.eval->implicit_loss},
                 {"f1", e.eval->f1_value},
                 {"penalty", e.eval->penalty_value},
                 {"test_accuracy", e.eval->test_accuracy}};
  }
  return j;
}

inline void write_events_jsonl(std::ostream& out, const std::vector<MetricEvent>& events,
                               bool with_timing = false) {
  for (const auto& e : events) out << event_to_json(e, with_timing).dump() << '\n';
}

// Collects events in memory; also handy as a MetricSink.
struct EventLog {
  std::vector<MetricEvent> events;
  void operator()(const MetricEvent& e) { events.push_back(e); }
  MetricSink sink() {
    return [this](const MetricEvent& e) { events.push_back(e); };
  }
};

}  // namespace zohfl
