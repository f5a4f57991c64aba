#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace flexhrc::orchestrator {

/// Session clock unit. Integer microseconds keep every timing sum exact.
using Micros = std::int64_t;

inline constexpr Micros kMicrosPerSecond = 1'000'000;
inline double to_seconds(Micros t) { return static_cast<double>(t) / kMicrosPerSecond; }
Micros from_seconds(double s);

struct Metrics {
  Micros total = 0;
  Micros t_ao = 0;     // reasoning: planner output minus the acknowledgement it answers
  Micros t_h_bar = 0;  // human: recognition minus prompt, over prompted human actions
  Micros t_h = 0;      // t_h_bar plus every switch interval
  Micros t_r = 0;      // robot: completion minus dispatch, over finished attempts
  int switches = 0;    // k
  int actions = 0;     // acknowledged actions

  double percent(Micros part) const { return total > 0 ? 100.0 * static_cast<double>(part) / total : 0.0; }
  nlohmann::json to_json() const;
  static Metrics from_json(const nlohmann::json& j);
  bool operator==(const Metrics&) const = default;
};

/// Per-action timestamps. Absent values were never observed.
struct ActionTiming {
  std::string action;
  std::string agent;  // "human" or "robot"
  std::optional<Micros> t_next;   // prompt that the action answered
  std::optional<Micros> t_start;  // robot dispatch, or estimated gesture onset
  std::optional<Micros> t_end;    // robot completion, or gesture end
  std::optional<Micros> t_rec;    // human recognition instant
  std::optional<Micros> t_ack;    // registration in the graph
  bool counted = true;            // false when the action fell inside a switch interval
};

struct SwitchTiming {
  Micros t = 0;
  std::string from;
  std::string to;
  Micros window_start = 0;  // start of the action current on the abandoned path
  Micros window_end = 0;    // first planner output after the switch
};

enum class OutputKind {
  robot_dispatch,  // a robot action is dispatched (or retried)
  human_prompt,    // a human action is suggested
  ambiguity,       // the planner waits for disambiguating input
};

const char* to_string(OutputKind kind);

/// Timing accumulators updated as the session runs.
///
/// Every planner output answers the pending acknowledgement, adding to t_ao.
/// A human action is charged from the prompt it consumed to its recognition,
/// once the next output confirms that its registration did not switch paths.
/// A switching batch is charged through the switch interval instead: from the
/// start of the action current on the old path (the preempted robot attempt,
/// or the last suggestion) to the first output after the switch, or nothing
/// when the running robot action survives the switch.
class TimingLedger {
 public:
  void output(Micros t, OutputKind kind);
  /// A gesture accepted at its recognition instant t_rec; consumes the open
  /// human prompt, if any. Returns the record index.
  std::size_t recognized(const std::string& action, Micros t_start, Micros t_end, Micros t_rec);
  std::size_t robot_started(const std::string& action, Micros t);
  /// Finished attempt (successful or not); counts towards t_r.
  void robot_finished(std::size_t record, Micros t);
  /// Abandoned attempt: never reaches t_r.
  void robot_preempted(std::size_t record, Micros t);
  /// Registration of a record's action in the graph.
  void acknowledged(std::size_t record, Micros t);
  void switched(Micros t, const std::string& from, const std::string& to);
  void finish(Micros t);

  const Metrics& metrics() const { return metrics_; }
  const std::vector<ActionTiming>& actions() const { return actions_; }
  const std::vector<SwitchTiming>& switches() const { return switches_; }
  bool finished() const { return finished_; }

 private:
  void commit_human();

  Metrics metrics_;
  std::vector<ActionTiming> actions_;
  std::vector<SwitchTiming> switches_;
  std::optional<Micros> pending_ack_;
  std::optional<Micros> open_prompt_;
  std::optional<Micros> last_suggestion_;
  std::optional<std::size_t> running_robot_;
  std::optional<std::size_t> preempted_since_switch_;
  bool switch_open_ = false;
  std::vector<std::size_t> uncommitted_;
  bool finished_ = false;
};

/// Recomputes the metrics from raw trace records (the parsed NDJSON lines),
/// without consulting the in-run accumulators stored in the trace.
Metrics recompute_metrics(const std::vector<nlohmann::json>& records);

}  // namespace flexhrc::orchestrator
