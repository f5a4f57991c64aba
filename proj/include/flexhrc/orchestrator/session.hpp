#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexhrc/andor/paths.hpp"
#include "flexhrc/andor/planner.hpp"
#include "flexhrc/orchestrator/controller.hpp"
#include "flexhrc/orchestrator/ledger.hpp"
#include "flexhrc/orchestrator/scenario.hpp"
#include "flexhrc/orchestrator/trace.hpp"
#include "flexhrc/recognition/detector.hpp"

namespace flexhrc::orchestrator {

enum class SessionMode { normal, ambiguous, solved, failed };
const char* to_string(SessionMode mode);

/// Seconds an injected robot failure lets an attempt run before aborting it.
inline constexpr double kInjectedFailureAfter = 1.0;

/// One cooperation run: the planner, the gesture recognizer, the robot
/// controller and the timing ledger advanced together on a fixed-step clock.
///
/// Each tick at time t: inputs stamped at or before t are delivered, queued
/// events (gestures, robot completions) are processed in time order, the
/// planner reacts to newly solved nodes, the current suggestion is
/// dispatched, the ambiguity timeout is checked, and the controller
/// integrates one step.
class Session {
 public:
  /// With `scripted` false the scenario script is ignored and human input
  /// arrives only through inject_action / push_samples.
  explicit Session(Scenario scenario, bool scripted = true);

  /// A recognized human action (by id or name) at `t_rec` (default: now).
  void inject_action(const std::string& action, std::optional<Micros> t_rec = std::nullopt);
  /// Raw inertial samples for the recognizer; timestamps are session seconds
  /// and must not precede the current time.
  void push_samples(const std::vector<recognition::InertialSample>& samples);

  void step();
  /// Steps until the clock reaches t or the session ends.
  void advance_to(Micros t);
  /// Steps until idle (see idle()) or ended.
  void advance_until_idle();
  /// Steps until the session ends (solved, failed or out of time).
  void run();

  bool ended() const { return mode_ == SessionMode::solved || mode_ == SessionMode::failed; }
  /// Nothing can happen without new external input: no robot motion, no
  /// queued input or events, and the planner waits for the human.
  bool idle() const;

  SessionMode mode() const { return mode_; }
  Micros now() const { return now_; }
  const std::string& end_reason() const { return end_reason_; }
  const Scenario& scenario() const { return scenario_; }
  const andor::AndOrGraph& graph() const { return graph_; }
  const andor::PathSet& paths() const { return paths_; }
  const TimingLedger& ledger() const { return ledger_; }
  const Trace& trace() const { return trace_; }
  Trace& trace() { return trace_; }
  const Controller& controller() const { return controller_; }
  /// Current planner output as served to clients.
  nlohmann::json suggestion_json() const;
  /// Human actions the planner currently waits for.
  std::vector<std::string> expected_actions() const { return {expected_.begin(), expected_.end()}; }

 private:
  struct Gesture {
    std::string action;  // action name as recognized
    Micros t_start = 0;
    Micros t_end = 0;
    Micros t_rec = 0;
    std::size_t ref = 0;  // ledger record
    bool scripted = false;
  };
  struct Event {
    enum class Kind { gesture, robot_done } kind = Kind::gesture;
    Gesture gesture;
    bool success = false;
  };
  struct Marker {
    Micros t = 0;
    std::string action;
  };
  struct Sample {
    recognition::InertialSample s;
    bool segment_start = false;
  };
  struct RobotRun {
    std::string action_id;
    std::string program;
    andor::ArcIndex arc = 0;
    std::size_t ref = 0;
    Micros start = 0;
    std::optional<Micros> fail_at;
  };
  struct Suggested {
    andor::Agent agent = andor::Agent::human;
    std::string action_id;
    std::string action_name;
    andor::NodeIndex node = 0;
    andor::ArcIndex arc = 0;
    andor::PathIndex path = 0;
    bool operator==(const Suggested&) const = default;
  };

  void schedule_script();
  void deliver_inputs();
  void process_events();
  void update_planner();
  void dispatch();
  void tick_controller();

  void enqueue(Micros t, Event e);
  void handle_gesture(const Gesture& g, Micros t);
  void handle_robot_done(bool success, Micros t);
  void commit(const Gesture& g, andor::ArcIndex arc, Micros t);
  void resolve_ambiguity(Micros t);
  void unmatched(const Gesture& g, Micros t, const char* why);
  void set_mode(SessionMode mode, Micros t);
  void finish(SessionMode mode, const std::string& reason);
  void start_robot(const Suggested& s);
  void stop_robot(Micros t, bool halt);
  void refresh_expected(Micros t);
  std::set<std::string> ambiguity_expectations() const;

  nlohmann::json suggestion_record(const Suggested& s) const;
  std::optional<double> model_duration(const std::string& action) const;
  Micros tick() const { return controller_.config().tick; }

  Scenario scenario_;
  bool scripted_;
  andor::AndOrGraph graph_;
  andor::PathSet paths_;
  Trace trace_;
  TimingLedger ledger_;
  Controller controller_;
  std::optional<recognition::GestureRecognizer> recognizer_;

  Micros now_ = 0;
  std::uint64_t ticks_ = 0;
  SessionMode mode_ = SessionMode::normal;
  std::string end_reason_;

  // Planner state.
  bool planner_dirty_ = true;
  std::vector<andor::NodeIndex> solved_queue_;
  andor::Suggestion suggestion_;
  std::optional<Suggested> suggested_;
  std::optional<Suggested> emitted_;
  std::optional<andor::PathIndex> p_c_;
  bool needs_output_ = false;
  bool retry_ = false;

  // Robot state.
  std::optional<RobotRun> robot_;
  std::map<std::string, int> failures_left_;
  std::map<std::string, int> failed_attempts_;
  double tick_activation_ = 0.0;

  // Ambiguity.
  std::vector<Gesture> buffer_;
  Micros ambiguous_since_ = 0;

  // Inputs.
  std::map<std::pair<Micros, std::uint64_t>, Event> events_;
  std::uint64_t event_seq_ = 0;
  std::deque<Sample> samples_;
  std::deque<Marker> markers_;
  std::size_t next_entry_ = 0;
  std::size_t recognized_scripted_ = 0;
  std::optional<Micros> last_scripted_rec_;
  Micros input_free_at_ = 0;  // end of the last scheduled stream segment
  std::optional<std::string> segment_truth_;

  std::set<std::string> expected_;
  std::map<std::string, Micros> expected_since_;
};

}  // namespace flexhrc::orchestrator
