#include "flexhrc/orchestrator/session.hpp"

#include <algorithm>
#include <cmath>

#include "flexhrc/error.hpp"
#include "flexhrc/recognition/synth.hpp"

namespace flexhrc::orchestrator {

using andor::Agent;
using andor::ArcIndex;
using andor::AndOrGraph;
using nlohmann::json;

const char* to_string(SessionMode mode) {
  switch (mode) {
    case SessionMode::normal: return "normal";
    case SessionMode::ambiguous: return "ambiguous";
    case SessionMode::solved: return "solved";
    case SessionMode::failed: return "failed";
  }
  return "?";
}

namespace {

/// Human action names that some arc would accept next.
std::set<std::string> matchable_human_actions(const AndOrGraph& g) {
  std::set<std::string> out;
  for (const auto& arc : g.arcs()) {
    if (!arc.matchable()) continue;
    if (arc.ordered) {
      if (const auto* a = arc.first_unended(); a && a->agent == Agent::human) out.insert(a->name);
    } else {
      for (const auto& a : arc.actions)
        if (!a.ended && a.agent == Agent::human) out.insert(a.name);
    }
  }
  return out;
}

/// Registers tokens[i] on `arc` in a scratch copy of the graph and follows
/// every interpretation of the remaining tokens. An interpretation holds when
/// each token matches some arc and no arc already credited with an earlier
/// token is disabled by a later one. `leaf` is called on the graph state at
/// the end of every interpretation that holds; returns whether any held.
template <typename Leaf>
bool interpret(AndOrGraph g, const std::vector<std::string>& tokens, std::size_t i, ArcIndex arc,
               std::vector<ArcIndex> credited, Leaf&& leaf) {
  try {
    andor::register_action_ended(g, tokens[i], Agent::human, arc);
  } catch (const Error&) {
    return false;
  }
  credited.push_back(arc);
  for (ArcIndex c : credited)
    if (g.arc(c).inactivated) return false;
  andor::update_all_feasibility(g);
  if (i + 1 == tokens.size()) {
    leaf(g);
    return true;
  }
  bool any = false;
  for (ArcIndex next : andor::matching_arcs(g, tokens[i + 1], Agent::human))
    any = interpret(g, tokens, i + 1, next, credited, leaf) || any;
  return any;
}

}  // namespace

Session::Session(Scenario scenario, bool scripted)
    : scenario_(std::move(scenario)),
      scripted_(scripted),
      graph_(scenario_.graph),
      paths_(andor::generate_all_paths(graph_)),
      controller_(scenario_.world, scenario_.programs, scenario_.controller) {
  andor::apply_color_tags(graph_, paths_, graph_.color_tags());
  if (!scenario_.models.empty()) recognizer_.emplace(scenario_.models);
  failures_left_ = scenario_.robot_failures;

  json models = json::array();
  for (const auto& m : scenario_.models) models.push_back(m.name);
  trace_.append("session_start", 0,
                {{"scenario", scenario_.name},
                 {"seed", scenario_.seed},
                 {"input", scenario_.input == InputMode::stream ? "stream" : "tokens"},
                 {"scripted", scripted_},
                 {"tick_us", tick()},
                 {"models", std::move(models)},
                 {"paths", andor::path_report(graph_, paths_)},
                 {"world", controller_.world().to_json()}});
}

std::optional<double> Session::model_duration(const std::string& action) const {
  for (const auto& m : scenario_.models)
    if (m.name == action) return m.duration();
  return std::nullopt;
}

// ---------------------------------------------------------------- inputs

void Session::inject_action(const std::string& action, std::optional<Micros> t_rec) {
  if (ended()) throw Error(ErrorKind::invalid_state, "session has ended");
  std::optional<std::string> name;
  for (const auto& arc : graph_.arcs())
    for (const auto& a : arc.actions)
      if (a.agent == Agent::human && a.answers_to(action)) name = a.name;
  if (!name) throw Error(ErrorKind::unknown_id, "human action '" + action + "'");
  const Micros t = std::max(t_rec.value_or(now_), now_);
  Event e;
  e.gesture.action = *name;
  e.gesture.t_rec = e.gesture.t_end = t;
  e.gesture.t_start = t - from_seconds(model_duration(*name).value_or(0.0));
  enqueue(t, std::move(e));
}

void Session::push_samples(const std::vector<recognition::InertialSample>& samples) {
  if (ended()) throw Error(ErrorKind::invalid_state, "session has ended");
  if (!recognizer_) throw Error(ErrorKind::invalid_state, "scenario has no gesture models");
  double last = samples_.empty() ? to_seconds(now_) : samples_.back().s.t;
  for (const auto& s : samples) {
    if (!s.acc.allFinite()) throw Error(ErrorKind::invalid_argument, "non-finite sample");
    if (from_seconds(s.t) < now_ || s.t < last)
      throw Error(ErrorKind::invalid_argument, "sample timestamps must be non-decreasing and not in the past");
    last = s.t;
  }
  for (const auto& s : samples) samples_.push_back({s, false});
}

void Session::enqueue(Micros t, Event e) { events_.emplace(std::make_pair(t, event_seq_++), std::move(e)); }

void Session::refresh_expected(Micros t) {
  std::set<std::string> next;
  if (mode_ == SessionMode::ambiguous)
    next = ambiguity_expectations();
  else if (suggested_ && suggested_->agent == Agent::human)
    next.insert(suggested_->action_name);
  for (const auto& a : next)
    if (!expected_.count(a)) expected_since_[a] = t;
  for (auto it = expected_since_.begin(); it != expected_since_.end();)
    it = next.count(it->first) ? std::next(it) : expected_since_.erase(it);
  expected_ = std::move(next);
}

std::set<std::string> Session::ambiguity_expectations() const {
  std::set<std::string> out;
  if (buffer_.empty()) return out;
  std::vector<std::string> tokens;
  for (const auto& g : buffer_) tokens.push_back(g.action);
  for (ArcIndex c : andor::matching_arcs(graph_, tokens[0], Agent::human))
    interpret(graph_, tokens, 0, c, {}, [&](const AndOrGraph& g) {
      const auto names = matchable_human_actions(g);
      out.insert(names.begin(), names.end());
    });
  return out;
}

void Session::schedule_script() {
  if (!scripted_) return;
  while (next_entry_ < scenario_.script.size()) {
    const auto& e = scenario_.script[next_entry_];
    std::optional<Micros> onset;
    if (e.at) {
      onset = from_seconds(*e.at);
    } else {
      if (recognized_scripted_ < next_entry_) return;  // previous entry not recognized yet
      const Micros prev = last_scripted_rec_.value_or(0);
      if (e.after == ScriptEntry::Anchor::previous) {
        onset = prev + from_seconds(e.delay);
      } else {
        const auto it = expected_since_.find(e.action);
        if (it == expected_since_.end()) return;
        onset = std::max(it->second, prev) + from_seconds(e.delay);
      }
    }
    const Micros start = std::max({*onset, now_, input_free_at_});
    const std::size_t index = next_entry_++;
    if (scenario_.input == InputMode::tokens) {
      const double duration = model_duration(e.action).value_or(1.0);
      Event ev;
      ev.gesture.action = e.action;
      ev.gesture.t_start = start;
      ev.gesture.t_end = ev.gesture.t_rec = start + from_seconds(duration);
      ev.gesture.scripted = true;
      markers_.push_back({start, e.action});
      input_free_at_ = ev.gesture.t_rec;
      enqueue(ev.gesture.t_rec, std::move(ev));
    } else {
      const auto& model = scenario_.models.at(recognizer_->model_index(e.action));
      recognition::StreamLayout layout;
      layout.t0 = to_seconds(start);
      const auto seg = recognition::synthesize_gesture_stream(model, scenario_.noise,
                                                              scenario_.seed * 1000 + index, layout);
      for (std::size_t i = 0; i < seg.samples.size(); ++i) samples_.push_back({seg.samples[i], i == 0});
      markers_.push_back({from_seconds(seg.gesture_start), e.action});
      input_free_at_ = from_seconds(seg.samples.back().t) + 1;
    }
  }
}

void Session::deliver_inputs() {
  schedule_script();
  while (!markers_.empty() && markers_.front().t <= now_) {
    trace_.append("gesture_start", markers_.front().t, {{"action", markers_.front().action}});
    segment_truth_ = markers_.front().action;
    markers_.pop_front();
  }
  while (!samples_.empty() && from_seconds(samples_.front().s.t) <= now_) {
    const auto sample = samples_.front();
    samples_.pop_front();
    if (sample.segment_start) recognizer_->reset();
    const auto ev = recognizer_->push(sample.s);
    json values = json::array();
    for (const auto& tr : recognizer_->traces()) values.push_back(tr.value);
    const Micros ts = from_seconds(sample.s.t);
    trace_.append("possibility", ts, {{"values", std::move(values)}});
    if (!ev) continue;
    const auto& model = recognizer_->models()[ev->model];
    Event e;
    e.gesture.action = ev->name;
    e.gesture.t_end = from_seconds(ev->t_peak);
    e.gesture.t_start = e.gesture.t_end - from_seconds(model.duration());
    e.gesture.t_rec = from_seconds(ev->t_rec);
    e.gesture.scripted = segment_truth_.has_value();
    json rec{{"action", ev->name}, {"peak", ev->peak}, {"t_peak", e.gesture.t_end}};
    if (segment_truth_) rec["truth"] = *segment_truth_;
    trace_.append("gesture", e.gesture.t_rec, std::move(rec));
    segment_truth_.reset();
    enqueue(e.gesture.t_rec, std::move(e));
  }
}

// ---------------------------------------------------------------- events

void Session::process_events() {
  while (!events_.empty() && events_.begin()->first.first <= now_ && !ended()) {
    const auto node = events_.extract(events_.begin());
    const Micros t = node.key().first;
    const Event& e = node.mapped();
    if (e.kind == Event::Kind::gesture)
      handle_gesture(e.gesture, t);
    else
      handle_robot_done(e.success, t);
  }
}

void Session::handle_gesture(const Gesture& in, Micros t) {
  Gesture g = in;
  if (g.scripted) {
    ++recognized_scripted_;
    last_scripted_rec_ = g.t_rec;
  }
  const auto matches = andor::matching_arcs(graph_, g.action, Agent::human);
  if (mode_ == SessionMode::normal && matches.empty()) {
    unmatched(g, t, "no arc accepts the action");
    return;
  }
  g.ref = ledger_.recognized(g.action, g.t_start, g.t_end, g.t_rec);
  trace_.append("human_action", g.t_rec,
                {{"ref", g.ref}, {"action", g.action}, {"t_start", g.t_start}, {"t_end", g.t_end}});
  if (mode_ == SessionMode::normal && matches.size() == 1) {
    commit(g, matches.front(), t);
    return;
  }
  buffer_.push_back(g);
  resolve_ambiguity(t);
}

void Session::unmatched(const Gesture& g, Micros t, const char* why) {
  trace_.append("unmatched", t, {{"action", g.action}, {"reason", why}});
  try {
    andor::register_repetition(graph_, g.action, Agent::human);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::cooperation_failed) throw;
    finish(SessionMode::failed, err.what());
  }
}

void Session::commit(const Gesture& g, ArcIndex arc, Micros t) {
  andor::StateChanges changes;
  try {
    changes = andor::register_action_ended(graph_, g.action, Agent::human, arc);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::cooperation_failed) throw;
    finish(SessionMode::failed, err.what());
    return;
  }
  ledger_.acknowledged(g.ref, t);
  trace_.append("action_ended",
                t, {{"ref", g.ref}, {"agent", "human"}, {"action", g.action}, {"arc", graph_.arc(arc).id}});
  solved_queue_.insert(solved_queue_.end(), changes.solved.begin(), changes.solved.end());
  planner_dirty_ = true;
  needs_output_ = true;
}

void Session::resolve_ambiguity(Micros t) {
  while (!buffer_.empty() && !ended()) {
    const auto cands = andor::matching_arcs(graph_, buffer_.front().action, Agent::human);
    if (cands.empty()) {
      unmatched(buffer_.front(), t, "no longer accepted");
      buffer_.erase(buffer_.begin());
      continue;
    }
    std::vector<ArcIndex> holding;
    if (cands.size() == 1) {
      holding = cands;
    } else {
      std::vector<std::string> tokens;
      for (const auto& g : buffer_) tokens.push_back(g.action);
      for (ArcIndex c : cands)
        if (interpret(graph_, tokens, 0, c, {}, [](const AndOrGraph&) {})) holding.push_back(c);
    }
    if (holding.size() == 1) {
      const Gesture g = buffer_.front();
      buffer_.erase(buffer_.begin());
      commit(g, holding.front(), t);
      andor::update_all_feasibility(graph_);
      continue;
    }
    if (holding.empty()) {
      // The newest gesture fits no reading of the buffer.
      unmatched(buffer_.back(), t, "inconsistent with every interpretation");
      buffer_.pop_back();
      continue;
    }
    break;  // still ambiguous
  }
  if (ended()) return;
  if (buffer_.empty() && mode_ == SessionMode::ambiguous) {
    set_mode(SessionMode::normal, t);
    needs_output_ = true;
  } else if (!buffer_.empty()) {
    if (mode_ == SessionMode::normal) {
      set_mode(SessionMode::ambiguous, t);
      ambiguous_since_ = t;
    }
    needs_output_ = true;
  }
}

void Session::handle_robot_done(bool success, Micros t) {
  if (!robot_) return;
  const RobotRun run = *robot_;
  robot_.reset();
  ledger_.robot_finished(run.ref, t);
  trace_.append("robot_end", t, {{"ref", run.ref}, {"action", run.action_id}, {"success", success}});
  if (!success) {
    const int failed = ++failed_attempts_[run.action_id];
    if (failed >= scenario_.max_attempts) {
      finish(SessionMode::failed, "robot action " + run.action_id + " failed " + std::to_string(failed) + " times");
      return;
    }
    retry_ = true;
    return;
  }
  andor::StateChanges changes;
  try {
    changes = andor::register_action_ended(graph_, run.action_id, Agent::robot, run.arc);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::cooperation_failed) throw;
    finish(SessionMode::failed, err.what());
    return;
  }
  ledger_.acknowledged(run.ref, t);
  trace_.append("action_ended", t,
                {{"ref", run.ref}, {"agent", "robot"}, {"action", run.action_id}, {"arc", graph_.arc(run.arc).id}});
  solved_queue_.insert(solved_queue_.end(), changes.solved.begin(), changes.solved.end());
  planner_dirty_ = true;
  needs_output_ = true;
  if (mode_ == SessionMode::ambiguous) {
    andor::update_all_feasibility(graph_);
    resolve_ambiguity(t);
  }
}

// ---------------------------------------------------------------- planner

void Session::update_planner() {
  if (!planner_dirty_ || ended()) return;
  planner_dirty_ = false;
  try {
    if (solved_queue_.empty()) {
      suggestion_ = andor::next_suggested_node(graph_, paths_, std::nullopt);
    } else {
      for (auto n : solved_queue_) {
        suggestion_ = andor::next_suggested_node(graph_, paths_, n);
        if (suggestion_.graph_solved) break;
      }
      solved_queue_.clear();
    }
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::deadlock) throw;
    finish(SessionMode::failed, err.what());
    return;
  }
  trace_.append("graph", now_, {{"state", graph_.state_json()}, {"costs", [&] {
                                  json c = json::object();
                                  for (const auto& p : paths_) c[p.id] = p.cost;
                                  return c;
                                }()}});
  if (suggestion_.graph_solved || graph_.solved()) {
    finish(SessionMode::solved, "task solved");
    return;
  }
  if (!suggestion_.node || !suggestion_.arc || !suggestion_.path) {
    suggested_.reset();
    return;
  }
  const auto& arc = graph_.arc(*suggestion_.arc);
  const andor::ActionSpec* action = arc.first_unended();
  if (!arc.ordered)
    for (const auto& a : arc.actions)
      if (!a.ended) {
        action = &a;
        break;
      }
  if (!action) {
    suggested_.reset();
    return;
  }
  Suggested s{action->agent, action->id, action->name, *suggestion_.node, *suggestion_.arc, *suggestion_.path};
  if (p_c_ && *p_c_ != s.path) {
    const auto& from = paths_[*p_c_];
    const auto& to = paths_[s.path];
    ledger_.switched(now_, from.id, to.id);
    trace_.append("switch", now_,
                  {{"from", from.id},
                   {"to", to.id},
                   {"from_color", from.color_tag.value_or("")},
                   {"to_color", to.color_tag.value_or("")}});
  }
  p_c_ = s.path;
  suggested_ = s;
}

json Session::suggestion_record(const Suggested& s) const {
  const auto& path = paths_[s.path];
  return {{"agent", andor::to_string(s.agent)},
          {"action", s.action_id},
          {"name", s.action_name},
          {"node", graph_.node(s.node).id},
          {"arc", graph_.arc(s.arc).id},
          {"path", path.id},
          {"color", path.color_tag.value_or("")},
          {"cost", path.cost}};
}

void Session::start_robot(const Suggested& s) {
  RobotRun run;
  run.action_id = s.action_id;
  run.program = s.action_name;
  run.arc = s.arc;
  run.start = now_;
  run.ref = ledger_.robot_started(s.action_id, now_);
  if (auto it = failures_left_.find(s.action_id); it != failures_left_.end() && it->second > 0) {
    --it->second;
    run.fail_at = now_ + from_seconds(kInjectedFailureAfter);
  }
  controller_.start(s.action_id, s.action_name, now_);
  trace_.append("robot_start", now_,
                {{"ref", run.ref}, {"action", run.action_id}, {"program", run.program},
                 {"attempt", failed_attempts_[run.action_id] + 1}});
  robot_ = std::move(run);
}

void Session::stop_robot(Micros t, bool halt) {
  ledger_.robot_preempted(robot_->ref, t);
  trace_.append("robot_preempted", t, {{"ref", robot_->ref}, {"action", robot_->action_id}});
  if (halt) controller_.halt(t);
  robot_.reset();
}

void Session::dispatch() {
  if (ended()) return;
  if (mode_ == SessionMode::ambiguous) {
    if (!needs_output_) return;
    refresh_expected(now_);
    json cands = json::array();
    for (ArcIndex c : andor::matching_arcs(graph_, buffer_.front().action, Agent::human))
      cands.push_back(graph_.arc(c).id);
    json buffered = json::array();
    for (const auto& g : buffer_) buffered.push_back(g.action);
    trace_.append("ambiguous", now_,
                  {{"buffer", std::move(buffered)}, {"candidates", std::move(cands)}, {"expected", expected_}});
    ledger_.output(now_, OutputKind::ambiguity);
    needs_output_ = false;
    emitted_.reset();
    return;
  }
  if (!suggested_) return;
  const Suggested& s = *suggested_;
  if (emitted_ == s && !needs_output_ && !retry_) return;

  bool start = false;
  if (s.agent == Agent::robot) {
    if (robot_ && robot_->action_id != s.action_id) {
      if (robot_->program == s.action_name) {
        // Same motion under another action: keep moving.
        trace_.append("robot_relabel", now_, {{"ref", robot_->ref}, {"from", robot_->action_id}, {"to", s.action_id}});
        controller_.start(s.action_id, s.action_name, now_, true);
        robot_->action_id = s.action_id;
        robot_->arc = s.arc;
      } else {
        stop_robot(now_, false);
      }
    }
    start = !robot_;
  } else if (robot_) {
    stop_robot(now_, true);
  }
  json rec = suggestion_record(s);
  if (retry_) rec["retry"] = true;
  trace_.append("suggestion", now_, std::move(rec));
  ledger_.output(now_, s.agent == Agent::robot ? OutputKind::robot_dispatch : OutputKind::human_prompt);
  if (start) start_robot(s);
  emitted_ = s;
  needs_output_ = false;
  retry_ = false;
  refresh_expected(now_);
}

void Session::tick_controller() {
  const auto report = controller_.tick(now_);
  const Micros end = now_ + tick();
  tick_activation_ = 0.0;
  for (const auto& o : report.solver.objectives)
    if (o.id.find(".clearance.") != std::string::npos) tick_activation_ = std::max(tick_activation_, o.alpha_o);
  for (const auto& m : report.milestones) trace_.append("milestone", now_, {{"what", m}});
  if (!robot_) return;
  Event e;
  e.kind = Event::Kind::robot_done;
  if (robot_->fail_at && end >= *robot_->fail_at) {
    controller_.halt(end);
    e.success = false;
    enqueue(end, std::move(e));
    robot_->fail_at.reset();
  } else if (report.finished) {
    e.success = *report.finished;
    enqueue(end, std::move(e));
  }
}

// ---------------------------------------------------------------- driver

void Session::set_mode(SessionMode mode, Micros t) {
  if (mode == mode_) return;
  trace_.append("mode", t, {{"from", to_string(mode_)}, {"to", to_string(mode)}});
  mode_ = mode;
}

void Session::finish(SessionMode mode, const std::string& reason) {
  if (ended()) return;
  set_mode(mode, now_);
  end_reason_ = reason;
  ledger_.finish(now_);
  const auto& safety = controller_.safety();
  trace_.append("session_end", now_,
                {{"mode", to_string(mode)},
                 {"reason", reason},
                 {"metrics", ledger_.metrics().to_json()},
                 {"safety",
                  {{"min_clearance", std::isfinite(safety.min_clearance) ? json(safety.min_clearance) : json(nullptr)},
                   {"max_limit_violation", safety.max_limit_violation},
                   {"max_clearance_activation", safety.max_clearance_activation},
                   {"max_speed_ratio", safety.max_speed_ratio}}}});
}

void Session::step() {
  if (ended()) return;
  deliver_inputs();
  process_events();
  update_planner();
  dispatch();
  if (ended()) return;
  if (mode_ == SessionMode::ambiguous && now_ - ambiguous_since_ >= from_seconds(scenario_.ambiguity_timeout)) {
    finish(SessionMode::failed, "ambiguity not resolved in time");
    return;
  }
  if (ticks_ % 10 == 0) {
    trace_.append("robot", now_,
                  {{"frame", controller_.world().frame_json()},
                   {"action", robot_ ? json(robot_->action_id) : json(nullptr)},
                   {"phase", controller_.phase()},
                   {"activation", tick_activation_}});
  }
  // Expected actions may have changed through the planner; entries anchored
  // on them can be scheduled now.
  schedule_script();
  tick_controller();
  ++ticks_;
  now_ += tick();
  if (now_ >= from_seconds(scenario_.max_time)) finish(SessionMode::failed, "time limit reached");
}

void Session::advance_to(Micros t) {
  while (!ended() && now_ < t) step();
}

bool Session::idle() const {
  if (ended()) return true;
  if (robot_ || !events_.empty() || !samples_.empty() || !markers_.empty()) return false;
  if (planner_dirty_ || needs_output_ || retry_) return false;
  if (scripted_ && next_entry_ < scenario_.script.size()) return false;
  if (mode_ == SessionMode::ambiguous) return true;
  return suggested_ && suggested_->agent == Agent::human && emitted_ == suggested_;
}

void Session::advance_until_idle() {
  do step();
  while (!ended() && !idle());
}

void Session::run() {
  while (!ended()) step();
}

json Session::suggestion_json() const {
  json out{{"t", now_}, {"mode", to_string(mode_)}, {"expected", expected_}};
  if (suggested_ && mode_ == SessionMode::normal) out["suggestion"] = suggestion_record(*suggested_);
  if (mode_ == SessionMode::ambiguous) {
    json buffered = json::array();
    for (const auto& g : buffer_) buffered.push_back(g.action);
    out["buffer"] = std::move(buffered);
  }
  if (robot_) out["robot"] = {{"action", robot_->action_id}, {"phase", controller_.phase()}};
  if (ended()) out["reason"] = end_reason_;
  return out;
}

}  // namespace flexhrc::orchestrator
