#include "flexhrc/orchestrator/ledger.hpp"

#include <cmath>
#include <map>

#include "flexhrc/error.hpp"

namespace flexhrc::orchestrator {

using nlohmann::json;

Micros from_seconds(double s) {
  if (!std::isfinite(s)) throw Error(ErrorKind::invalid_argument, "non-finite time");
  return static_cast<Micros>(std::llround(s * kMicrosPerSecond));
}

const char* to_string(OutputKind kind) {
  switch (kind) {
    case OutputKind::robot_dispatch: return "robot_dispatch";
    case OutputKind::human_prompt: return "human_prompt";
    case OutputKind::ambiguity: return "ambiguity";
  }
  return "?";
}

json Metrics::to_json() const {
  return {{"total_us", total},
          {"t_ao_us", t_ao},
          {"t_h_bar_us", t_h_bar},
          {"t_h_us", t_h},
          {"t_r_us", t_r},
          {"switches", switches},
          {"actions", actions},
          {"total_s", to_seconds(total)},
          {"t_ao_pct", percent(t_ao)},
          {"t_h_pct", percent(t_h)},
          {"t_r_pct", percent(t_r)}};
}

Metrics Metrics::from_json(const json& j) {
  Metrics m;
  m.total = j.at("total_us").get<Micros>();
  m.t_ao = j.at("t_ao_us").get<Micros>();
  m.t_h_bar = j.at("t_h_bar_us").get<Micros>();
  m.t_h = j.at("t_h_us").get<Micros>();
  m.t_r = j.at("t_r_us").get<Micros>();
  m.switches = j.at("switches").get<int>();
  m.actions = j.at("actions").get<int>();
  return m;
}

void TimingLedger::commit_human() {
  for (std::size_t r : uncommitted_) {
    const auto& a = actions_[r];
    if (a.t_next) metrics_.t_h_bar += *a.t_rec - *a.t_next;
  }
  uncommitted_.clear();
  metrics_.t_h = metrics_.t_h_bar;
  for (const auto& s : switches_) metrics_.t_h += s.window_end - s.window_start;
}

void TimingLedger::output(Micros t, OutputKind kind) {
  if (finished_) throw Error(ErrorKind::invalid_state, "ledger already closed");
  if (switch_open_) {
    auto& s = switches_.back();
    s.window_end = t;
    if (preempted_since_switch_)
      s.window_start = *actions_[*preempted_since_switch_].t_start;
    else if (running_robot_)
      s.window_start = t;  // the robot keeps working for the new path
    else
      s.window_start = last_suggestion_.value_or(0);
    switch_open_ = false;
    preempted_since_switch_.reset();
  }
  commit_human();
  if (pending_ack_) {
    metrics_.t_ao += t - *pending_ack_;
    pending_ack_.reset();
  }
  if (kind == OutputKind::robot_dispatch)
    open_prompt_.reset();
  else
    open_prompt_ = t;
  if (kind != OutputKind::ambiguity) last_suggestion_ = t;
}

std::size_t TimingLedger::recognized(const std::string& action, Micros t_start, Micros t_end, Micros t_rec) {
  ActionTiming a;
  a.action = action;
  a.agent = "human";
  a.t_next = open_prompt_;
  a.t_start = t_start;
  a.t_end = t_end;
  a.t_rec = t_rec;
  open_prompt_.reset();
  actions_.push_back(std::move(a));
  return actions_.size() - 1;
}

std::size_t TimingLedger::robot_started(const std::string& action, Micros t) {
  ActionTiming a;
  a.action = action;
  a.agent = "robot";
  a.t_next = t;
  a.t_start = t;
  actions_.push_back(std::move(a));
  running_robot_ = actions_.size() - 1;
  return actions_.size() - 1;
}

void TimingLedger::robot_finished(std::size_t record, Micros t) {
  auto& a = actions_.at(record);
  a.t_end = t;
  metrics_.t_r += t - *a.t_start;
  if (running_robot_ == record) running_robot_.reset();
}

void TimingLedger::robot_preempted(std::size_t record, Micros t) {
  auto& a = actions_.at(record);
  a.t_end = t;
  a.counted = false;
  if (running_robot_ == record) running_robot_.reset();
  if (switch_open_) preempted_since_switch_ = record;
}

void TimingLedger::acknowledged(std::size_t record, Micros t) {
  auto& a = actions_.at(record);
  a.t_ack = t;
  ++metrics_.actions;
  pending_ack_ = t;
  if (a.agent == "human") uncommitted_.push_back(record);
}

void TimingLedger::switched(Micros t, const std::string& from, const std::string& to) {
  for (std::size_t r : uncommitted_) actions_[r].counted = false;
  uncommitted_.clear();
  pending_ack_.reset();
  switches_.push_back({t, from, to, t, t});
  switch_open_ = true;
  ++metrics_.switches;
}

void TimingLedger::finish(Micros t) {
  if (finished_) return;
  if (switch_open_) {
    // No output followed the switch; its interval runs to the end.
    auto& s = switches_.back();
    s.window_end = t;
    s.window_start = preempted_since_switch_ ? *actions_[*preempted_since_switch_].t_start
                                             : (running_robot_ ? t : last_suggestion_.value_or(0));
    switch_open_ = false;
  }
  commit_human();
  metrics_.total = t;
  finished_ = true;
}

Metrics recompute_metrics(const std::vector<json>& records) {
  struct Human {
    Micros t_rec = 0;
    std::optional<Micros> prompt;
  };
  Metrics m;
  std::map<long long, Human> humans;
  std::map<long long, Micros> robot_start;
  std::vector<long long> batch;  // human refs acknowledged since the last output
  std::optional<Micros> open_prompt, last_suggestion, running, preempted_start;
  Micros pending_ack = -1;  // none when negative
  bool open_switch = false;
  Micros switch_total = 0;
  bool ended = false;

  auto close_switch = [&](Micros t) {
    Micros start = t;
    if (preempted_start)
      start = *preempted_start;
    else if (!running)
      start = last_suggestion.value_or(0);
    switch_total += t - start;
    open_switch = false;
    preempted_start.reset();
  };

  for (const auto& r : records) {
    const std::string type = r.value("type", "");
    if (!r.contains("t")) continue;
    const Micros t = r.at("t").get<Micros>();
    if (type == "suggestion" || type == "ambiguous") {
      if (open_switch) close_switch(t);
      for (long long ref : batch)
        if (humans[ref].prompt) m.t_h_bar += humans[ref].t_rec - *humans[ref].prompt;
      batch.clear();
      if (pending_ack >= 0) m.t_ao += t - pending_ack;
      pending_ack = -1;
      const bool robot = type == "suggestion" && r.at("agent") == "robot";
      if (robot)
        open_prompt.reset();
      else
        open_prompt = t;
      if (type == "suggestion") last_suggestion = t;
    } else if (type == "human_action") {
      humans[r.at("ref").get<long long>()] = {t, open_prompt};
      open_prompt.reset();
    } else if (type == "robot_start") {
      robot_start[r.at("ref").get<long long>()] = t;
      running = t;
    } else if (type == "robot_end") {
      m.t_r += t - robot_start.at(r.at("ref").get<long long>());
      running.reset();
    } else if (type == "robot_preempted") {
      if (open_switch) preempted_start = robot_start.at(r.at("ref").get<long long>());
      running.reset();
    } else if (type == "action_ended") {
      ++m.actions;
      pending_ack = t;
      if (r.at("agent") == "human") batch.push_back(r.at("ref").get<long long>());
    } else if (type == "switch") {
      batch.clear();
      pending_ack = -1;
      open_switch = true;
      ++m.switches;
    } else if (type == "session_end") {
      if (open_switch) close_switch(t);
      for (long long ref : batch)
        if (humans[ref].prompt) m.t_h_bar += humans[ref].t_rec - *humans[ref].prompt;
      batch.clear();
      m.total = t;
      ended = true;
      break;
    }
  }
  if (!ended) throw Error(ErrorKind::invalid_state, "trace has no session_end record; the session is still live");
  m.t_h = m.t_h_bar + switch_total;
  return m;
}

}  // namespace flexhrc::orchestrator
