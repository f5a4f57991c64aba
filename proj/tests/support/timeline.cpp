#include "support/timeline.hpp"

namespace flexhrc::testing {

using orchestrator::Micros;
using orchestrator::OutputKind;
using nlohmann::json;

Timeline reference_timeline() {
  // Robot attempt durations, human prompt-to-recognition delays and the
  // acknowledgement-to-output delays between consecutive actions.
  const Micros robot[] = {10'000'000, 12'500'000, 11'059'200, 12'000'000};
  const Micros human[] = {9'000'000, 9'186'600, 9'000'000, 9'000'000};
  const Micros reasoning[] = {10'000, 10'000, 10'000, 10'000, 10'000, 10'000, 13'800};
  const Micros tail = 180'400;

  Timeline out;
  orchestrator::TimingLedger ledger;
  auto record = [&](const char* type, Micros t, json fields) {
    fields["type"] = type;
    fields["t"] = t;
    out.records.push_back(std::move(fields));
  };

  Micros t = 0;
  int gap = 0;
  for (int i = 0; i < 4; ++i) {
    record("suggestion", t, {{"agent", "robot"}});
    ledger.output(t, OutputKind::robot_dispatch);
    const auto r = ledger.robot_started("robot", t);
    record("robot_start", t, {{"ref", r}});
    t += robot[i];
    ledger.robot_finished(r, t);
    ledger.acknowledged(r, t);
    record("robot_end", t, {{"ref", r}, {"success", true}});
    record("action_ended", t, {{"ref", r}, {"agent", "robot"}});
    t += reasoning[gap++];

    record("suggestion", t, {{"agent", "human"}});
    ledger.output(t, OutputKind::human_prompt);
    const Micros prompt = t;
    t += human[i];
    const auto h = ledger.recognized("human", prompt, t, t);
    ledger.acknowledged(h, t);
    record("human_action", t, {{"ref", h}});
    record("action_ended", t, {{"ref", h}, {"agent", "human"}});
    if (i < 3) t += reasoning[gap++];
  }
  t += tail;
  ledger.finish(t);
  out.ledger = ledger.metrics();
  record("session_end", t, {{"metrics", out.ledger.to_json()}});
  return out;
}

}  // namespace flexhrc::testing
