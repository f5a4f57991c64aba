#pragma once

#include <vector>

#include <json.hpp>

#include "flexhrc/orchestrator/ledger.hpp"

namespace flexhrc::testing {

/// Alternating robot/human cooperation of 82 s whose reasoning, human and
/// robot shares are 0.09 %, 44.13 % and 55.56 %. The same run is expressed
/// twice: through the ledger API and as raw trace records.
struct Timeline {
  orchestrator::Metrics ledger;
  std::vector<nlohmann::json> records;
};

Timeline reference_timeline();

}  // namespace flexhrc::testing
