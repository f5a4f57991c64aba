#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flexhrc/orchestrator/ledger.hpp"

namespace flexhrc::orchestrator {

inline constexpr int kTraceSchemaVersion = 1;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Append-only session log. Each record is one compact JSON line carrying
/// the schema version `v`, a sequence number `seq`, the record `type` and
/// its session time `t` in microseconds.
class Trace {
 public:
  using Listener = std::function<void(std::uint64_t seq, const std::string& line)>;

  /// Adds the envelope fields and returns the sequence number (from 1).
  std::uint64_t append(std::string type, Micros t, nlohmann::json fields = nlohmann::json::object());

  std::uint64_t size() const { return lines_.size(); }
  const std::vector<std::string>& lines() const { return lines_; }
  /// Line with sequence number `seq` (1-based).
  const std::string& line(std::uint64_t seq) const { return lines_.at(seq - 1); }
  /// Hash of the concatenated lines, each terminated by '\n'.
  std::uint64_t hash() const { return hash_; }
  std::string hash_hex() const;
  std::string text() const;

  /// Called synchronously after every append.
  void set_listener(Listener listener) { listener_ = std::move(listener); }
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> lines_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  Listener listener_;
};

/// Parses an NDJSON trace file; throws parse on a malformed line.
std::vector<nlohmann::json> read_trace(const std::filesystem::path& path);
std::vector<nlohmann::json> parse_trace(std::string_view text);

}  // namespace flexhrc::orchestrator
