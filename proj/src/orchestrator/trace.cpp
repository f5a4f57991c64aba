#include "flexhrc/orchestrator/trace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flexhrc/error.hpp"

namespace flexhrc::orchestrator {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Trace::append(std::string type, Micros t, json fields) {
  if (fields.is_null()) fields = json::object();
  if (!fields.is_object()) throw Error(ErrorKind::invalid_argument, "trace fields must be an object");
  fields["v"] = kTraceSchemaVersion;
  fields["seq"] = lines_.size() + 1;
  fields["type"] = std::move(type);
  fields["t"] = t;
  std::string line = fields.dump();
  hash_ = fnv1a64(line, hash_);
  hash_ = fnv1a64("\n", hash_);
  lines_.push_back(std::move(line));
  if (listener_) listener_(lines_.size(), lines_.back());
  return lines_.size();
}

std::string Trace::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
  return buf;
}

std::string Trace::text() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += '\n';
  }
  return out;
}

void Trace::write(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::invalid_argument, "cannot write " + path.string());
  f << text();
}

std::vector<json> parse_trace(std::string_view text) {
  std::vector<json> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, "trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<json> read_trace(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::parse, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trace(ss.str());
}

}  // namespace flexhrc::orchestrator
