/// \file trace.hpp
/// \brief Selective execution-trace extraction from solver output.
///
/// A trace is the sequence of main solving steps the solver reports on its
/// trace channel. Lines are filtered by include patterns, stripped of
/// volatile tokens (numbers, timings, memory figures), and hashed into
/// stable 64-bit state ids; transitions are the adjacent state pairs.

#pragma once

#include <cstdint>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "ast.hpp"  // fnv1a

namespace chcfuzz {

struct TraceSummary {
  std::vector<uint64_t> states;
  std::map<std::pair<uint64_t, uint64_t>, uint64_t> transitions;

  bool empty() const { return states.empty(); }

  /// Order-sensitive hash of the whole state sequence.
  uint64_t trace_hash() const {
    uint64_t h = 14695981039346656037ull;
    for (uint64_t s : states) h = fnv1a(&s, sizeof s, h);
    return h;
  }
};

struct TraceProfile {
  enum class Source { Stderr, Stdout, TraceFile };

  std::string name = "none";
  Source source = Source::Stderr;
  std::string trace_file;                    // Source::TraceFile only
  std::vector<std::string> include_patterns; // ECMAScript regexes, empty = keep all
  std::vector<std::string> strip_patterns;   // matches replaced by '#'
  std::vector<std::string> extra_argv;       // solver flags enabling the channel

  mutable std::vector<std::regex> include_rx_;
  mutable std::vector<std::regex> strip_rx_;
  mutable bool compiled_ = false;

  void compile() const {
    if (compiled_) return;
    for (const auto& p : include_patterns) include_rx_.emplace_back(p);
    for (const auto& p : strip_patterns) strip_rx_.emplace_back(p);
    compiled_ = true;
  }
};

inline TraceSummary normalize_trace(const std::string& raw, const TraceProfile& profile) {
  profile.compile();
  TraceSummary sum;
  size_t pos = 0;
  while (pos <= raw.size()) {
    size_t nl = raw.find('\n', pos);
    std::string line = raw.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? raw.size() + 1 : nl + 1;
    if (line.empty()) continue;

    bool keep = profile.include_rx_.empty();
    for (const auto& rx : profile.include_rx_) {
      if (std::regex_search(line, rx)) {
        keep = true;
        break;
      }
    }
    if (!keep) continue;

    for (const auto& rx : profile.strip_rx_) line = std::regex_replace(line, rx, "#");

    uint64_t state = fnv1a(line);
    if (!sum.states.empty())
      ++sum.transitions[{sum.states.back(), state}];
    sum.states.push_back(state);
  }
  return sum;
}

/// Built-in profiles. "spacer-verbose" follows the z3 -v:1 stderr stream and
/// keeps the fixedpoint transformation and Spacer main-loop events;
/// "stderr-raw" keeps every stderr line; "trace-file" reads a .z3-trace
/// style file produced by trace-enabled solver builds; "none" disables
/// trace collection.
inline TraceProfile make_trace_profile(const std::string& name) {
  TraceProfile p;
  p.name = name;
  if (name == "spacer-verbose") {
    p.source = TraceProfile::Source::Stderr;
    p.include_patterns = {
        R"(^\(transform )", R"(^expand: )", R"(^\(spacer::)",
        R"(^Entering level)", R"(^Propagating)", R"(^\(datalog)", R"(^induction)"};
    p.strip_patterns = {R"([0-9]+\.[0-9]+)", R"([0-9]+)"};
    p.extra_argv = {"-v:1"};
    return p;
  }
  if (name == "stderr-raw") {
    p.source = TraceProfile::Source::Stderr;
    p.strip_patterns = {R"([0-9]+\.[0-9]+)", R"([0-9]+)"};
    p.extra_argv = {"-v:1"};
    return p;
  }
  if (name == "trace-file") {
    p.source = TraceProfile::Source::TraceFile;
    p.trace_file = ".z3-trace";
    p.strip_patterns = {R"([0-9]+\.[0-9]+)", R"([0-9]+)"};
    p.extra_argv = {"-tr:spacer"};
    return p;
  }
  if (name == "none") return p;
  throw std::invalid_argument("unknown trace profile '" + name + "'");
}

}  // namespace chcfuzz
