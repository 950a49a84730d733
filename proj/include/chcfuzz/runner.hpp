/// \file runner.hpp
/// \brief Driving the solver under test: one child process per check-sat,
/// verdict classification, model extraction, trace capture.

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "model.hpp"
#include "print.hpp"
#include "process.hpp"
#include "trace.hpp"

namespace chcfuzz {

struct SolverConfig {
  std::string path;
  std::vector<std::string> extra_argv;
  double timeout_seconds = 60.0;
};

struct SolverVerdict {
  enum class Outcome { Sat, Unsat, Unknown, Timeout, Crash };

  Outcome outcome = Outcome::Crash;
  std::optional<Model> model;  // present iff Sat and the model text parsed
  std::string reason;          // Unknown cause, Crash exit info, model issues
  double wall_seconds = 0.0;
  std::string raw_stdout;
  std::string raw_stderr;

  bool is(Outcome o) const { return outcome == o; }
};

inline const char* outcome_name(SolverVerdict::Outcome o) {
  switch (o) {
    case SolverVerdict::Outcome::Sat: return "sat";
    case SolverVerdict::Outcome::Unsat: return "unsat";
    case SolverVerdict::Outcome::Unknown: return "unknown";
    case SolverVerdict::Outcome::Timeout: return "timeout";
    case SolverVerdict::Outcome::Crash: return "crash";
  }
  return "?";
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// First standalone verdict token on stdout and the offset just past it.
inline std::optional<std::pair<std::string, size_t>> find_verdict(const std::string& out) {
  size_t pos = 0;
  while (pos <= out.size()) {
    size_t nl = out.find('\n', pos);
    size_t end = nl == std::string::npos ? out.size() : nl;
    std::string line = trim(out.substr(pos, end - pos));
    if (line == "sat" || line == "unsat" || line == "unknown" || line == "timeout")
      return std::make_pair(line, end);
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return std::nullopt;
}

inline std::string last_error_line(const std::string& s) {
  std::istringstream is(s);
  std::string line, last;
  while (std::getline(is, line))
    if (line.find("(error") != std::string::npos || line.find("ERROR") != std::string::npos)
      last = line;
  return last;
}

}  // namespace detail

/// Prints the system (options preamble included), runs the solver on it and
/// classifies the outcome. Trace extraction follows the profile. Throws
/// ProcessError only for harness-level failures; solver misbehavior is data.
inline std::pair<SolverVerdict, TraceSummary> solve(const ChcSystem& system,
                                                    const SolverConfig& solver,
                                                    const TraceProfile& profile,
                                                    double timeout_seconds) {
  TempDir dir("chcfuzz-run");
  auto script_path = dir.write_file("input.smt2", print_script(system));

  std::vector<std::string> argv = {solver.path};
  argv.insert(argv.end(), solver.extra_argv.begin(), solver.extra_argv.end());
  argv.insert(argv.end(), profile.extra_argv.begin(), profile.extra_argv.end());
  argv.push_back(script_path.string());

  ProcessResult run = run_process(argv, timeout_seconds, "", dir.path().string());

  SolverVerdict v;
  v.wall_seconds = run.wall_seconds;
  v.raw_stdout = run.out;
  v.raw_stderr = run.err;

  if (run.timed_out) {
    v.outcome = SolverVerdict::Outcome::Timeout;
  } else if (auto verdict = detail::find_verdict(run.out)) {
    const auto& [token, after] = *verdict;
    if (token == "sat") {
      v.outcome = SolverVerdict::Outcome::Sat;
      std::string rest = run.out.substr(after);
      try {
        v.model = parse_model(rest, system);
      } catch (const std::exception& e) {
        v.reason = e.what();
      }
    } else if (token == "unsat") {
      v.outcome = SolverVerdict::Outcome::Unsat;
    } else if (token == "timeout") {
      v.outcome = SolverVerdict::Outcome::Timeout;
    } else {
      v.outcome = SolverVerdict::Outcome::Unknown;
      v.reason = detail::last_error_line(run.out + run.err);
      if (v.reason.empty()) v.reason = "solver reported unknown";
    }
  } else {
    v.outcome = SolverVerdict::Outcome::Crash;
    std::ostringstream info;
    if (run.signaled)
      info << "killed by signal " << run.term_signal;
    else
      info << "exit code " << run.exit_code << " without a verdict";
    std::string err = detail::last_error_line(run.err + run.out);
    if (!err.empty()) info << "; " << err;
    v.reason = info.str();
  }

  std::string raw;
  switch (profile.source) {
    case TraceProfile::Source::Stdout:
      raw = run.out;
      break;
    case TraceProfile::Source::Stderr:
      raw = run.err;
      break;
    case TraceProfile::Source::TraceFile: {
      std::ifstream is(dir.path() / profile.trace_file, std::ios::binary);
      std::ostringstream buf;
      buf << is.rdbuf();
      raw = buf.str();
      break;
    }
  }
  return {std::move(v), normalize_trace(raw, profile)};
}

}  // namespace chcfuzz
