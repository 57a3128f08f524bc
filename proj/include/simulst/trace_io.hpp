#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "simulst/core.hpp"

namespace simulst {

inline constexpr int kTraceSchemaVersion = 1;

/// A record that could not be turned into an UtteranceTrace.
struct ParseError {
    std::size_t line = 0;  // 1-based line in the source file
    std::string message;
};

/// Result of reading a trace file: every well-formed record plus one error
/// per malformed line. Blank lines are skipped.
struct TraceFile {
    std::vector<UtteranceTrace> traces;
    std::vector<std::size_t> trace_lines;  // source line of each trace
    std::vector<ParseError> errors;
};

/// Parses one JSON record. Throws Error("parse") with a field path on failure.
UtteranceTrace parse_trace(const std::string& json_line);

/// Serializes to a single JSON line (no trailing newline).
std::string serialize_trace(const UtteranceTrace& trace);

TraceFile read_traces(std::istream& in);
TraceFile read_trace_file(const std::filesystem::path& path);

void write_traces(std::ostream& out, const std::vector<UtteranceTrace>& traces);

}  // namespace simulst
