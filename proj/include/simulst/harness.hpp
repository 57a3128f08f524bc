#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "simulst/adapters.hpp"
#include "simulst/core.hpp"

namespace simulst {

enum class CostEvent { query, policy };

/// Simulated compute cost in ms for an event at a given prefix and
/// hypothesis length. Must be non-negative.
using CostModel = std::function<Millis(CostEvent, Millis prefix_ms, std::size_t hypothesis_length)>;

/// Zero cost everywhere.
CostModel zero_cost();

/// cost = a + b * prefix_ms per query; policy decisions are free.
CostModel linear_query_cost(double a_ms, double b_per_ms);

/// Two timelines: source audio consumed and simulated elapsed wall time.
/// Reading audio advances both; compute advances only the wall clock.
class SimulationClock {
public:
    explicit SimulationClock(CostModel cost = zero_cost()) : cost_(std::move(cost)) {}

    void read(Millis audio_ms);
    void charge(CostEvent event, Millis prefix_ms, std::size_t hypothesis_length);

    Millis source_time_ms() const { return source_ms_; }
    Millis wall_time_ms() const { return wall_ms_; }

private:
    CostModel cost_;
    Millis source_ms_ = 0;
    Millis wall_ms_ = 0;
};

enum class EventKind { read, write, prefix_mismatch, degenerate_row, flush };

std::string to_string(EventKind kind);

struct RunEvent {
    EventKind kind;
    Millis source_ms = 0;
    Millis wall_ms = 0;
    std::size_t count = 0;  // tokens written, or rows affected
};

struct RunResult {
    std::string id;
    std::string reference;
    Millis source_duration_ms = 0;
    Tokens output;
    std::vector<DelayRecord> delays;
    std::vector<RunEvent> events;
    std::size_t query_rounds = 0;
    // Set when the utterance was aborted (missing step, unavailable attention).
    std::optional<std::string> error;
    std::optional<std::string> error_kind;

    bool ok() const { return !error.has_value(); }
};

/// READ one segment, query, decide, WRITE; repeat until the source is
/// exhausted, then flush the final hypothesis. Adapter errors are captured in
/// the result rather than thrown.
RunResult run_utterance(const Adapter& adapter, const PolicyConfig& cfg, const CostModel& cost = zero_cost());

}  // namespace simulst
