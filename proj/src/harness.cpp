#include "simulst/harness.hpp"

#include <algorithm>
#include <cmath>

#include "simulst/policies.hpp"

namespace simulst {

CostModel zero_cost() {
    return [](CostEvent, Millis, std::size_t) { return 0.0; };
}

CostModel linear_query_cost(double a_ms, double b_per_ms) {
    return [a_ms, b_per_ms](CostEvent event, Millis prefix_ms, std::size_t) {
        return event == CostEvent::query ? a_ms + b_per_ms * prefix_ms : 0.0;
    };
}

void SimulationClock::read(Millis audio_ms) {
    source_ms_ += audio_ms;
    wall_ms_ += audio_ms;
}

void SimulationClock::charge(CostEvent event, Millis prefix_ms, std::size_t hypothesis_length) {
    const Millis cost = cost_(event, prefix_ms, hypothesis_length);
    if (!(cost >= 0.0)) throw Error("cost", "cost model returned a negative or NaN cost");
    wall_ms_ += cost;
}

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::read: return "read";
        case EventKind::write: return "write";
        case EventKind::prefix_mismatch: return "prefix_mismatch";
        case EventKind::degenerate_row: return "degenerate_row";
        case EventKind::flush: return "flush";
    }
    return "unknown";
}

RunResult run_utterance(const Adapter& adapter, const PolicyConfig& cfg, const CostModel& cost) {
    RunResult result;
    result.id = adapter.id();
    result.reference = adapter.reference();
    result.source_duration_ms = adapter.source_duration_ms();

    try {
        cfg.check();
        if (std::abs(adapter.segment_ms() - cfg.segment_ms) > kTimeTolerance) {
            throw Error("config", "adapter segment " + std::to_string(adapter.segment_ms()) +
                                      " ms differs from configured " + std::to_string(cfg.segment_ms) + " ms");
        }

        SimulationClock clock(cost);
        policy::PolicyState state;
        std::optional<PrefixStep> last;

        auto emit = [&](const Tokens& hypothesis, std::size_t from, std::size_t count) {
            for (std::size_t j = from; j < from + count; ++j) {
                result.output.push_back(hypothesis[j]);
                result.delays.push_back({hypothesis[j], clock.source_time_ms(), clock.wall_time_ms()});
            }
            state.emitted = result.output;
        };

        const auto schedule = prefix_schedule(adapter.source_duration_ms(), cfg.segment_ms);
        for (Millis prefix : schedule) {
            clock.read(prefix - clock.source_time_ms());
            result.events.push_back({EventKind::read, clock.source_time_ms(), clock.wall_time_ms(), 0});

            auto step = adapter.query(prefix);
            clock.charge(CostEvent::query, prefix, step.hypothesis.size());
            ++result.query_rounds;

            const auto decision = policy::decide(step, state, cfg);
            clock.charge(CostEvent::policy, prefix, step.hypothesis.size());
            state.step_index++;

            if (decision.prefix_mismatch) {
                result.events.push_back({EventKind::prefix_mismatch, clock.source_time_ms(), clock.wall_time_ms(), 0});
            }
            if (decision.degenerate_rows > 0) {
                result.events.push_back(
                    {EventKind::degenerate_row, clock.source_time_ms(), clock.wall_time_ms(), decision.degenerate_rows});
            }
            if (decision.emit_count > 0) {
                emit(step.hypothesis, result.output.size(), decision.emit_count);
                result.events.push_back({EventKind::write, clock.source_time_ms(), clock.wall_time_ms(), decision.emit_count});
            }
            last = std::move(step);
        }

        // The source is exhausted: the final hypothesis is written out in full.
        if (last && last->hypothesis.size() > result.output.size()) {
            const auto from = result.output.size();
            const auto count = last->hypothesis.size() - from;
            emit(last->hypothesis, from, count);
            result.events.push_back({EventKind::flush, clock.source_time_ms(), clock.wall_time_ms(), count});
        }
    } catch (const Error& e) {
        result.error = e.what();
        result.error_kind = e.kind();
    }
    return result;
}

}  // namespace simulst
