#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "simulst/attention.hpp"
#include "simulst/core.hpp"

namespace simulst::policy {

/// Per-utterance emission history.
struct PolicyState {
    Tokens emitted;
    // Local Agreement memory: the hypothesis of the previous step (l = 1).
    std::optional<Tokens> previous_hypothesis;
    std::size_t step_index = 0;
};

/// How many new tokens to WRITE at this step (0 means READ), plus what the
/// harness should log.
struct Decision {
    std::size_t emit_count = 0;
    bool prefix_mismatch = false;
    // Rows whose filtered mass was degenerate; the policy waited on the first.
    std::size_t degenerate_rows = 0;
};

/// len(emitted) when emitted is an exact prefix of the hypothesis, else nullopt.
std::optional<std::size_t> align_emitted(std::span<const std::string> hypothesis,
                                         std::span<const std::string> emitted);

/// Length of the longest common prefix.
std::size_t common_prefix_length(std::span<const std::string> a, std::span<const std::string> b);

/// Threshold rule over already-filtered rows: starting at `start`, count the
/// consecutive rows whose last-lambda mass is below alpha. Stops at the first
/// failing or degenerate row.
std::size_t edatt_emit_count(std::span<const attention::FilteredRow> rows, std::size_t start, int lambda,
                             double alpha);

/// Attention-threshold policy. Reads the cfg.layer / cfg.head view of the step.
/// Throws Error("attention") if that view was not recorded.
Decision edatt_step(const PrefixStep& step, const PolicyState& state, const PolicyConfig& cfg);

/// Local Agreement with a one-step memory. Updates state.previous_hypothesis.
Decision la_step(const PrefixStep& step, PolicyState& state);

/// wait-k on the detected source word count: the i-th token may be written
/// once detected_words >= k + i - 1.
Decision waitk_step(const PrefixStep& step, const PolicyState& state, const PolicyConfig& cfg);

/// Dispatches on cfg.kind.
Decision decide(const PrefixStep& step, PolicyState& state, const PolicyConfig& cfg);

}  // namespace simulst::policy
