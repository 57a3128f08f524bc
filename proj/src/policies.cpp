#include "simulst/policies.hpp"

#include <algorithm>

namespace simulst::policy {

std::optional<std::size_t> align_emitted(std::span<const std::string> hypothesis,
                                         std::span<const std::string> emitted) {
    if (emitted.size() > hypothesis.size()) return std::nullopt;
    if (!std::equal(emitted.begin(), emitted.end(), hypothesis.begin())) return std::nullopt;
    return emitted.size();
}

std::size_t common_prefix_length(std::span<const std::string> a, std::span<const std::string> b) {
    const auto n = std::min(a.size(), b.size());
    std::size_t i = 0;
    while (i < n && a[i] == b[i]) ++i;
    return i;
}

std::size_t edatt_emit_count(std::span<const attention::FilteredRow> rows, std::size_t start, int lambda,
                             double alpha) {
    std::size_t emitted = 0;
    for (std::size_t j = start; j < rows.size(); ++j) {
        if (rows[j].degenerate) break;
        if (!(attention::tail_mass(rows[j].weights, lambda) < alpha)) break;
        ++emitted;
    }
    return emitted;
}

Decision edatt_step(const PrefixStep& step, const PolicyState& state, const PolicyConfig& cfg) {
    Decision decision;
    const auto start = align_emitted(step.hypothesis, state.emitted);
    if (!start) {
        decision.prefix_mismatch = true;
        return decision;
    }
    if (*start >= step.hypothesis.size()) return decision;

    // With at most lambda frames left the window covers the whole row, so the
    // tail mass is 1 and nothing can pass the threshold.
    const std::size_t usable = cfg.unfiltered ? step.n_frames : (step.n_frames > 0 ? step.n_frames - 1 : 0);
    if (usable <= static_cast<std::size_t>(cfg.lambda)) return decision;

    const auto matrix = attention::select(step, cfg.layer, cfg.head);
    std::vector<attention::FilteredRow> rows(matrix.rows.size());
    for (std::size_t j = *start; j < matrix.rows.size(); ++j) {
        if (cfg.unfiltered) {
            rows[j].weights = matrix.rows[j];
        } else {
            rows[j] = attention::filter_last_frame(matrix.rows[j]);
        }
    }
    decision.emit_count = edatt_emit_count(rows, *start, cfg.lambda, cfg.alpha);
    const auto stop = *start + decision.emit_count;
    if (stop < rows.size() && rows[stop].degenerate) decision.degenerate_rows = 1;
    return decision;
}

Decision la_step(const PrefixStep& step, PolicyState& state) {
    Decision decision;
    if (!state.previous_hypothesis) {
        state.previous_hypothesis = step.hypothesis;
        return decision;
    }
    const auto agreed = common_prefix_length(*state.previous_hypothesis, step.hypothesis);
    state.previous_hypothesis = step.hypothesis;
    if (!align_emitted(step.hypothesis, state.emitted)) {
        decision.prefix_mismatch = true;
        return decision;
    }
    if (agreed > state.emitted.size()) decision.emit_count = agreed - state.emitted.size();
    return decision;
}

Decision waitk_step(const PrefixStep& step, const PolicyState& state, const PolicyConfig& cfg) {
    Decision decision;
    if (!align_emitted(step.hypothesis, state.emitted)) {
        decision.prefix_mismatch = true;
        return decision;
    }
    const long allowed_total = std::max(0L, static_cast<long>(step.detected_words) - cfg.k + 1);
    const auto allowed = std::min(static_cast<std::size_t>(allowed_total), step.hypothesis.size());
    if (allowed > state.emitted.size()) decision.emit_count = allowed - state.emitted.size();
    return decision;
}

Decision decide(const PrefixStep& step, PolicyState& state, const PolicyConfig& cfg) {
    switch (cfg.kind) {
        case PolicyKind::edatt: return edatt_step(step, state, cfg);
        case PolicyKind::local_agreement: return la_step(step, state);
        case PolicyKind::waitk: return waitk_step(step, state, cfg);
    }
    return {};
}

}  // namespace simulst::policy
