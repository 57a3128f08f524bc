#include "simulst/core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace simulst {

std::string HeadSpec::to_string() const {
    return is_averaged() ? std::string("averaged") : std::to_string(*index_);
}

HeadSpec HeadSpec::parse(const std::string& text) {
    if (text == "averaged" || text == "avg") return averaged();
    try {
        std::size_t used = 0;
        const int value = std::stoi(text, &used);
        if (used == text.size() && value >= 1) return head(value);
    } catch (const std::exception&) {
    }
    throw Error("config", "head must be \"averaged\" or a positive head index, got \"" + text + "\"");
}

const LayerAttention* PrefixStep::find_layer(int layer_index) const {
    for (const auto& layer : attention) {
        if (layer.layer_index == layer_index) return &layer;
    }
    return nullptr;
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::edatt: return "edatt";
        case PolicyKind::local_agreement: return "la";
        case PolicyKind::waitk: return "waitk";
    }
    return "unknown";
}

PolicyKind parse_policy_kind(const std::string& text) {
    if (text == "edatt") return PolicyKind::edatt;
    if (text == "la" || text == "local_agreement") return PolicyKind::local_agreement;
    if (text == "waitk" || text == "wait-k") return PolicyKind::waitk;
    throw Error("config", "unknown policy \"" + text + "\" (expected edatt, la or waitk)");
}

void PolicyConfig::check() const {
    if (kind == PolicyKind::edatt) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw Error("domain", "alpha must lie in (0, 1), got " + std::to_string(alpha));
        }
        if (lambda < 1) throw Error("domain", "lambda must be >= 1, got " + std::to_string(lambda));
        if (layer < 1) throw Error("domain", "layer must be >= 1, got " + std::to_string(layer));
    }
    if (kind == PolicyKind::waitk && k < 1) {
        throw Error("domain", "k must be >= 1, got " + std::to_string(k));
    }
    if (!(segment_ms > 0.0) || !std::isfinite(segment_ms)) {
        throw Error("domain", "segment_ms must be positive");
    }
}

std::string Violation::to_string() const {
    std::ostringstream out;
    out << utterance;
    if (step) out << " step " << *step;
    out << ": " << invariant;
    if (!detail.empty()) out << " (" << detail << ")";
    return out.str();
}

std::vector<Millis> prefix_schedule(Millis source_duration_ms, Millis segment_ms) {
    std::vector<Millis> schedule;
    if (!(source_duration_ms > 0.0) || !(segment_ms > 0.0)) return schedule;
    for (std::size_t k = 1;; ++k) {
        const Millis prefix = static_cast<double>(k) * segment_ms;
        if (prefix >= source_duration_ms - kTimeTolerance) break;
        schedule.push_back(prefix);
    }
    schedule.push_back(source_duration_ms);
    return schedule;
}

namespace {

class Checker {
public:
    explicit Checker(const UtteranceTrace& trace) : trace_(trace) {}

    void fail(std::optional<std::size_t> step, std::string invariant, std::string detail = {}) {
        out_.push_back({trace_.id, step, std::move(invariant), std::move(detail)});
    }

    void check_matrix(std::size_t s, const PrefixStep& step, const AttentionMatrix& m) {
        const std::string where =
            "layer " + std::to_string(m.layer_index) + " head " + m.head.to_string();
        if (m.n_frames != step.n_frames) {
            fail(s, "frame count", where + ": matrix has " + std::to_string(m.n_frames) +
                                       " frames, step declares " + std::to_string(step.n_frames));
        }
        if (m.rows.size() != step.hypothesis.size()) {
            fail(s, "hypothesis/attention alignment",
                 where + ": " + std::to_string(m.rows.size()) + " rows for " +
                     std::to_string(step.hypothesis.size()) + " tokens");
        }
        if (!m.head.is_averaged() && (m.head.index() < 1 || m.head.index() > trace_.n_heads)) {
            fail(s, "head range", where + " outside 1.." + std::to_string(trace_.n_heads));
        }
        for (std::size_t j = 0; j < m.rows.size(); ++j) {
            const auto& row = m.rows[j];
            const std::string row_where = where + " row " + std::to_string(j);
            if (row.size() != step.n_frames) {
                fail(s, "row length", row_where + " has " + std::to_string(row.size()) + " weights");
                continue;
            }
            bool negative = false;
            for (double w : row) negative = negative || !(w >= 0.0) || !std::isfinite(w);
            if (negative) fail(s, "non-negative weights", row_where);
            const double sum = std::accumulate(row.begin(), row.end(), 0.0);
            if (!(std::abs(sum - 1.0) <= kRawRowTolerance)) {
                std::ostringstream detail;
                detail.precision(9);
                detail << row_where << " sums to " << sum;
                fail(s, "row normalization", detail.str());
            }
        }
    }

    std::vector<Violation> run() {
        if (trace_.id.empty()) fail(std::nullopt, "utterance id", "empty id");
        if (!(trace_.source_duration_ms > 0.0) || !std::isfinite(trace_.source_duration_ms)) {
            fail(std::nullopt, "positive duration", "source_duration_ms must be > 0");
            return std::move(out_);
        }
        if (!(trace_.segment_ms > 0.0) || !std::isfinite(trace_.segment_ms)) {
            fail(std::nullopt, "positive segment", "segment_ms must be > 0");
            return std::move(out_);
        }
        if (trace_.n_layers < 1 || trace_.n_heads < 1) {
            fail(std::nullopt, "model dimensions", "n_layers and n_heads must be >= 1");
        }
        if (trace_.steps.empty()) {
            fail(std::nullopt, "final step coverage", "trace has no steps");
            return std::move(out_);
        }

        const auto schedule = prefix_schedule(trace_.source_duration_ms, trace_.segment_ms);
        const auto& last = trace_.steps.back();
        if (std::abs(last.prefix_ms - trace_.source_duration_ms) > kTimeTolerance) {
            std::ostringstream detail;
            detail << "last prefix " << last.prefix_ms << " ms, source duration "
                   << trace_.source_duration_ms << " ms";
            fail(trace_.steps.size() - 1, "final step coverage", detail.str());
        }

        for (std::size_t s = 0; s < trace_.steps.size(); ++s) {
            const auto& step = trace_.steps[s];
            if (s < schedule.size()) {
                if (std::abs(step.prefix_ms - schedule[s]) > kTimeTolerance) {
                    std::ostringstream detail;
                    detail << "prefix " << step.prefix_ms << " ms, expected " << schedule[s] << " ms";
                    fail(s, "segment schedule", detail.str());
                }
            } else {
                fail(s, "segment schedule", "step beyond the source duration");
            }
            if (s > 0 && step.n_frames < trace_.steps[s - 1].n_frames) {
                fail(s, "frame monotonicity",
                     std::to_string(step.n_frames) + " frames after " +
                         std::to_string(trace_.steps[s - 1].n_frames));
            }
            if (step.detected_words < 0) fail(s, "detected words", "negative count");
            if (step.attention.empty()) fail(s, "attention present", "no attention recorded");
            for (const auto& layer : step.attention) {
                if (layer.layer_index < 1 || layer.layer_index > trace_.n_layers) {
                    fail(s, "layer range",
                         "layer " + std::to_string(layer.layer_index) + " outside 1.." +
                             std::to_string(trace_.n_layers));
                }
                if (!layer.per_head && layer.matrices.size() != 1) {
                    fail(s, "head layout", "averaged layer must carry exactly one matrix");
                }
                if (layer.per_head && layer.matrices.size() != static_cast<std::size_t>(trace_.n_heads)) {
                    fail(s, "head layout",
                         "per-head stack has " + std::to_string(layer.matrices.size()) + " heads, expected " +
                             std::to_string(trace_.n_heads));
                }
                for (const auto& m : layer.matrices) {
                    if (m.layer_index != layer.layer_index) fail(s, "layer range", "matrix layer mismatch");
                    check_matrix(s, step, m);
                }
            }
        }
        if (trace_.steps.size() < schedule.size() &&
            std::abs(last.prefix_ms - trace_.source_duration_ms) <= kTimeTolerance) {
            fail(std::nullopt, "segment schedule",
                 std::to_string(schedule.size() - trace_.steps.size()) + " prefix steps missing");
        }
        return std::move(out_);
    }

private:
    const UtteranceTrace& trace_;
    std::vector<Violation> out_;
};

}  // namespace

std::vector<Violation> validate_trace(const UtteranceTrace& trace) {
    return Checker(trace).run();
}

}  // namespace simulst
