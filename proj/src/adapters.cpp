#include "simulst/adapters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace simulst {

ScriptedAdapter::ScriptedAdapter(UtteranceTrace trace) : trace_(std::move(trace)) {}

PrefixStep ScriptedAdapter::query(Millis prefix_ms) const { return scripted_query(trace_, prefix_ms); }

const PrefixStep& scripted_query(const UtteranceTrace& trace, Millis prefix_ms) {
    const PrefixStep* below = nullptr;
    const PrefixStep* above = nullptr;
    for (const auto& step : trace.steps) {
        if (std::abs(step.prefix_ms - prefix_ms) <= kTimeTolerance) return step;
        if (step.prefix_ms < prefix_ms && (below == nullptr || step.prefix_ms > below->prefix_ms)) below = &step;
        if (step.prefix_ms > prefix_ms && (above == nullptr || step.prefix_ms < above->prefix_ms)) above = &step;
    }
    std::ostringstream message;
    message << "utterance " << trace.id << " has no step at " << prefix_ms << " ms; nearest recorded:";
    if (below != nullptr) message << ' ' << below->prefix_ms;
    if (above != nullptr) message << ' ' << above->prefix_ms;
    if (below == nullptr && above == nullptr) message << " none";
    throw Error("missing_step", message.str());
}

void SyntheticSpec::check() const {
    if (n_target_tokens < 1) throw Error("domain", "n_target_tokens must be >= 1");
    if (frames_per_segment < 1) throw Error("domain", "frames_per_segment must be >= 1");
    if (!(slope >= 0.0)) throw Error("domain", "slope must be >= 0");
    if (!(tail_mass_beta >= 0.0 && tail_mass_beta < 1.0)) throw Error("domain", "tail_mass_beta must lie in [0, 1)");
    if (!(spread >= 0.0)) throw Error("domain", "spread must be >= 0");
    if (!(segment_ms > 0.0)) throw Error("domain", "segment_ms must be > 0");
    if (!(source_duration_ms > 0.0)) throw Error("domain", "source_duration_ms must be > 0");
    if (source_words < 0) throw Error("domain", "source_words must be >= 0");
    if (layer < 1) throw Error("domain", "layer must be >= 1");
}

std::size_t synthetic_frames(const SyntheticSpec& spec, Millis prefix_ms) {
    const double frames = prefix_ms / spec.segment_ms * spec.frames_per_segment;
    return static_cast<std::size_t>(std::max(0.0, std::ceil(frames - 1e-9)));
}

std::size_t synthetic_revealed(const SyntheticSpec& spec, Millis prefix_ms) {
    const double fraction = std::min(1.0, prefix_ms / spec.source_duration_ms);
    return static_cast<std::size_t>(std::floor(fraction * spec.n_target_tokens + 1e-9));
}

AttentionRow synthetic_row(const SyntheticSpec& spec, std::size_t token, std::size_t n_frames) {
    AttentionRow row(n_frames, 0.0);
    if (n_frames == 0) return row;
    if (n_frames == 1) {
        row[0] = 1.0;
        return row;
    }
    // Anchors past the frames heard so far clamp to the last frame that
    // survives last-frame filtering.
    const auto wanted = static_cast<long>(std::lround(static_cast<double>(token) * spec.slope));
    const long anchor = std::min(wanted, static_cast<long>(n_frames) - 2);

    double kernel_mass = 0.0;
    for (std::size_t f = 0; f < n_frames; ++f) {
        const double distance = std::abs(static_cast<double>(static_cast<long>(f) - anchor));
        row[f] = std::max(0.0, spec.spread + 1.0 - distance);
        kernel_mass += row[f];
    }
    const double scale = (1.0 - spec.tail_mass_beta) / kernel_mass;
    for (double& w : row) w *= scale;
    row.back() += spec.tail_mass_beta;
    return row;
}

namespace {

// splitmix64: portable, so token choice does not depend on the standard library.
std::uint64_t mix(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::array<const char*, 24> kVocabulary = {
    "ich",  "werde", "über", "klima", "reden", "heute", "wir",   "sehen", "das",  "neue", "haus", "und",
    "die",  "welt",  "ist",  "groß",  "dann",  "aber",  "nicht", "mehr",  "sehr", "gut",  "hier", "jetzt"};

}  // namespace

Tokens synthetic_tokens(const SyntheticSpec& spec) {
    std::uint64_t state = spec.seed;
    Tokens tokens;
    tokens.reserve(static_cast<std::size_t>(spec.n_target_tokens));
    for (int j = 0; j < spec.n_target_tokens; ++j) {
        tokens.emplace_back(kVocabulary[mix(state) % kVocabulary.size()]);
    }
    return tokens;
}

PrefixStep synthetic_query(const SyntheticSpec& spec, Millis prefix_ms) {
    PrefixStep step;
    step.prefix_ms = prefix_ms;
    step.n_frames = synthetic_frames(spec, prefix_ms);
    const double fraction = std::min(1.0, prefix_ms / spec.source_duration_ms);
    step.detected_words = static_cast<int>(std::floor(fraction * spec.source_words + 1e-9));

    const auto tokens = synthetic_tokens(spec);
    const auto revealed = synthetic_revealed(spec, prefix_ms);
    step.hypothesis.assign(tokens.begin(), tokens.begin() + static_cast<long>(revealed));

    AttentionMatrix matrix;
    matrix.n_frames = step.n_frames;
    matrix.layer_index = spec.layer;
    matrix.head = HeadSpec::averaged();
    for (std::size_t j = 0; j < revealed; ++j) matrix.rows.push_back(synthetic_row(spec, j, step.n_frames));

    LayerAttention layer;
    layer.layer_index = spec.layer;
    layer.per_head = false;
    layer.matrices.push_back(std::move(matrix));
    step.attention.push_back(std::move(layer));
    return step;
}

UtteranceTrace synthetic_trace(const SyntheticSpec& spec) {
    spec.check();
    UtteranceTrace trace;
    trace.id = spec.id;
    trace.source_duration_ms = spec.source_duration_ms;
    trace.segment_ms = spec.segment_ms;
    const auto tokens = synthetic_tokens(spec);
    for (std::size_t j = 0; j < tokens.size(); ++j) trace.reference += (j ? " " : "") + tokens[j];
    trace.n_layers = std::max(kDefaultLayerCount, spec.layer);
    for (Millis prefix : prefix_schedule(spec.source_duration_ms, spec.segment_ms)) {
        trace.steps.push_back(synthetic_query(spec, prefix));
    }
    return trace;
}

SyntheticAdapter::SyntheticAdapter(SyntheticSpec spec) : spec_(std::move(spec)) {
    spec_.check();
    const auto tokens = synthetic_tokens(spec_);
    for (std::size_t j = 0; j < tokens.size(); ++j) reference_ += (j ? " " : "") + tokens[j];
}

}  // namespace simulst
