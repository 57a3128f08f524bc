#pragma once

#include <cstdint>
#include <string>

#include "simulst/core.hpp"

namespace simulst {

/// The model boundary: hypothesis and attention for an audio prefix.
/// Implementations are read-only after construction; query() is deterministic.
class Adapter {
public:
    virtual ~Adapter() = default;

    virtual const std::string& id() const = 0;
    virtual const std::string& reference() const = 0;
    virtual Millis segment_ms() const = 0;
    virtual Millis source_duration_ms() const = 0;

    /// Throws Error("missing_step") when the prefix cannot be served.
    virtual PrefixStep query(Millis prefix_ms) const = 0;
};

/// Replays the steps recorded in a trace.
class ScriptedAdapter final : public Adapter {
public:
    explicit ScriptedAdapter(UtteranceTrace trace);

    const std::string& id() const override { return trace_.id; }
    const std::string& reference() const override { return trace_.reference; }
    Millis segment_ms() const override { return trace_.segment_ms; }
    Millis source_duration_ms() const override { return trace_.source_duration_ms; }

    PrefixStep query(Millis prefix_ms) const override;

    const UtteranceTrace& trace() const { return trace_; }

private:
    UtteranceTrace trace_;
};

/// Lookup of a recorded step. The missing-step error names the nearest
/// recorded prefixes on either side.
const PrefixStep& scripted_query(const UtteranceTrace& trace, Millis prefix_ms);

/// Parameters of a synthetic pseudo-diagonal attention generator.
struct SyntheticSpec {
    std::string id = "synth";
    int n_target_tokens = 12;
    int frames_per_segment = 8;
    double slope = 4.0;            // frames per target token
    double tail_mass_beta = 0.0;   // pre-filter mass on the final frame, in [0, 1)
    double spread = 1.0;           // triangular kernel half-width (frames)
    std::uint64_t seed = 1;
    Millis segment_ms = 800;
    Millis source_duration_ms = 4000;
    int source_words = 10;         // stand-in for the CTC word detector
    int layer = 4;

    /// Throws Error("domain") on out-of-range fields.
    void check() const;
};

/// Frames available after `prefix_ms` of audio.
std::size_t synthetic_frames(const SyntheticSpec& spec, Millis prefix_ms);

/// Tokens revealed after `prefix_ms`: floor(n_target_tokens * prefix / duration).
std::size_t synthetic_revealed(const SyntheticSpec& spec, Millis prefix_ms);

/// The row of target token j (0-based) over n_frames frames.
AttentionRow synthetic_row(const SyntheticSpec& spec, std::size_t token, std::size_t n_frames);

/// Pure function of (spec, prefix_ms).
PrefixStep synthetic_query(const SyntheticSpec& spec, Millis prefix_ms);

/// All steps of the synthetic utterance, packaged as a trace.
UtteranceTrace synthetic_trace(const SyntheticSpec& spec);

class SyntheticAdapter final : public Adapter {
public:
    explicit SyntheticAdapter(SyntheticSpec spec);

    const std::string& id() const override { return spec_.id; }
    const std::string& reference() const override { return reference_; }
    Millis segment_ms() const override { return spec_.segment_ms; }
    Millis source_duration_ms() const override { return spec_.source_duration_ms; }

    PrefixStep query(Millis prefix_ms) const override { return synthetic_query(spec_, prefix_ms); }

    const SyntheticSpec& spec() const { return spec_; }

private:
    SyntheticSpec spec_;
    std::string reference_;
};

/// Target tokens of a synthetic utterance (seeded, deterministic).
Tokens synthetic_tokens(const SyntheticSpec& spec);

}  // namespace simulst
