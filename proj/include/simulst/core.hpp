#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace simulst {

/// Milliseconds of source audio or simulated wall-clock time.
using Millis = double;

using Tokens = std::vector<std::string>;

/// Attention weights of one hypothesis token over the encoder frames of a prefix.
using AttentionRow = std::vector<double>;

// Tolerances on row sums.
inline constexpr double kRawRowTolerance = 1e-4;
inline constexpr double kFilteredRowTolerance = 1e-6;
// Prefix positions are compared with this slack (ms).
inline constexpr double kTimeTolerance = 1e-6;

inline constexpr int kDefaultLayerCount = 6;
inline constexpr int kDefaultHeadCount = 8;

/// Error raised for malformed inputs. `kind` is a short machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Either the head-averaged view of a layer or one explicit (1-based) head.
class HeadSpec {
public:
    static HeadSpec averaged() { return HeadSpec{}; }
    static HeadSpec head(int index) { return HeadSpec{index}; }

    bool is_averaged() const { return !index_.has_value(); }
    int index() const { return index_.value(); }

    /// "averaged" or the decimal head index.
    std::string to_string() const;
    /// Inverse of to_string(); throws Error("config") on anything else.
    static HeadSpec parse(const std::string& text);

    friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
    friend auto operator<=>(const HeadSpec& a, const HeadSpec& b) {
        // averaged sorts before explicit heads
        return a.index_.value_or(0) <=> b.index_.value_or(0);
    }

private:
    HeadSpec() = default;
    explicit HeadSpec(int index) : index_(index) {}
    std::optional<int> index_;
};

struct AttentionMatrix {
    std::vector<AttentionRow> rows;
    std::size_t n_frames = 0;
    int layer_index = 4;
    HeadSpec head = HeadSpec::averaged();

    friend bool operator==(const AttentionMatrix&, const AttentionMatrix&) = default;
};

/// Attention recorded for one decoder layer at one prefix: either a single
/// head-averaged matrix or the full per-head stack (heads 1..n in order).
struct LayerAttention {
    int layer_index = 4;
    bool per_head = false;
    std::vector<AttentionMatrix> matrices;

    friend bool operator==(const LayerAttention&, const LayerAttention&) = default;
};

struct PrefixStep {
    Millis prefix_ms = 0;
    std::size_t n_frames = 0;
    int detected_words = 0;
    Tokens hypothesis;
    std::vector<LayerAttention> attention;

    const LayerAttention* find_layer(int layer_index) const;

    friend bool operator==(const PrefixStep&, const PrefixStep&) = default;
};

struct UtteranceTrace {
    std::string id;
    Millis source_duration_ms = 0;
    Millis segment_ms = 800;
    std::string reference;
    int n_layers = kDefaultLayerCount;
    int n_heads = kDefaultHeadCount;
    std::vector<PrefixStep> steps;

    friend bool operator==(const UtteranceTrace&, const UtteranceTrace&) = default;
};

enum class PolicyKind { edatt, local_agreement, waitk };

std::string to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& text);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::edatt;
    double alpha = 0.2;
    int lambda = 2;
    int layer = 4;
    HeadSpec head = HeadSpec::averaged();
    int k = 3;
    Millis segment_ms = 800;
    // Evaluate the threshold rule on raw rows instead of last-frame-filtered ones.
    bool unfiltered = false;

    /// Throws Error("domain") when a field is outside its domain.
    void check() const;
};

struct DelayRecord {
    std::string token;
    Millis ideal_delay_ms = 0;
    Millis ca_delay_ms = 0;

    friend bool operator==(const DelayRecord&, const DelayRecord&) = default;
};

struct Violation {
    std::string utterance;
    std::optional<std::size_t> step;  // 0-based step index, if step-specific
    std::string invariant;
    std::string detail;

    std::string to_string() const;
};

/// Checks every trace invariant; empty result means the trace is valid.
std::vector<Violation> validate_trace(const UtteranceTrace& trace);

/// Expected prefix schedule: segment, 2*segment, ..., source duration.
std::vector<Millis> prefix_schedule(Millis source_duration_ms, Millis segment_ms);

}  // namespace simulst
