#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "simulst/core.hpp"

namespace simulst::metrics {

/// Delays d_1..d_|Y| of the emitted tokens against a source of |X| ms and a
/// reference of |Y*| tokens.
struct LatencyInput {
    std::vector<Millis> delays;
    Millis source_duration_ms = 0;
    std::size_t ref_len = 1;
    // Delay value marking "source exhausted" for the tau cutoff. Defaults to
    // source_duration_ms; computation-aware series use the wall time of the
    // final-flush boundary instead (see computation_aware_input).
    std::optional<Millis> terminal_ms;

    std::size_t hyp_len() const { return delays.size(); }
};

/// 1-based index of the first delay reaching the terminal value; |Y| if none.
std::size_t lagging_cutoff(const LatencyInput& in);

/// Average Lagging, gamma = |X| / |Y*|. Throws Error("metrics") on empty
/// delays or a zero reference length.
double average_lagging(const LatencyInput& in);

/// Length-adaptive AL, gamma = |X| / max(|Y|, |Y*|).
double laal(const LatencyInput& in);

/// Differentiable AL: d'_1 = d_1, d'_i = max(d_i, d'_{i-1} + gamma), averaged
/// over all |Y| tokens with gamma = |X| / |Y*|.
double dal(const LatencyInput& in);

/// Builds the computation-aware input: CA delays, with the tau cutoff placed
/// at the CA delay of the first token written after the source was exhausted.
LatencyInput computation_aware_input(std::span<const Millis> ideal_delays, std::span<const Millis> ca_delays,
                                     Millis source_duration_ms, std::size_t ref_len);

}  // namespace simulst::metrics
