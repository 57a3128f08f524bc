#pragma once

#include <span>
#include <vector>

#include "simulst/core.hpp"

namespace simulst::attention {

/// Residual mass below which a filtered row is treated as degenerate.
inline constexpr double kDegenerateEpsilon = 1e-8;

struct FilteredRow {
    std::vector<double> weights;
    // Set when the mass left after dropping the last frame was below epsilon;
    // weights are then uniform.
    bool degenerate = false;
};

/// Drops the final encoder frame and renormalizes the remaining weights.
/// Throws Error("frames") when the row has fewer than two frames.
FilteredRow filter_last_frame(std::span<const double> row, double epsilon = kDegenerateEpsilon);

/// Applies filter_last_frame to every row of a matrix.
std::vector<FilteredRow> filter_matrix(const AttentionMatrix& matrix, double epsilon = kDegenerateEpsilon);

/// Matrix whose rows are the filtered rows (n_frames reduced by one).
AttentionMatrix filtered_copy(const AttentionMatrix& matrix, double epsilon = kDegenerateEpsilon);

/// Elementwise mean over heads. Throws Error("shape") when the stack is empty
/// or the matrices disagree on shape or layer.
AttentionMatrix average_heads(std::span<const AttentionMatrix> stack);

/// Sum of the last min(lambda, size) weights.
double tail_mass(std::span<const double> weights, int lambda);

/// Mean over rows of the mass within +-band frames of the row's diagonal
/// anchor round(j * n_frames / n_rows). Throws Error("shape") on an empty matrix.
double diagonality_score(const AttentionMatrix& matrix, int band);

/// Resolves the (layer, head) view a policy or analysis asks for. A per-head
/// stack is averaged on demand; an explicit head needs a per-head stack.
/// Throws Error("attention") when the view is not recorded in the step.
AttentionMatrix select(const PrefixStep& step, int layer, const HeadSpec& head);

}  // namespace simulst::attention
