#include "simulst/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace simulst::attention {

FilteredRow filter_last_frame(std::span<const double> row, double epsilon) {
    if (row.size() < 2) {
        throw Error("frames", "cannot filter the last frame of a row with " + std::to_string(row.size()) +
                                  " frame(s)");
    }
    const auto kept = row.first(row.size() - 1);
    const double mass = std::accumulate(kept.begin(), kept.end(), 0.0);

    FilteredRow out;
    if (mass < epsilon) {
        out.weights.assign(kept.size(), 1.0 / static_cast<double>(kept.size()));
        out.degenerate = true;
        return out;
    }
    out.weights.reserve(kept.size());
    for (double w : kept) out.weights.push_back(w / mass);
    return out;
}

std::vector<FilteredRow> filter_matrix(const AttentionMatrix& matrix, double epsilon) {
    std::vector<FilteredRow> rows;
    rows.reserve(matrix.rows.size());
    for (const auto& row : matrix.rows) rows.push_back(filter_last_frame(row, epsilon));
    return rows;
}

AttentionMatrix filtered_copy(const AttentionMatrix& matrix, double epsilon) {
    AttentionMatrix out;
    out.layer_index = matrix.layer_index;
    out.head = matrix.head;
    out.n_frames = matrix.n_frames > 0 ? matrix.n_frames - 1 : 0;
    out.rows.reserve(matrix.rows.size());
    for (const auto& row : matrix.rows) out.rows.push_back(filter_last_frame(row, epsilon).weights);
    return out;
}

AttentionMatrix average_heads(std::span<const AttentionMatrix> stack) {
    if (stack.empty()) throw Error("shape", "cannot average an empty head stack");
    const auto& first = stack.front();
    for (const auto& m : stack) {
        bool same = m.n_frames == first.n_frames && m.rows.size() == first.rows.size() &&
                    m.layer_index == first.layer_index;
        for (std::size_t j = 0; same && j < m.rows.size(); ++j) {
            same = m.rows[j].size() == first.rows[j].size();
        }
        if (!same) throw Error("shape", "head matrices differ in shape");
    }

    AttentionMatrix mean;
    mean.n_frames = first.n_frames;
    mean.layer_index = first.layer_index;
    mean.head = HeadSpec::averaged();
    mean.rows.resize(first.rows.size());
    const double scale = 1.0 / static_cast<double>(stack.size());
    for (std::size_t j = 0; j < first.rows.size(); ++j) {
        auto& row = mean.rows[j];
        row.assign(first.rows[j].size(), 0.0);
        for (const auto& m : stack) {
            for (std::size_t i = 0; i < row.size(); ++i) row[i] += m.rows[j][i];
        }
        for (double& w : row) w *= scale;
    }
    return mean;
}

double tail_mass(std::span<const double> weights, int lambda) {
    const auto window = std::min<std::size_t>(static_cast<std::size_t>(std::max(lambda, 0)), weights.size());
    const auto tail = weights.last(window);
    return std::accumulate(tail.begin(), tail.end(), 0.0);
}

double diagonality_score(const AttentionMatrix& matrix, int band) {
    if (matrix.rows.empty() || matrix.n_frames == 0) {
        throw Error("shape", "diagonality of an empty matrix is undefined");
    }
    const auto n_rows = static_cast<double>(matrix.rows.size());
    const auto n_frames = static_cast<long>(matrix.n_frames);
    double total = 0.0;
    for (std::size_t j = 0; j < matrix.rows.size(); ++j) {
        const auto anchor = std::min(
            n_frames - 1, std::lround(static_cast<double>(j) * static_cast<double>(n_frames) / n_rows));
        const long lo = std::max(0L, anchor - band);
        const long hi = std::min(n_frames - 1, anchor + band);
        const auto& row = matrix.rows[j];
        for (long i = lo; i <= hi; ++i) total += row[static_cast<std::size_t>(i)];
    }
    return total / n_rows;
}

AttentionMatrix select(const PrefixStep& step, int layer, const HeadSpec& head) {
    const auto* recorded = step.find_layer(layer);
    if (recorded == nullptr || recorded->matrices.empty()) {
        throw Error("attention", "layer " + std::to_string(layer) + " not recorded at prefix " +
                                     std::to_string(step.prefix_ms) + " ms");
    }
    if (head.is_averaged()) {
        if (!recorded->per_head) return recorded->matrices.front();
        return average_heads(recorded->matrices);
    }
    if (!recorded->per_head) {
        throw Error("attention", "head " + head.to_string() + " requested but layer " + std::to_string(layer) +
                                     " is stored head-averaged");
    }
    for (const auto& m : recorded->matrices) {
        if (m.head == head) return m;
    }
    throw Error("attention", "head " + head.to_string() + " not recorded for layer " + std::to_string(layer));
}

}  // namespace simulst::attention
