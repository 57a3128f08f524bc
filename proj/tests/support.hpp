// Shared helpers for the test binaries: fixture paths, small trace builders,
// and brute-force reference implementations. Oracles here are written from
// the metric and policy definitions and never call into the engine.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "simulst/core.hpp"

namespace simulst::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(SIMULST_FIXTURES) / name;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("simulst-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline AttentionRow normalized(std::vector<double> ints) {
    double total = 0;
    for (double x : ints) total += x;
    for (double& x : ints) x /= total;
    return ints;
}

/// Step with one head-averaged layer.
inline PrefixStep make_step(Millis prefix, Tokens hyp, std::vector<AttentionRow> rows, int words = 0, int layer = 4) {
    PrefixStep step;
    step.prefix_ms = prefix;
    step.n_frames = rows.empty() ? 0 : rows.front().size();
    step.detected_words = words;
    step.hypothesis = std::move(hyp);
    AttentionMatrix m;
    m.rows = std::move(rows);
    m.n_frames = step.n_frames;
    m.layer_index = layer;
    LayerAttention l;
    l.layer_index = layer;
    l.matrices.push_back(std::move(m));
    step.attention.push_back(std::move(l));
    return step;
}

/// Step with the given frame count and no hypothesis.
inline PrefixStep empty_step(Millis prefix, std::size_t frames, int words = 0) {
    auto step = make_step(prefix, {}, {}, words);
    step.n_frames = frames;
    step.attention.front().matrices.front().n_frames = frames;
    return step;
}

/// Three-step trace over 2400 ms with uniform rows; valid by construction.
inline UtteranceTrace three_step_trace() {
    UtteranceTrace t;
    t.id = "u1";
    t.source_duration_ms = 2400;
    t.segment_ms = 800;
    t.reference = "a b c";
    const Tokens hyps[] = {{"a"}, {"a", "b"}, {"a", "b", "c"}};
    for (int s = 0; s < 3; ++s) {
        const std::size_t frames = 4 * static_cast<std::size_t>(s + 1);
        std::vector<AttentionRow> rows(hyps[s].size(), AttentionRow(frames, 1.0 / static_cast<double>(frames)));
        t.steps.push_back(make_step(800.0 * (s + 1), hyps[s], rows, s + 1));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Brute-force latency oracles, literal transcriptions of the definitions,
// accumulated in long double.

inline long double oracle_lagging(const std::vector<double>& d, double x, double gamma) {
    std::size_t tau = d.size();
    for (std::size_t i = 1; i <= d.size(); ++i) {
        if (d[i - 1] == x) {
            tau = i;
            break;
        }
    }
    long double sum = 0;
    for (std::size_t i = 1; i <= tau; ++i) sum += (long double)d[i - 1] - (long double)(i - 1) * gamma;
    return sum / (long double)tau;
}

inline long double oracle_al(const std::vector<double>& d, double x, std::size_t ref_len) {
    return oracle_lagging(d, x, x / (double)ref_len);
}

inline long double oracle_laal(const std::vector<double>& d, double x, std::size_t ref_len) {
    return oracle_lagging(d, x, x / (double)std::max(d.size(), ref_len));
}

inline long double oracle_dal(const std::vector<double>& d, double x, std::size_t ref_len) {
    const long double gamma = (long double)x / (long double)ref_len;
    std::vector<long double> adjusted(d.size());
    long double sum = 0;
    for (std::size_t i = 1; i <= d.size(); ++i) {
        adjusted[i - 1] = i == 1 ? (long double)d[0] : std::max((long double)d[i - 1], adjusted[i - 2] + gamma);
        sum += adjusted[i - 1] - (long double)(i - 1) * gamma;
    }
    return sum / (long double)d.size();
}

inline bool close_relative(double got, long double want, double rel) {
    const long double scale = std::max<long double>(std::fabs(want), 1.0L);
    return std::fabs((long double)got - want) <= rel * scale;
}

/// Longest common prefix by exhaustive comparison of every candidate length.
inline std::size_t oracle_lcp(const Tokens& a, const Tokens& b) {
    std::size_t best = 0;
    for (std::size_t len = 0; len <= std::min(a.size(), b.size()); ++len) {
        bool same = true;
        for (std::size_t i = 0; i < len; ++i) same = same && a[i] == b[i];
        if (same) best = len;
    }
    return best;
}

}  // namespace simulst::testing
