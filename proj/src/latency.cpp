#include "simulst/latency.hpp"

#include <algorithm>
#include <limits>

namespace simulst::metrics {

namespace {

void require_valid(const LatencyInput& in) {
    if (in.delays.empty()) throw Error("metrics", "latency of an empty output is undefined");
    if (in.ref_len == 0) throw Error("metrics", "reference length must be >= 1");
    if (!(in.source_duration_ms > 0.0)) throw Error("metrics", "source duration must be > 0");
}

double lagging(const LatencyInput& in, double gamma) {
    const auto tau = lagging_cutoff(in);
    double sum = 0.0;
    for (std::size_t i = 0; i < tau; ++i) sum += in.delays[i] - static_cast<double>(i) * gamma;
    return sum / static_cast<double>(tau);
}

}  // namespace

std::size_t lagging_cutoff(const LatencyInput& in) {
    const Millis terminal = in.terminal_ms.value_or(in.source_duration_ms);
    for (std::size_t i = 0; i < in.delays.size(); ++i) {
        if (in.delays[i] >= terminal) return i + 1;
    }
    return in.delays.size();
}

double average_lagging(const LatencyInput& in) {
    require_valid(in);
    return lagging(in, in.source_duration_ms / static_cast<double>(in.ref_len));
}

double laal(const LatencyInput& in) {
    require_valid(in);
    const auto length = std::max(in.hyp_len(), in.ref_len);
    return lagging(in, in.source_duration_ms / static_cast<double>(length));
}

double dal(const LatencyInput& in) {
    require_valid(in);
    const double gamma = in.source_duration_ms / static_cast<double>(in.ref_len);
    double previous = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < in.delays.size(); ++i) {
        const double adjusted = i == 0 ? in.delays[0] : std::max(in.delays[i], previous + gamma);
        sum += adjusted - static_cast<double>(i) * gamma;
        previous = adjusted;
    }
    return sum / static_cast<double>(in.delays.size());
}

LatencyInput computation_aware_input(std::span<const Millis> ideal_delays, std::span<const Millis> ca_delays,
                                     Millis source_duration_ms, std::size_t ref_len) {
    if (ideal_delays.size() != ca_delays.size()) {
        throw Error("metrics", "ideal and computation-aware delay series differ in length");
    }
    LatencyInput in;
    in.delays.assign(ca_delays.begin(), ca_delays.end());
    in.source_duration_ms = source_duration_ms;
    in.ref_len = ref_len;
    for (std::size_t i = 0; i < ideal_delays.size(); ++i) {
        if (ideal_delays[i] >= source_duration_ms) {
            in.terminal_ms = ca_delays[i];
            break;
        }
    }
    // No token after the source end: tau falls back to |Y| as in the ideal series.
    if (!in.terminal_ms) in.terminal_ms = std::numeric_limits<Millis>::infinity();
    return in;
}

}  // namespace simulst::metrics
