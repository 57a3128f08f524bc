#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "simulst/core.hpp"
#include "simulst/trace_io.hpp"
#include "support.hpp"

using namespace simulst;
using simulst::testing::three_step_trace;

namespace {

bool names(const std::vector<Violation>& v, const std::string& invariant) {
    for (const auto& x : v)
        if (x.invariant == invariant) return true;
    return false;
}

UtteranceTrace random_trace(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> steps_d(1, 4), tokens_d(0, 5), heads_d(0, 1);
    std::uniform_real_distribution<double> w(0.0, 1.0);
    UtteranceTrace t;
    t.id = "r" + std::to_string(rng() % 1000);
    t.segment_ms = 800;
    const int steps = steps_d(rng);
    t.source_duration_ms = 800.0 * steps - (heads_d(rng) ? 300.0 : 0.0);
    t.reference = "x y z";
    t.n_heads = 2;
    const auto schedule = prefix_schedule(t.source_duration_ms, t.segment_ms);
    Tokens hyp;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
        const std::size_t frames = 3 * (s + 1);
        const int n_tok = tokens_d(rng);
        hyp.clear();
        for (int i = 0; i < n_tok; ++i) hyp.push_back("ü" + std::to_string(i));
        auto row = [&] {
            AttentionRow r(frames);
            for (double& x : r) x = w(rng);
            return simulst::testing::normalized(r);
        };
        PrefixStep step;
        step.prefix_ms = schedule[s];
        step.n_frames = frames;
        step.detected_words = static_cast<int>(s);
        step.hypothesis = hyp;
        LayerAttention layer;
        layer.layer_index = 4;
        layer.per_head = heads_d(rng) == 1;
        const int count = layer.per_head ? 2 : 1;
        for (int h = 0; h < count; ++h) {
            AttentionMatrix m;
            m.n_frames = frames;
            m.layer_index = 4;
            m.head = layer.per_head ? HeadSpec::head(h + 1) : HeadSpec::averaged();
            for (int i = 0; i < n_tok; ++i) m.rows.push_back(row());
            layer.matrices.push_back(m);
        }
        step.attention.push_back(layer);
        t.steps.push_back(step);
    }
    return t;
}

}  // namespace

TEST_CASE("well-formed trace has no violations") {
    CHECK(validate_trace(three_step_trace()).empty());
}

TEST_CASE("short final step is reported as coverage") {
    auto t = three_step_trace();
    t.source_duration_ms = 2600;
    const auto v = validate_trace(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].invariant == "final step coverage");
}

TEST_CASE("row summing to 0.90 is reported with its sum") {
    auto t = three_step_trace();
    auto& row = t.steps[1].attention[0].matrices[0].rows[0];
    for (double& x : row) x *= 0.9;
    const auto v = validate_trace(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].invariant == "row normalization");
    CHECK(v[0].step == std::optional<std::size_t>(1));
    CHECK(v[0].detail.find("0.9") != std::string::npos);
}

TEST_CASE("structural violations") {
    SUBCASE("hypothesis without rows") {
        auto t = three_step_trace();
        t.steps[0].hypothesis.push_back("extra");
        CHECK(names(validate_trace(t), "hypothesis/attention alignment"));
    }
    SUBCASE("shrinking frame count") {
        auto t = three_step_trace();
        t.steps[2] = simulst::testing::make_step(2400, {"a", "b", "c"},
                                                 std::vector<AttentionRow>(3, AttentionRow(2, 0.5)), 3);
        CHECK(names(validate_trace(t), "frame monotonicity"));
    }
    SUBCASE("negative weight") {
        auto t = three_step_trace();
        auto& row = t.steps[0].attention[0].matrices[0].rows[0];
        row[0] = -0.25;
        row[1] = 0.75;
        CHECK(names(validate_trace(t), "non-negative weights"));
    }
    SUBCASE("layer out of range") {
        auto t = three_step_trace();
        t.n_layers = 3;
        CHECK(names(validate_trace(t), "layer range"));
    }
    SUBCASE("off-schedule prefix") {
        auto t = three_step_trace();
        t.steps[1].prefix_ms = 1500;
        CHECK(names(validate_trace(t), "segment schedule"));
    }
    SUBCASE("empty id and zero duration") {
        UtteranceTrace t;
        const auto v = validate_trace(t);
        CHECK(names(v, "utterance id"));
        CHECK(names(v, "positive duration"));
    }
}

TEST_CASE("prefix schedule") {
    CHECK(prefix_schedule(2400, 800) == std::vector<Millis>{800, 1600, 2400});
    CHECK(prefix_schedule(2000, 800) == std::vector<Millis>{800, 1600, 2000});
    CHECK(prefix_schedule(500, 800) == std::vector<Millis>{500});
}

TEST_CASE("policy config domains") {
    PolicyConfig cfg;
    CHECK_NOTHROW(cfg.check());
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.check(), Error);
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(cfg.check(), Error);
    cfg = PolicyConfig{};
    cfg.lambda = 0;
    CHECK_THROWS_AS(cfg.check(), Error);
}

TEST_CASE("head spec text form") {
    CHECK(HeadSpec::parse("averaged").is_averaged());
    CHECK(HeadSpec::parse("3") == HeadSpec::head(3));
    CHECK(HeadSpec::head(3).to_string() == "3");
    CHECK(HeadSpec::averaged() < HeadSpec::head(1));
    CHECK_THROWS_AS(HeadSpec::parse("0"), Error);
    CHECK_THROWS_AS(HeadSpec::parse("x"), Error);
}

TEST_CASE("serialize then parse round-trips random traces") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto t = random_trace(rng);
        REQUIRE(validate_trace(t).empty());
        CHECK(parse_trace(serialize_trace(t)) == t);
    }
}

TEST_CASE("fixture trace reads cleanly") {
    const auto file = read_trace_file(simulst::testing::fixture("fixture_trace.jsonl"));
    CHECK(file.errors.empty());
    REQUIRE(file.traces.size() == 3);
    for (const auto& t : file.traces) CHECK(validate_trace(t).empty());
    CHECK(file.traces[2].steps[0].attention[1].per_head);
}

TEST_CASE("parse errors carry line numbers") {
    std::istringstream in(serialize_trace(three_step_trace()) + "\n\n{\"schema\": 1, \"id\": \n" +
                          R"({"schema": 2, "id": "x"})" + "\n");
    const auto file = read_traces(in);
    CHECK(file.traces.size() == 1);
    REQUIRE(file.errors.size() == 2);
    CHECK(file.errors[0].line == 3);
    CHECK(file.errors[1].line == 4);
}

TEST_CASE("missing schema field is rejected") {
    auto line = serialize_trace(three_step_trace());
    line.replace(line.find("\"schema\":1,"), 11, "");
    CHECK_THROWS_AS(parse_trace(line), Error);
}
