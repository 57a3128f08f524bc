#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "simulst/attention.hpp"
#include "support.hpp"

using namespace simulst;
using namespace simulst::attention;
using doctest::Approx;

namespace {

AttentionRow random_row(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> w(0.0, 1.0);
    AttentionRow r(n);
    for (double& x : r) x = w(rng);
    return simulst::testing::normalized(r);
}

AttentionMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t frames) {
    AttentionMatrix m;
    m.n_frames = frames;
    for (std::size_t j = 0; j < rows; ++j) m.rows.push_back(random_row(rng, frames));
    return m;
}

}  // namespace

TEST_CASE("filter_last_frame examples") {
    const std::vector<double> a{0.01, 0.02, 0.97};
    auto f = filter_last_frame(a);
    REQUIRE(f.weights.size() == 2);
    CHECK(f.weights[0] == Approx(1.0 / 3));
    CHECK(f.weights[1] == Approx(2.0 / 3));
    CHECK_FALSE(f.degenerate);

    const std::vector<double> b{0.25, 0.25, 0.25, 0.25};
    f = filter_last_frame(b);
    REQUIRE(f.weights.size() == 3);
    for (double x : f.weights) CHECK(x == Approx(1.0 / 3));

    const std::vector<double> c{0.0, 0.0, 1.0};
    f = filter_last_frame(c);
    CHECK(f.degenerate);
    CHECK(f.weights == std::vector<double>{0.5, 0.5});

    const std::vector<double> d{1.0};
    CHECK_THROWS_AS(filter_last_frame(d), Error);
}

TEST_CASE("filtering keeps the order of surviving weights") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 500; ++t) {
        const auto row = random_row(rng, 2 + rng() % 10);
        const auto f = filter_last_frame(row);
        double sum = 0;
        for (double x : f.weights) sum += x;
        CHECK(sum == Approx(1.0).epsilon(1e-6));
        for (std::size_t i = 0; i < f.weights.size(); ++i)
            for (std::size_t j = i + 1; j < f.weights.size(); ++j)
                CHECK((row[i] <= row[j]) == (f.weights[i] <= f.weights[j]));
    }
}

TEST_CASE("average_heads") {
    AttentionMatrix m;
    m.n_frames = 3;
    m.rows = {{0.2, 0.3, 0.5}};
    std::vector<AttentionMatrix> same{m, m};
    CHECK(average_heads(same).rows == m.rows);

    AttentionMatrix p, q;
    p.n_frames = q.n_frames = 2;
    p.rows = {{1, 0}};
    q.rows = {{0, 1}};
    std::vector<AttentionMatrix> pq{p, q};
    const auto avg = average_heads(pq);
    CHECK(avg.rows[0] == std::vector<double>{0.5, 0.5});
    CHECK(avg.head.is_averaged());

    std::mt19937_64 rng(11);
    std::vector<AttentionMatrix> eight;
    for (int h = 0; h < 8; ++h) eight.push_back(random_matrix(rng, 1, 9));
    const auto mean = average_heads(eight);
    double sum = 0;
    for (double x : mean.rows[0]) sum += x;
    CHECK(std::fabs(sum - 1.0) <= 1e-9);

    q.n_frames = 3;
    q.rows = {{0, 0, 1}};
    std::vector<AttentionMatrix> bad{p, q};
    CHECK_THROWS_AS(average_heads(bad), Error);
    CHECK_THROWS_AS(average_heads(std::span<const AttentionMatrix>{}), Error);
}

TEST_CASE("averaging commutes with filtering on non-degenerate stacks") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        std::vector<AttentionMatrix> stack;
        for (int h = 0; h < 4; ++h) stack.push_back(random_matrix(rng, 3, 6));
        const auto a = filtered_copy(average_heads(stack));
        std::vector<AttentionMatrix> filtered;
        for (const auto& m : stack) filtered.push_back(filtered_copy(m));
        const auto b = average_heads(filtered);
        // Each head is renormalized by its own residual, so in general only
        // the normalization is shared.
        for (std::size_t j = 0; j < 3; ++j) {
            double sa = 0, sb = 0;
            for (std::size_t i = 0; i < 5; ++i) {
                sa += a.rows[j][i];
                sb += b.rows[j][i];
            }
            CHECK(std::fabs(sa - 1) <= 1e-9);
            CHECK(std::fabs(sb - 1) <= 1e-9);
        }
    }
    // Equal residual masses: the two orders agree to 1e-9.
    for (int t = 0; t < 100; ++t) {
        std::vector<AttentionMatrix> stack;
        for (int h = 0; h < 4; ++h) {
            auto m = random_matrix(rng, 2, 6);
            for (auto& row : m.rows) {
                double kept = 0;
                for (std::size_t i = 0; i < 5; ++i) kept += row[i];
                for (std::size_t i = 0; i < 5; ++i) row[i] *= 0.7 / kept;
                row[5] = 0.3;
            }
            stack.push_back(m);
        }
        const auto a = filtered_copy(average_heads(stack));
        std::vector<AttentionMatrix> filtered;
        for (const auto& m : stack) filtered.push_back(filtered_copy(m));
        const auto b = average_heads(filtered);
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t i = 0; i < 5; ++i) CHECK(std::fabs(a.rows[j][i] - b.rows[j][i]) <= 1e-9);
    }
}

TEST_CASE("tail_mass") {
    const std::vector<double> r{0.1, 0.1, 0.2, 0.3, 0.3};
    CHECK(tail_mass(r, 2) == Approx(0.6));
    CHECK(tail_mass(r, 5) == Approx(1.0));
    const std::vector<double> h{0.5, 0.5};
    CHECK(tail_mass(h, 5) == 1.0);

    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
        const auto row = random_row(rng, 1 + rng() % 8);
        for (int l = 1; l < 10; ++l) CHECK(tail_mass(row, l) <= tail_mass(row, l + 1));
    }
}

TEST_CASE("diagonality_score") {
    AttentionMatrix eye;
    eye.n_frames = 4;
    for (std::size_t j = 0; j < 4; ++j) {
        AttentionRow r(4, 0.0);
        r[j] = 1;
        eye.rows.push_back(r);
    }
    CHECK(diagonality_score(eye, 0) == Approx(1.0));

    AttentionMatrix uniform;
    uniform.n_frames = 5;
    uniform.rows.assign(3, AttentionRow(5, 0.2));
    CHECK(diagonality_score(uniform, 0) == Approx(0.2));

    CHECK_THROWS_AS(diagonality_score(AttentionMatrix{}, 1), Error);
}

TEST_CASE("diagonality on random 4x8 matches a band-mass sum") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_matrix(rng, 4, 8);
        double total = 0;
        for (int j = 0; j < 4; ++j) {
            const int anchor = (j * 8 + 2) / 4;  // round(j * 8 / 4), exact here
            for (int f = 0; f < 8; ++f)
                if (f >= anchor - 1 && f <= anchor + 1) total += m.rows[j][f];
        }
        CHECK(diagonality_score(m, 1) == Approx(total / 4).epsilon(1e-12));
    }
}

TEST_CASE("select resolves the requested view") {
    auto step = simulst::testing::make_step(800, {"a"}, {{0.5, 0.5}});
    CHECK(select(step, 4, HeadSpec::averaged()).rows == step.attention[0].matrices[0].rows);
    CHECK_THROWS_AS(select(step, 3, HeadSpec::averaged()), Error);
    CHECK_THROWS_AS(select(step, 4, HeadSpec::head(1)), Error);

    LayerAttention stack;
    stack.layer_index = 2;
    stack.per_head = true;
    for (int h = 1; h <= 2; ++h) {
        AttentionMatrix m;
        m.n_frames = 2;
        m.layer_index = 2;
        m.head = HeadSpec::head(h);
        m.rows = {h == 1 ? AttentionRow{1, 0} : AttentionRow{0, 1}};
        stack.matrices.push_back(m);
    }
    step.attention.push_back(stack);
    CHECK(select(step, 2, HeadSpec::head(2)).rows[0] == AttentionRow{0, 1});
    CHECK(select(step, 2, HeadSpec::averaged()).rows[0] == AttentionRow{0.5, 0.5});
}
