#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "contea/error.hpp"
#include "contea/matcher.hpp"
#include "contea/reference.hpp"
#include "contea/rng.hpp"

using namespace contea;

namespace {

Mat unit_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Mat m(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
        normalize_row(m.row(r), d);
    }
    return m;
}

TrustworthyAlignment ta_from(std::initializer_list<ScoredPair> pairs) {
    TrustworthyAlignment ta;
    ta.pairs = pairs;
    return ta;
}

} // namespace

TEST_CASE("cosine similarity basics") {
    Mat a(2, 2), b(2, 2);
    a(0, 0) = 1.0;          // e1 = (1, 0)
    a(1, 1) = 1.0;          // e2 = (0, 1)
    b(0, 0) = 1.0;          // identical to e1
    b(1, 1) = -1.0;         // opposite of e2
    Mat s = similarity(a, b, {MetricKind::cosine, 0});
    CHECK(s(0, 0) == doctest::Approx(1.0));
    CHECK(s(0, 1) == doctest::Approx(0.0)); // orthogonal
    CHECK(s(1, 1) == doctest::Approx(-1.0));
}

TEST_CASE("zero vector under cosine is a degenerate vector error") {
    Mat a(2, 3, 0.0);
    a(0, 0) = 1.0; // row 1 stays zero
    Mat b = unit_rows(2, 3, 1);
    CHECK_THROWS_WITH_AS(similarity(a, b, {MetricKind::cosine, 0}),
                         doctest::Contains("degenerate vector error"), Error);
}

TEST_CASE("csls matrix equals the triple-loop oracle") {
    Mat a = unit_rows(10, 6, 2);
    Mat b = unit_rows(10, 6, 3);
    Mat got = similarity(a, b, {MetricKind::csls, 3});
    Mat want = reference::csls(a, b, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            CHECK(std::abs(got(i, j) - want(i, j)) < 1e-12);
        }
    }
}

TEST_CASE("csls_k outside [1, candidate count) is rejected") {
    Mat a = unit_rows(4, 3, 4);
    Mat b = unit_rows(4, 3, 5);
    CHECK_THROWS_WITH_AS(similarity(a, b, {MetricKind::csls, 4}),
                         doctest::Contains("csls_k"), Error);
    CHECK_THROWS_WITH_AS(similarity(a, b, {MetricKind::csls, 0}),
                         doctest::Contains("csls_k"), Error);
}

TEST_CASE("bidirectional search on identical row sets returns the identity pairs") {
    Mat a = unit_rows(12, 5, 6);
    TrustworthyAlignment ta = bidirectional_search(a, a, {MetricKind::cosine, 0});
    REQUIRE(ta.size() == 12);
    TrustworthyAlignment sorted = ta;
    sorted.sort_canonical();
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(sorted.pairs[i].e1 == static_cast<EntityId>(i));
        CHECK(sorted.pairs[i].e2 == static_cast<EntityId>(i));
        CHECK(sorted.pairs[i].score == doctest::Approx(1.0));
    }
}

TEST_CASE("bidirectional search hand case: both mutual argmaxes") {
    Mat a(2, 2), b(2, 2);
    a(0, 0) = 1.0; // (1,0)
    a(1, 1) = 1.0; // (0,1)
    double n = std::sqrt(0.9 * 0.9 + 0.1 * 0.1);
    b(0, 0) = 0.9 / n;
    b(0, 1) = 0.1 / n;
    b(1, 0) = 0.6;
    b(1, 1) = 0.8;
    TrustworthyAlignment ta = bidirectional_search(a, b, {MetricKind::cosine, 0});
    ta.sort_canonical();
    REQUIRE(ta.size() == 2);
    CHECK(ta.pairs[0].e1 == 0);
    CHECK(ta.pairs[0].e2 == 0);
    CHECK(ta.pairs[1].e1 == 1);
    CHECK(ta.pairs[1].e2 == 1);
}

TEST_CASE("bidirectional search equals the O(n^2) oracle on random inputs") {
    for (auto metric : {SimilarityMetric{MetricKind::cosine, 0}, SimilarityMetric{MetricKind::csls, 5}}) {
        Mat a = unit_rows(60, 8, 7);
        Mat b = unit_rows(66, 8, 8);
        TrustworthyAlignment got = bidirectional_search(a, b, metric);
        got.sort_canonical();
        auto want = reference::bidirectional_search(a, b, metric);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got.pairs[i].e1 == want[i].e1);
            CHECK(got.pairs[i].e2 == want[i].e2);
        }
    }
}

TEST_CASE("bidirectional search is symmetric under argument swap") {
    Mat a = unit_rows(20, 6, 9);
    Mat b = unit_rows(25, 6, 10);
    SimilarityMetric metric{MetricKind::csls, 4};
    TrustworthyAlignment fwd = bidirectional_search(a, b, metric);
    TrustworthyAlignment bwd = bidirectional_search(b, a, metric);
    fwd.sort_canonical();
    std::vector<AlignPair> transposed;
    for (const ScoredPair& p : bwd.pairs) transposed.emplace_back(p.e2, p.e1);
    std::sort(transposed.begin(), transposed.end());
    REQUIRE(fwd.size() == transposed.size());
    for (std::size_t i = 0; i < transposed.size(); ++i) {
        CHECK(fwd.pairs[i].e1 == transposed[i].first);
        CHECK(fwd.pairs[i].e2 == transposed[i].second);
    }
}

TEST_CASE("bidirectional search output is injective in both coordinates") {
    Mat a = unit_rows(40, 4, 11);
    Mat b = unit_rows(40, 4, 12);
    TrustworthyAlignment ta = bidirectional_search(a, b, {MetricKind::cosine, 0});
    CHECK(ta.conflict_free());
}

TEST_CASE("integrate_alignment resolves conflicts toward the higher score") {
    GrowthDelta delta;
    auto merged = integrate_alignment(ta_from({{1, 2, 0.4, 0}}), ta_from({{1, 3, 0.6, 1}}), delta);
    REQUIRE(merged.size() == 1);
    CHECK(merged.pairs[0].e2 == 3);
    CHECK(merged.pairs[0].score == doctest::Approx(0.6));
}

TEST_CASE("integrate_alignment with empty old set keeps the new pair") {
    GrowthDelta delta;
    auto merged = integrate_alignment({}, ta_from({{7, 9, 0.9, 1}}), delta);
    REQUIRE(merged.size() == 1);
    CHECK(merged.pairs[0].e1 == 7);
    CHECK(merged.pairs[0].found_at == 1);
}

TEST_CASE("integrate_alignment keeps the older pair on score ties") {
    GrowthDelta delta;
    auto merged = integrate_alignment(ta_from({{1, 2, 0.5, 0}}), ta_from({{1, 3, 0.5, 1}}), delta);
    REQUIRE(merged.size() == 1);
    CHECK(merged.pairs[0].e2 == 2);
    CHECK(merged.pairs[0].found_at == 0);
}

TEST_CASE("integrate_alignment is idempotent") {
    GrowthDelta delta;
    auto ta = ta_from({{1, 2, 0.5, 0}, {3, 4, 0.8, 0}, {5, 6, 0.2, 0}});
    auto merged = integrate_alignment(ta, ta, delta);
    REQUIRE(merged.size() == ta.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        CHECK(merged.pairs[i].e1 == ta.pairs[i].e1);
        CHECK(merged.pairs[i].e2 == ta.pairs[i].e2);
        CHECK(merged.pairs[i].score == ta.pairs[i].score);
    }
}

TEST_CASE("integrate_alignment rejects inputs with internal conflicts") {
    GrowthDelta delta;
    auto bad = ta_from({{1, 2, 0.5, 0}, {1, 3, 0.6, 0}});
    CHECK_THROWS_WITH_AS(integrate_alignment(bad, {}, delta),
                         doctest::Contains("precondition violated"), Error);
}

TEST_CASE("integrate_alignment matches the repeated-max oracle on randomized cases") {
    Rng rng(13);
    for (int round = 0; round < 300; ++round) {
        auto random_ta = [&](int found_at) {
            TrustworthyAlignment ta;
            std::vector<EntityId> left, right;
            for (EntityId e = 0; e < 12; ++e) {
                left.push_back(e);
                right.push_back(e);
            }
            rng.shuffle(left);
            rng.shuffle(right);
            std::size_t n = rng.index(7);
            for (std::size_t i = 0; i < n; ++i) {
                // quantized scores force plenty of ties
                double score = static_cast<double>(rng.index(5)) / 4.0;
                ta.pairs.push_back({left[i], right[i], score, found_at});
            }
            return ta;
        };
        TrustworthyAlignment old_ta = random_ta(0);
        TrustworthyAlignment new_ta = random_ta(1);
        TrustworthyAlignment merged = integrate_alignment(old_ta, new_ta, {});
        CHECK(merged.conflict_free());
        auto want = reference::integrate(old_ta.pairs, new_ta.pairs);
        REQUIRE(merged.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(merged.pairs[i].e1 == want[i].e1);
            CHECK(merged.pairs[i].e2 == want[i].e2);
            CHECK(merged.pairs[i].score == want[i].score);
            CHECK(merged.pairs[i].found_at == want[i].found_at);
        }
    }
}

TEST_CASE("no silent loss: non-conflicting pairs all survive integration") {
    GrowthDelta delta;
    auto old_ta = ta_from({{1, 1, 0.3, 0}, {2, 2, 0.9, 0}});
    auto new_ta = ta_from({{3, 3, 0.1, 1}, {4, 4, 0.2, 1}});
    auto merged = integrate_alignment(old_ta, new_ta, delta);
    CHECK(merged.size() == 4);
}
