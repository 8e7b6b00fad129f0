#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "contea/error.hpp"
#include "contea/evalkit.hpp"
#include "contea/rng.hpp"

using namespace contea;
namespace fs = std::filesystem;

namespace {

TrustworthyAlignment ta_from(std::initializer_list<ScoredPair> pairs) {
    TrustworthyAlignment ta;
    ta.pairs = pairs;
    return ta;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("evaluate: perfect predictions") {
    std::vector<AlignPair> gold{{0, 0}, {1, 1}};
    Metrics m = evaluate(ta_from({{0, 0, 0.9, 0}, {1, 1, 0.8, 0}}), gold);
    CHECK(m.precision == doctest::Approx(1.0));
    CHECK(m.recall == doctest::Approx(1.0));
    CHECK(m.f1 == doctest::Approx(1.0));
    CHECK(m.correct_count == 2);
}

TEST_CASE("evaluate: disjoint predictions score zero") {
    std::vector<AlignPair> gold{{0, 0}, {1, 1}};
    Metrics m = evaluate(ta_from({{2, 3, 0.9, 0}}), gold);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
}

TEST_CASE("evaluate: partial overlap hand case") {
    // |pred| = 4, |gold| = 8, overlap = 2 -> P = 0.5, R = 0.25, F1 = 1/3
    std::vector<AlignPair> gold;
    for (EntityId e = 0; e < 8; ++e) gold.emplace_back(e, e);
    Metrics m = evaluate(
        ta_from({{0, 0, 1, 0}, {1, 1, 1, 0}, {10, 11, 1, 0}, {12, 13, 1, 0}}), gold);
    CHECK(m.precision == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(0.25));
    CHECK(m.f1 == doctest::Approx(1.0 / 3.0));
    CHECK(m.correct_count == 2);
}

TEST_CASE("evaluate: empty predictions give zero precision, empty gold throws") {
    std::vector<AlignPair> gold{{0, 0}};
    Metrics m = evaluate({}, gold);
    CHECK(m.precision == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK_THROWS_WITH_AS(evaluate({}, {}), doctest::Contains("empty gold set error"), Error);
}

TEST_CASE("new_entity_recall: not applicable without new gold pairs") {
    std::vector<AlignPair> gold{{0, 0}};
    NewEntities none;
    CHECK_FALSE(new_entity_recall(ta_from({{0, 0, 1, 0}}), gold, none).has_value());

    NewEntities unrelated;
    unrelated.kg1.insert(99);
    CHECK_FALSE(new_entity_recall(ta_from({{0, 0, 1, 0}}), gold, unrelated).has_value());
}

TEST_CASE("new_entity_recall: single new gold pair found") {
    std::vector<AlignPair> gold{{0, 0}, {5, 6}};
    NewEntities fresh;
    fresh.kg1.insert(5);
    auto r = new_entity_recall(ta_from({{5, 6, 1, 1}}), gold, fresh);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(1.0));
}

TEST_CASE("new_entity_recall equals the filter-then-evaluate oracle on random instances") {
    Rng rng(17);
    for (int round = 0; round < 50; ++round) {
        std::vector<AlignPair> gold;
        for (EntityId e = 0; e < 20; ++e) gold.emplace_back(e, e);
        NewEntities fresh;
        for (EntityId e = 0; e < 20; ++e) {
            if (rng.bernoulli(0.3)) fresh.kg1.insert(e);
            if (rng.bernoulli(0.3)) fresh.kg2.insert(e);
        }
        TrustworthyAlignment pred;
        for (EntityId e = 0; e < 20; ++e) {
            if (rng.bernoulli(0.5)) {
                EntityId e2 = rng.bernoulli(0.8) ? e : (e + 1) % 20;
                pred.pairs.push_back({e, e2, 0.5, 1});
            }
        }
        auto got = new_entity_recall(pred, gold, fresh);

        // oracle: filter both sides to new-entity pairs, then plain recall
        std::vector<AlignPair> gold_new;
        for (const AlignPair& p : gold) {
            if (fresh.contains(p)) gold_new.push_back(p);
        }
        if (gold_new.empty()) {
            CHECK_FALSE(got.has_value());
            continue;
        }
        std::size_t correct = 0;
        for (const ScoredPair& p : pred.pairs) {
            AlignPair key{p.e1, p.e2};
            if (!fresh.contains(key)) continue;
            for (const AlignPair& g : gold_new) {
                if (g == key) ++correct;
            }
        }
        REQUIRE(got.has_value());
        CHECK(*got == doctest::Approx(static_cast<double>(correct) /
                                      static_cast<double>(gold_new.size())));
    }
}

TEST_CASE("emit_report writes the pinned CSV schemas deterministically") {
    RunRecord record;
    SnapshotRecord s0;
    s0.t = 0;
    s0.mode = Mode::full;
    s0.metrics.precision = 0.5;
    s0.metrics.recall = 0.25;
    s0.metrics.f1 = 1.0 / 3.0;
    s0.metrics.correct_count = 2;
    s0.wall_time_s = 1.25;
    s0.ta_size = 4;
    record.snapshots.push_back(s0);
    SnapshotRecord s1 = s0;
    s1.t = 1;
    s1.metrics.new_entity_recall = 0.125;
    s1.metrics.correct_count = 3;
    record.snapshots.push_back(s1);

    fs::path dir = fs::temp_directory_path() / "contea_report_test";
    fs::remove_all(dir);
    emit_report(record, dir);

    std::string metrics = slurp(dir / "metrics.csv");
    CHECK(metrics ==
          "snapshot,mode,precision,recall,f1,new_entity_recall,wall_time_s,ta_size\n"
          "0,full,0.500000,0.250000,0.333333,NA,1.250,4\n"
          "1,full,0.500000,0.250000,0.333333,0.125000,1.250,4\n");

    std::string growth = slurp(dir / "growth.csv");
    CHECK(growth ==
          "snapshot,correct_alignment_count\n"
          "0,2\n"
          "1,3\n");

    // overwriting produces byte-identical files
    emit_report(record, dir);
    CHECK(slurp(dir / "metrics.csv") == metrics);
    fs::remove_all(dir);
}

TEST_CASE("evaluate_name_pairs matches the id-level semantics") {
    std::vector<std::pair<std::string, std::string>> pred{{"a", "x"}, {"b", "y"}, {"c", "z"}};
    std::vector<std::pair<std::string, std::string>> gold{{"a", "x"}, {"b", "q"}};
    Metrics m = evaluate_name_pairs(pred, gold);
    CHECK(m.correct_count == 1);
    CHECK(m.precision == doctest::Approx(1.0 / 3.0));
    CHECK(m.recall == doctest::Approx(0.5));
}
