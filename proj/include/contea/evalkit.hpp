#pragma once
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "contea/config.hpp"
#include "contea/kg_store.hpp"
#include "contea/matcher.hpp"

namespace contea {

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long correct_count = 0;
    std::optional<double> new_entity_recall; // empty = not applicable
};

// P = |pred ∩ gold| / |pred| (0 for empty predictions), R = |pred ∩ gold| / |gold|,
// F1 the harmonic mean. Predictions over non-test entities count against
// precision. Throws on an empty gold set.
Metrics evaluate(const TrustworthyAlignment& predicted, const std::vector<AlignPair>& gold);

// The entities introduced after t=0, per KG side.
struct NewEntities {
    std::unordered_set<EntityId> kg1;
    std::unordered_set<EntityId> kg2;

    bool contains(const AlignPair& p) const {
        return kg1.contains(p.first) || kg2.contains(p.second);
    }
    bool empty() const { return kg1.empty() && kg2.empty(); }
};

// Recall restricted to gold pairs that involve at least one new entity,
// against predicted pairs involving at least one new entity. Empty optional
// when no gold pair involves a new entity.
std::optional<double> new_entity_recall(const TrustworthyAlignment& predicted,
                                        const std::vector<AlignPair>& gold,
                                        const NewEntities& new_entities);

// Name-level variant used when scoring exported alignment files.
Metrics evaluate_name_pairs(const std::vector<std::pair<std::string, std::string>>& predicted,
                            const std::vector<std::pair<std::string, std::string>>& gold);

struct SnapshotRecord {
    int t = 0;
    Mode mode = Mode::full;
    Metrics metrics;
    double wall_time_s = 0.0; // training / finetuning time at this snapshot
    std::size_t ta_size = 0;
    std::size_t seed_size = 0;
    std::size_t valid_size = 0;
    std::size_t test_size = 0;
};

struct RunRecord {
    std::vector<SnapshotRecord> snapshots;
};

// Writes metrics.csv (snapshot,mode,precision,recall,f1,new_entity_recall,
// wall_time_s,ta_size) and growth.csv (snapshot,correct_alignment_count),
// LF endings, deterministic for identical records.
void emit_report(const RunRecord& record, const std::filesystem::path& out_dir);

} // namespace contea
