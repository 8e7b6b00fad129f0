#pragma once
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace contea {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

enum class Direction : std::uint8_t { out = 0, in = 1 };

struct Triple {
    EntityId head;
    RelationId rel;
    EntityId tail;
    auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::size_t h = static_cast<std::size_t>(t.head);
        h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::size_t>(t.rel);
        h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::size_t>(t.tail);
        return h;
    }
};

// One incident triple as seen from an entity: (relation, other endpoint,
// direction of the triple relative to the entity).
struct NeighborEdge {
    RelationId rel;
    EntityId neighbor;
    Direction dir;
    auto operator<=>(const NeighborEdge&) const = default;
};

// One KG at one timestamp. Entities and relations are interned to dense
// ids in first-occurrence order; triples keep insertion order (deduped);
// adjacency holds both directions of every triple, sorted by
// (relation, neighbor, direction).
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    // Construction used by the loader, the generator, and tests.
    EntityId intern_entity(const std::string& name);
    RelationId intern_relation(const std::string& name);
    // Returns false if the triple was already present.
    bool add_triple(const std::string& head, const std::string& rel, const std::string& tail);
    // Call once after the last add_triple; builds the adjacency index.
    void finalize();

    std::size_t num_entities() const { return entity_names_.size(); }
    std::size_t num_relations() const { return relation_names_.size(); }
    std::size_t num_triples() const { return triples_.size(); }

    const std::vector<Triple>& triples() const { return triples_; }
    bool has_triple(const Triple& t) const { return triple_set_.contains(t); }

    const std::string& entity_name(EntityId e) const { return entity_names_.at(static_cast<std::size_t>(e)); }
    const std::string& relation_name(RelationId r) const { return relation_names_.at(static_cast<std::size_t>(r)); }
    std::optional<EntityId> entity_id(const std::string& name) const;
    std::optional<RelationId> relation_id(const std::string& name) const;

    std::span<const NeighborEdge> adjacency(EntityId e) const;

    // Triples in stored order, as text rows; reloading the result recreates
    // the same interned structure.
    std::string serialize_triples() const;

private:
    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<Triple> triples_;
    std::unordered_set<Triple, TripleHash> triple_set_;
    std::vector<std::vector<NeighborEdge>> adjacency_;
};

// The two KGs at one timestamp. The pair shares one dense id space for
// embedding rows: kg1 entities map to [0, |E1|) and kg2 entities to
// [|E1|, |E1|+|E2|), and likewise for relations.
struct SnapshotPair {
    int t = 0;
    KnowledgeGraph kg1;
    KnowledgeGraph kg2;

    std::size_t total_entities() const { return kg1.num_entities() + kg2.num_entities(); }
    std::size_t total_relations() const { return kg1.num_relations() + kg2.num_relations(); }
    std::size_t entity_offset2() const { return kg1.num_entities(); }
    std::size_t relation_offset2() const { return kg1.num_relations(); }
};

// Exact differences between two successive snapshots, expressed in the
// id space of the *next* snapshot. The old_to_next maps carry the id
// remapping for entities and relations that persist (ids may move when the
// next snapshot's files intern in a different order).
struct GrowthDelta {
    std::vector<EntityId> new_entities_1;
    std::vector<EntityId> new_entities_2;
    std::vector<Triple> new_triples_1;
    std::vector<Triple> new_triples_2;
    std::vector<EntityId> old_to_next_1;      // prev kg1 id -> next kg1 id
    std::vector<EntityId> old_to_next_2;
    std::vector<RelationId> rel_old_to_next_1;
    std::vector<RelationId> rel_old_to_next_2;

    bool empty() const {
        return new_entities_1.empty() && new_entities_2.empty() &&
               new_triples_1.empty() && new_triples_2.empty();
    }
};

using AlignPair = std::pair<EntityId, EntityId>; // (kg1 id, kg2 id)

// Seed / validation / test alignment. Pairwise disjoint; seed and valid are
// constant across the snapshots of a run.
struct AlignmentSets {
    std::vector<AlignPair> seed;
    std::vector<AlignPair> valid;
    std::vector<AlignPair> test;
};

// Loads one snapshot directory (kg1_triples.tsv, kg2_triples.tsv,
// train/valid/test_links.tsv). t < 0 means: infer from a trailing
// "t<digits>" directory name, defaulting to 0.
std::pair<SnapshotPair, AlignmentSets> load_snapshot(const std::filesystem::path& dir, int t = -1);

// Checks Def.-1 monotone growth between consecutive snapshots and returns
// the exact deltas. Relations must not grow.
GrowthDelta validate_growth(const SnapshotPair& prev, const SnapshotPair& next);

// All triples incident to e in stable (relation, neighbor, direction) order.
std::vector<NeighborEdge> neighbors(const KnowledgeGraph& kg, EntityId e);

} // namespace contea
