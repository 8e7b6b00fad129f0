#include "contea/kg_store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "contea/error.hpp"

namespace contea {

EntityId KnowledgeGraph::intern_entity(const std::string& name) {
    auto it = entity_ids_.find(name);
    if (it != entity_ids_.end()) return it->second;
    EntityId id = static_cast<EntityId>(entity_names_.size());
    entity_names_.push_back(name);
    entity_ids_.emplace(name, id);
    return id;
}

RelationId KnowledgeGraph::intern_relation(const std::string& name) {
    auto it = relation_ids_.find(name);
    if (it != relation_ids_.end()) return it->second;
    RelationId id = static_cast<RelationId>(relation_names_.size());
    relation_names_.push_back(name);
    relation_ids_.emplace(name, id);
    return id;
}

bool KnowledgeGraph::add_triple(const std::string& head, const std::string& rel,
                                const std::string& tail) {
    Triple t{intern_entity(head), intern_relation(rel), intern_entity(tail)};
    if (triple_set_.contains(t)) return false;
    triple_set_.insert(t);
    triples_.push_back(t);
    return true;
}

void KnowledgeGraph::finalize() {
    adjacency_.assign(entity_names_.size(), {});
    for (const Triple& t : triples_) {
        adjacency_[static_cast<std::size_t>(t.head)].push_back({t.rel, t.tail, Direction::out});
        adjacency_[static_cast<std::size_t>(t.tail)].push_back({t.rel, t.head, Direction::in});
    }
    for (auto& edges : adjacency_) std::sort(edges.begin(), edges.end());
}

std::optional<EntityId> KnowledgeGraph::entity_id(const std::string& name) const {
    auto it = entity_ids_.find(name);
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

std::span<const NeighborEdge> KnowledgeGraph::adjacency(EntityId e) const {
    if (e < 0 || static_cast<std::size_t>(e) >= adjacency_.size()) {
        throw Error("unknown entity error: id " + std::to_string(e));
    }
    return adjacency_[static_cast<std::size_t>(e)];
}

std::string KnowledgeGraph::serialize_triples() const {
    std::string out;
    for (const Triple& t : triples_) {
        out += entity_name(t.head);
        out += '\t';
        out += relation_name(t.rel);
        out += '\t';
        out += entity_name(t.tail);
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

void require_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw Error("dataset layout error: missing " + path.filename().string() + " in " +
                    path.parent_path().string());
    }
}

KnowledgeGraph load_triples_file(const std::filesystem::path& path) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("dataset layout error: cannot open " + path.string());

    KnowledgeGraph kg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() && in.eof()) break; // trailing newline
        auto fields = split_tabs(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
            throw Error("parse error: " + path.filename().string() + " line " +
                        std::to_string(line_no) + ": expected 3 tab-separated fields");
        }
        kg.add_triple(fields[0], fields[1], fields[2]);
    }
    kg.finalize();
    return kg;
}

std::vector<AlignPair> load_links_file(const std::filesystem::path& path,
                                       const KnowledgeGraph& kg1, const KnowledgeGraph& kg2) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("dataset layout error: cannot open " + path.string());

    std::vector<AlignPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() && in.eof()) break;
        auto fields = split_tabs(line);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw Error("parse error: " + path.filename().string() + " line " +
                        std::to_string(line_no) + ": expected 2 tab-separated fields");
        }
        auto e1 = kg1.entity_id(fields[0]);
        if (!e1) {
            throw Error("dangling link error: " + path.filename().string() + " line " +
                        std::to_string(line_no) + ": unknown kg1 entity '" + fields[0] + "'");
        }
        auto e2 = kg2.entity_id(fields[1]);
        if (!e2) {
            throw Error("dangling link error: " + path.filename().string() + " line " +
                        std::to_string(line_no) + ": unknown kg2 entity '" + fields[1] + "'");
        }
        pairs.emplace_back(*e1, *e2);
    }
    return pairs;
}

int infer_timestamp(const std::filesystem::path& dir) {
    std::string name = dir.filename().string();
    if (name.empty()) name = dir.parent_path().filename().string();
    if (name.size() >= 2 && name[0] == 't' &&
        std::all_of(name.begin() + 1, name.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return std::stoi(name.substr(1));
    }
    return 0;
}

} // namespace

std::pair<SnapshotPair, AlignmentSets> load_snapshot(const std::filesystem::path& dir, int t) {
    if (!std::filesystem::is_directory(dir)) {
        throw Error("dataset layout error: " + dir.string() + " is not a directory");
    }
    SnapshotPair pair;
    pair.t = t >= 0 ? t : infer_timestamp(dir);
    pair.kg1 = load_triples_file(dir / "kg1_triples.tsv");
    pair.kg2 = load_triples_file(dir / "kg2_triples.tsv");

    AlignmentSets aligns;
    aligns.seed = load_links_file(dir / "train_links.tsv", pair.kg1, pair.kg2);
    aligns.valid = load_links_file(dir / "valid_links.tsv", pair.kg1, pair.kg2);
    aligns.test = load_links_file(dir / "test_links.tsv", pair.kg1, pair.kg2);
    return {std::move(pair), std::move(aligns)};
}

namespace {

// Maps prev entities/relations into next's id space and diffs the triple
// sets. Both graphs are compared by name, not by id.
void diff_graph(const KnowledgeGraph& prev, const KnowledgeGraph& next, const char* which,
                std::vector<EntityId>& new_entities, std::vector<Triple>& new_triples,
                std::vector<EntityId>& old_to_next, std::vector<RelationId>& rel_old_to_next) {
    old_to_next.resize(prev.num_entities());
    for (std::size_t e = 0; e < prev.num_entities(); ++e) {
        auto mapped = next.entity_id(prev.entity_name(static_cast<EntityId>(e)));
        if (!mapped) {
            throw Error(std::string("non-monotonic growth error: ") + which + " entity '" +
                        prev.entity_name(static_cast<EntityId>(e)) + "' missing from next snapshot");
        }
        old_to_next[e] = *mapped;
    }
    rel_old_to_next.resize(prev.num_relations());
    for (std::size_t r = 0; r < prev.num_relations(); ++r) {
        auto mapped = next.relation_id(prev.relation_name(static_cast<RelationId>(r)));
        if (!mapped) {
            throw Error(std::string("non-monotonic growth error: ") + which + " relation '" +
                        prev.relation_name(static_cast<RelationId>(r)) + "' missing from next snapshot");
        }
        rel_old_to_next[r] = *mapped;
    }
    if (next.num_relations() != prev.num_relations()) {
        for (std::size_t r = 0; r < next.num_relations(); ++r) {
            if (!prev.relation_id(next.relation_name(static_cast<RelationId>(r)))) {
                throw Error(std::string("relation growth unsupported error: ") + which +
                            " relation '" + next.relation_name(static_cast<RelationId>(r)) +
                            "' appears after the first snapshot");
            }
        }
    }

    std::unordered_set<Triple, TripleHash> prev_mapped;
    prev_mapped.reserve(prev.num_triples());
    for (const Triple& t : prev.triples()) {
        Triple mapped{old_to_next[static_cast<std::size_t>(t.head)],
                      rel_old_to_next[static_cast<std::size_t>(t.rel)],
                      old_to_next[static_cast<std::size_t>(t.tail)]};
        if (!next.has_triple(mapped)) {
            throw Error(std::string("non-monotonic growth error: ") + which + " triple (" +
                        prev.entity_name(t.head) + ", " + prev.relation_name(t.rel) + ", " +
                        prev.entity_name(t.tail) + ") missing from next snapshot");
        }
        prev_mapped.insert(mapped);
    }

    for (const Triple& t : next.triples()) {
        if (!prev_mapped.contains(t)) new_triples.push_back(t);
    }

    std::vector<char> old_entity(next.num_entities(), 0);
    for (EntityId e : old_to_next) old_entity[static_cast<std::size_t>(e)] = 1;
    for (std::size_t e = 0; e < next.num_entities(); ++e) {
        if (!old_entity[e]) new_entities.push_back(static_cast<EntityId>(e));
    }
}

} // namespace

GrowthDelta validate_growth(const SnapshotPair& prev, const SnapshotPair& next) {
    if (prev.t + 1 != next.t) {
        throw Error("precondition violated error: snapshot timestamps must be consecutive, got t=" +
                    std::to_string(prev.t) + " then t=" + std::to_string(next.t));
    }
    GrowthDelta delta;
    diff_graph(prev.kg1, next.kg1, "kg1", delta.new_entities_1, delta.new_triples_1,
               delta.old_to_next_1, delta.rel_old_to_next_1);
    diff_graph(prev.kg2, next.kg2, "kg2", delta.new_entities_2, delta.new_triples_2,
               delta.old_to_next_2, delta.rel_old_to_next_2);
    return delta;
}

std::vector<NeighborEdge> neighbors(const KnowledgeGraph& kg, EntityId e) {
    auto span = kg.adjacency(e);
    return {span.begin(), span.end()};
}

} // namespace contea
