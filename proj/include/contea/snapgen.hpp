#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "contea/rng.hpp"

namespace contea {

// Parameters of the synthetic growing-benchmark generator.
struct GenSpec {
    int n_entities = 500;          // per KG
    int n_relations = 20;
    double avg_degree = 6.0;
    double overlap_ratio = 0.8;    // fraction of entities with counterparts
    double structural_noise = 0.1; // per-KG independent triple drop rate
    int n_snapshots = 3;
    double growth_ratio = 0.20;    // sampled new-triple size per step
    double split_train = 0.2;      // seed : valid : test, defaults 2:1:7
    double split_valid = 0.1;
    double split_test = 0.7;
    std::uint64_t seed = 1;

    void validate() const; // throws "generation infeasible error" etc.
};

void apply_genspec_override(GenSpec& spec, const std::string& key_value);

// The full generated benchmark before serialization. Triples reference
// per-KG entity indices; birth marks the snapshot a triple first appears in
// (-1 = never included). Growth is monotone by construction.
struct GeneratedDataset {
    struct Tr {
        int head;
        int rel;
        int tail;
    };

    int n_snapshots = 0;
    std::vector<std::string> names1, names2, rel_names;
    std::vector<Tr> triples1, triples2;     // arrival order
    std::vector<int> birth1, birth2;        // per triple
    std::vector<std::pair<int, int>> gold;  // (kg1 idx, kg2 idx)
    std::vector<int> gold_birth;            // snapshot both sides exist, -1 = never
    std::vector<std::pair<int, int>> seed_pairs;  // subset of gold with birth 0
    std::vector<std::pair<int, int>> valid_pairs; // subset of gold with birth 0

    // gold pairs alive at t excluding seed/valid
    std::vector<std::pair<int, int>> test_pairs(int t) const;
};

// Builds the master graph, derives the two noisy copies with the gold
// alignment, fixes the t=0 prefix, and splits the t=0 gold pairs into
// seed/valid/test. Later snapshots are left in the reserve pool (birth -1).
GeneratedDataset generate_base_pair(const GenSpec& spec);

// One growth step: samples reserve triples incident to existing entities
// (about growth_ratio of the current triple count per KG), then closes over
// reserve triples whose endpoints are both present. Warns when the pool
// cannot supply the sample size.
void grow(GeneratedDataset& ds, int t, const GenSpec& spec, Rng& rng);

// generate_base_pair + n_snapshots-1 grow steps + gold birth bookkeeping.
GeneratedDataset generate_dataset(const GenSpec& spec);

// Writes out_root/snapshots/t0..t{n-1} in the snapshot directory layout
// plus out_root/genspec.txt. Byte-identical for identical specs.
void write_dataset(const GeneratedDataset& ds, const GenSpec& spec,
                   const std::filesystem::path& out_root);

// Convenience: generate_dataset + write_dataset; returns the snapshot dirs.
std::vector<std::filesystem::path> generate_to_directory(const GenSpec& spec,
                                                         const std::filesystem::path& out_root);

} // namespace contea
