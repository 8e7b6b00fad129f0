#include "contea/snapgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "contea/error.hpp"
#include "contea/log.hpp"

namespace contea {

void GenSpec::validate() const {
    if (n_entities < 4) throw Error("generation infeasible error: n_entities must be >= 4");
    if (n_relations < 1) throw Error("generation infeasible error: n_relations must be >= 1");
    if (avg_degree < 1.0 || avg_degree >= static_cast<double>(n_entities)) {
        throw Error("generation infeasible error: avg_degree must be in [1, n_entities)");
    }
    if (overlap_ratio <= 0.0 || overlap_ratio > 1.0) {
        throw Error("generation infeasible error: overlap_ratio must be in (0, 1]");
    }
    if (structural_noise < 0.0 || structural_noise >= 1.0) {
        throw Error("generation infeasible error: structural_noise must be in [0, 1)");
    }
    if (n_snapshots < 1) throw Error("generation infeasible error: n_snapshots must be >= 1");
    if (growth_ratio <= 0.0) throw Error("generation infeasible error: growth_ratio must be > 0");
    double sum = split_train + split_valid + split_test;
    if (split_train <= 0.0 || split_valid <= 0.0 || split_test <= 0.0 ||
        std::abs(sum - 1.0) > 1e-9) {
        throw Error("generation infeasible error: split ratios must be positive and sum to 1");
    }
}

void apply_genspec_override(GenSpec& spec, const std::string& key_value) {
    std::size_t eq = key_value.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw Error("config error: expected key=value, got '" + key_value + "'");
    }
    std::string key = key_value.substr(0, eq);
    std::string value = key_value.substr(eq + 1);
    auto as_int = [&]() {
        try {
            return std::stoi(value);
        } catch (const std::exception&) {
            throw Error("config error: value '" + value + "' for key '" + key + "' is not an integer");
        }
    };
    auto as_real = [&]() {
        try {
            return std::stod(value);
        } catch (const std::exception&) {
            throw Error("config error: value '" + value + "' for key '" + key + "' is not a number");
        }
    };
    if (key == "n_entities") spec.n_entities = as_int();
    else if (key == "n_relations") spec.n_relations = as_int();
    else if (key == "avg_degree") spec.avg_degree = as_real();
    else if (key == "overlap_ratio") spec.overlap_ratio = as_real();
    else if (key == "structural_noise") spec.structural_noise = as_real();
    else if (key == "n_snapshots") spec.n_snapshots = as_int();
    else if (key == "growth_ratio") spec.growth_ratio = as_real();
    else if (key == "split_train") spec.split_train = as_real();
    else if (key == "split_valid") spec.split_valid = as_real();
    else if (key == "split_test") spec.split_test = as_real();
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(as_int());
    else throw Error("config error: unknown genspec key '" + key + "'");
}

std::vector<std::pair<int, int>> GeneratedDataset::test_pairs(int t) const {
    std::set<std::pair<int, int>> anchors(seed_pairs.begin(), seed_pairs.end());
    anchors.insert(valid_pairs.begin(), valid_pairs.end());
    std::vector<std::pair<int, int>> out;
    for (std::size_t g = 0; g < gold.size(); ++g) {
        if (gold_birth[g] < 0 || gold_birth[g] > t) continue;
        if (anchors.contains(gold[g])) continue;
        out.push_back(gold[g]);
    }
    return out;
}

namespace {

struct MasterTriple {
    int head;
    int rel;
    int tail;
};

// Preferential-attachment multigraph: each arriving node attaches to
// degree-skewed earlier nodes, relation and direction drawn uniformly.
std::vector<MasterTriple> build_master(int n_nodes, const GenSpec& spec, Rng& rng) {
    int edges_per_node = std::max(1, static_cast<int>(std::llround(spec.avg_degree / 2.0)));
    std::vector<MasterTriple> triples;
    std::set<std::tuple<int, int, int>> dedupe;
    std::vector<int> endpoint_bag; // node repeated once per incidence

    for (int v = 1; v < n_nodes; ++v) {
        int want = std::min(edges_per_node, v);
        std::unordered_set<int> picked;
        int attempts = 0;
        while (static_cast<int>(picked.size()) < want && attempts < want * 20) {
            ++attempts;
            int u;
            if (endpoint_bag.empty() || rng.uniform() < 0.25) {
                u = static_cast<int>(rng.index(static_cast<std::size_t>(v)));
            } else {
                u = endpoint_bag[rng.index(endpoint_bag.size())];
                if (u >= v) continue;
            }
            if (u == v || picked.contains(u)) continue;
            int rel = static_cast<int>(rng.index(static_cast<std::size_t>(spec.n_relations)));
            bool v_is_head = rng.bernoulli(0.5);
            int h = v_is_head ? v : u;
            int t = v_is_head ? u : v;
            if (!dedupe.insert({h, rel, t}).second) continue;
            picked.insert(u);
            triples.push_back({h, rel, t});
            endpoint_bag.push_back(h);
            endpoint_bag.push_back(t);
        }
    }
    return triples;
}

struct KgBuild {
    std::vector<std::string>* names;
    std::vector<int> master_to_local; // -1 until first use
    char prefix;

    int local_id(int master) {
        int& id = master_to_local[static_cast<std::size_t>(master)];
        if (id < 0) {
            id = static_cast<int>(names->size());
            names->push_back(prefix + std::to_string(master));
        }
        return id;
    }
};

} // namespace

GeneratedDataset generate_base_pair(const GenSpec& spec) {
    spec.validate();

    const int n = spec.n_entities;
    const int n_shared = std::max(1, static_cast<int>(std::llround(spec.overlap_ratio * n)));
    const int n_unique = n - n_shared;
    const int n_master = n_shared + 2 * n_unique;

    // node labels: 0 = shared, 1 = kg1-only, 2 = kg2-only, shuffled so the
    // arrival order mixes them
    Rng label_rng(derive_seed(spec.seed, 0));
    std::vector<int> label;
    label.reserve(static_cast<std::size_t>(n_master));
    for (int i = 0; i < n_shared; ++i) label.push_back(0);
    for (int i = 0; i < n_unique; ++i) label.push_back(1);
    for (int i = 0; i < n_unique; ++i) label.push_back(2);
    label_rng.shuffle(label);

    Rng master_rng(derive_seed(spec.seed, 1));
    std::vector<MasterTriple> master = build_master(n_master, spec, master_rng);

    GeneratedDataset ds;
    ds.n_snapshots = spec.n_snapshots;
    for (int r = 0; r < spec.n_relations; ++r) ds.rel_names.push_back("r" + std::to_string(r));

    KgBuild b1{&ds.names1, std::vector<int>(static_cast<std::size_t>(n_master), -1), 'a'};
    KgBuild b2{&ds.names2, std::vector<int>(static_cast<std::size_t>(n_master), -1), 'b'};

    Rng noise1(derive_seed(spec.seed, 2));
    Rng noise2(derive_seed(spec.seed, 3));
    auto in_kg = [&](int node, int kg) {
        return label[static_cast<std::size_t>(node)] == 0 ||
               label[static_cast<std::size_t>(node)] == kg;
    };
    for (const MasterTriple& t : master) {
        if (in_kg(t.head, 1) && in_kg(t.tail, 1)) {
            bool keep = !(spec.structural_noise > 0.0 && noise1.bernoulli(spec.structural_noise));
            if (keep) {
                int head = b1.local_id(t.head);
                int tail = b1.local_id(t.tail);
                ds.triples1.push_back({head, t.rel, tail});
            }
        }
        if (in_kg(t.head, 2) && in_kg(t.tail, 2)) {
            bool keep = !(spec.structural_noise > 0.0 && noise2.bernoulli(spec.structural_noise));
            if (keep) {
                int head = b2.local_id(t.head);
                int tail = b2.local_id(t.tail);
                ds.triples2.push_back({head, t.rel, tail});
            }
        }
    }

    // gold alignment: shared master nodes that survived (>= 1 triple) in both
    for (int node = 0; node < n_master; ++node) {
        if (label[static_cast<std::size_t>(node)] != 0) continue;
        int id1 = b1.master_to_local[static_cast<std::size_t>(node)];
        int id2 = b2.master_to_local[static_cast<std::size_t>(node)];
        if (id1 >= 0 && id2 >= 0) ds.gold.emplace_back(id1, id2);
    }

    // t=0 prefix sized so that growth_ratio steps roughly reach the full KG;
    // the closure pass adds triples beyond the sampled quota, hence the
    // factor of two headroom
    double shrink = std::pow(1.0 + 2.0 * spec.growth_ratio, spec.n_snapshots - 1);
    auto prefix_count = [&](std::size_t full) {
        std::size_t c = static_cast<std::size_t>(
            std::ceil(static_cast<double>(full) / shrink));
        return std::max<std::size_t>(1, std::min(full, c));
    };
    ds.birth1.assign(ds.triples1.size(), -1);
    ds.birth2.assign(ds.triples2.size(), -1);
    for (std::size_t i = 0; i < prefix_count(ds.triples1.size()); ++i) ds.birth1[i] = 0;
    for (std::size_t i = 0; i < prefix_count(ds.triples2.size()); ++i) ds.birth2[i] = 0;

    // gold births at t=0 for the split
    std::vector<char> alive1(ds.names1.size(), 0), alive2(ds.names2.size(), 0);
    for (std::size_t i = 0; i < ds.triples1.size(); ++i) {
        if (ds.birth1[i] == 0) {
            alive1[static_cast<std::size_t>(ds.triples1[i].head)] = 1;
            alive1[static_cast<std::size_t>(ds.triples1[i].tail)] = 1;
        }
    }
    for (std::size_t i = 0; i < ds.triples2.size(); ++i) {
        if (ds.birth2[i] == 0) {
            alive2[static_cast<std::size_t>(ds.triples2[i].head)] = 1;
            alive2[static_cast<std::size_t>(ds.triples2[i].tail)] = 1;
        }
    }
    std::vector<std::pair<int, int>> gold_t0;
    for (const auto& g : ds.gold) {
        if (alive1[static_cast<std::size_t>(g.first)] && alive2[static_cast<std::size_t>(g.second)]) {
            gold_t0.push_back(g);
        }
    }

    Rng split_rng(derive_seed(spec.seed, 4));
    split_rng.shuffle(gold_t0);
    std::size_t n_gold = gold_t0.size();
    std::size_t n_seed = static_cast<std::size_t>(std::llround(spec.split_train * static_cast<double>(n_gold)));
    std::size_t n_valid = static_cast<std::size_t>(std::llround(spec.split_valid * static_cast<double>(n_gold)));
    n_seed = std::min(n_seed, n_gold);
    n_valid = std::min(n_valid, n_gold - n_seed);
    ds.seed_pairs.assign(gold_t0.begin(), gold_t0.begin() + static_cast<std::ptrdiff_t>(n_seed));
    ds.valid_pairs.assign(gold_t0.begin() + static_cast<std::ptrdiff_t>(n_seed),
                          gold_t0.begin() + static_cast<std::ptrdiff_t>(n_seed + n_valid));
    std::sort(ds.seed_pairs.begin(), ds.seed_pairs.end());
    std::sort(ds.valid_pairs.begin(), ds.valid_pairs.end());

    ds.gold_birth.assign(ds.gold.size(), -1); // finalized by generate_dataset
    return ds;
}

namespace {

// One KG side of a growth step.
void grow_kg(std::vector<GeneratedDataset::Tr>& triples, std::vector<int>& birth,
             std::size_t n_names, int t, const GenSpec& spec, Rng& rng, const char* which) {
    std::vector<char> alive(n_names, 0);
    std::size_t current = 0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (birth[i] >= 0 && birth[i] < t) {
            ++current;
            alive[static_cast<std::size_t>(triples[i].head)] = 1;
            alive[static_cast<std::size_t>(triples[i].tail)] = 1;
        }
    }

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (birth[i] >= 0) continue;
        if (alive[static_cast<std::size_t>(triples[i].head)] ||
            alive[static_cast<std::size_t>(triples[i].tail)]) {
            candidates.push_back(i);
        }
    }

    std::size_t target = static_cast<std::size_t>(
        std::ceil(spec.growth_ratio * static_cast<double>(current)));
    if (candidates.size() < target) {
        log_info("warning: %s reserve pool exhausted at t=%d (%zu of %zu new triples)", which, t,
                 candidates.size(), target);
        target = candidates.size();
    }
    rng.shuffle(candidates);
    for (std::size_t i = 0; i < target; ++i) {
        std::size_t idx = candidates[i];
        birth[idx] = t;
        alive[static_cast<std::size_t>(triples[idx].head)] = 1;
        alive[static_cast<std::size_t>(triples[idx].tail)] = 1;
    }

    // closure: reserve triples between entities that are now both present
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (birth[i] >= 0) continue;
        if (alive[static_cast<std::size_t>(triples[i].head)] &&
            alive[static_cast<std::size_t>(triples[i].tail)]) {
            birth[i] = t;
        }
    }
}

} // namespace

void grow(GeneratedDataset& ds, int t, const GenSpec& spec, Rng& rng) {
    grow_kg(ds.triples1, ds.birth1, ds.names1.size(), t, spec, rng, "kg1");
    grow_kg(ds.triples2, ds.birth2, ds.names2.size(), t, spec, rng, "kg2");
}

GeneratedDataset generate_dataset(const GenSpec& spec) {
    GeneratedDataset ds = generate_base_pair(spec);
    Rng grow_rng(derive_seed(spec.seed, 5));
    for (int t = 1; t < spec.n_snapshots; ++t) grow(ds, t, spec, grow_rng);

    // entity births, then gold births
    auto entity_births = [](const std::vector<GeneratedDataset::Tr>& triples,
                            const std::vector<int>& birth, std::size_t n_names) {
        std::vector<int> eb(n_names, -1);
        for (std::size_t i = 0; i < triples.size(); ++i) {
            if (birth[i] < 0) continue;
            for (int node : {triples[i].head, triples[i].tail}) {
                int& b = eb[static_cast<std::size_t>(node)];
                if (b < 0 || birth[i] < b) b = birth[i];
            }
        }
        return eb;
    };
    std::vector<int> eb1 = entity_births(ds.triples1, ds.birth1, ds.names1.size());
    std::vector<int> eb2 = entity_births(ds.triples2, ds.birth2, ds.names2.size());
    for (std::size_t g = 0; g < ds.gold.size(); ++g) {
        int b1 = eb1[static_cast<std::size_t>(ds.gold[g].first)];
        int b2 = eb2[static_cast<std::size_t>(ds.gold[g].second)];
        ds.gold_birth[g] = (b1 < 0 || b2 < 0) ? -1 : std::max(b1, b2);
    }
    return ds;
}

namespace {

void write_links(std::FILE* f, const std::vector<std::pair<int, int>>& pairs,
                 const std::vector<std::string>& names1, const std::vector<std::string>& names2) {
    for (const auto& p : pairs) {
        std::fprintf(f, "%s\t%s\n", names1[static_cast<std::size_t>(p.first)].c_str(),
                     names2[static_cast<std::size_t>(p.second)].c_str());
    }
}

std::FILE* open_or_throw(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (f == nullptr) throw Error("output error: cannot write " + path.string());
    return f;
}

} // namespace

void write_dataset(const GeneratedDataset& ds, const GenSpec& spec,
                   const std::filesystem::path& out_root) {
    for (int t = 0; t < ds.n_snapshots; ++t) {
        std::filesystem::path dir = out_root / "snapshots" / ("t" + std::to_string(t));
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error("output error: cannot create " + dir.string());

        // triples sorted by (birth, arrival): snapshots are append-only
        auto write_triples = [&](const char* file, const std::vector<GeneratedDataset::Tr>& triples,
                                 const std::vector<int>& birth,
                                 const std::vector<std::string>& names) {
            std::FILE* f = open_or_throw(dir / file);
            for (int b = 0; b <= t; ++b) {
                for (std::size_t i = 0; i < triples.size(); ++i) {
                    if (birth[i] != b) continue;
                    std::fprintf(f, "%s\t%s\t%s\n",
                                 names[static_cast<std::size_t>(triples[i].head)].c_str(),
                                 ds.rel_names[static_cast<std::size_t>(triples[i].rel)].c_str(),
                                 names[static_cast<std::size_t>(triples[i].tail)].c_str());
                }
            }
            std::fclose(f);
        };
        write_triples("kg1_triples.tsv", ds.triples1, ds.birth1, ds.names1);
        write_triples("kg2_triples.tsv", ds.triples2, ds.birth2, ds.names2);

        std::FILE* f = open_or_throw(dir / "train_links.tsv");
        write_links(f, ds.seed_pairs, ds.names1, ds.names2);
        std::fclose(f);
        f = open_or_throw(dir / "valid_links.tsv");
        write_links(f, ds.valid_pairs, ds.names1, ds.names2);
        std::fclose(f);
        f = open_or_throw(dir / "test_links.tsv");
        write_links(f, ds.test_pairs(t), ds.names1, ds.names2);
        std::fclose(f);
    }

    std::FILE* f = open_or_throw(out_root / "genspec.txt");
    std::fprintf(f, "n_entities=%d\nn_relations=%d\navg_degree=%g\noverlap_ratio=%g\n",
                 spec.n_entities, spec.n_relations, spec.avg_degree, spec.overlap_ratio);
    std::fprintf(f, "structural_noise=%g\nn_snapshots=%d\ngrowth_ratio=%g\n",
                 spec.structural_noise, spec.n_snapshots, spec.growth_ratio);
    std::fprintf(f, "split_train=%g\nsplit_valid=%g\nsplit_test=%g\nseed=%llu\n", spec.split_train,
                 spec.split_valid, spec.split_test, static_cast<unsigned long long>(spec.seed));
    std::fclose(f);
}

std::vector<std::filesystem::path> generate_to_directory(const GenSpec& spec,
                                                         const std::filesystem::path& out_root) {
    GeneratedDataset ds = generate_dataset(spec);
    write_dataset(ds, spec, out_root);
    std::vector<std::filesystem::path> dirs;
    for (int t = 0; t < ds.n_snapshots; ++t) {
        dirs.push_back(out_root / "snapshots" / ("t" + std::to_string(t)));
    }
    return dirs;
}

} // namespace contea
