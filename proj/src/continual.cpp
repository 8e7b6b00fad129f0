#include "contea/continual.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <unordered_set>

#include "contea/encoder.hpp"
#include "contea/error.hpp"
#include "contea/log.hpp"
#include "contea/trainer.hpp"

namespace contea {

std::vector<AlignPair> select_affected_seeds(const std::vector<AlignPair>& seeds,
                                             const GrowthDelta& delta) {
    std::unordered_set<EntityId> touched1, touched2;
    for (const Triple& t : delta.new_triples_1) {
        touched1.insert(t.head);
        touched1.insert(t.tail);
    }
    for (const Triple& t : delta.new_triples_2) {
        touched2.insert(t.head);
        touched2.insert(t.tail);
    }
    std::vector<AlignPair> out;
    for (const AlignPair& seed : seeds) {
        if (touched1.contains(seed.first) || touched2.contains(seed.second)) out.push_back(seed);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ScoredPair> select_top_ta(const TrustworthyAlignment& ta, int m) {
    std::vector<ScoredPair> sorted = ta.pairs;
    std::sort(sorted.begin(), sorted.end(), [](const ScoredPair& a, const ScoredPair& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.e1, a.e2) < std::tie(b.e1, b.e2);
    });
    if (static_cast<int>(sorted.size()) > m) sorted.resize(static_cast<std::size_t>(m));
    return sorted;
}

TrustworthyAlignment search_alignment(const EmbeddingMatrix& emb, const SnapshotPair& pair,
                                      const AlignmentSets& aligns, const RunConfig& config,
                                      int found_at) {
    std::unordered_set<EntityId> anchors1, anchors2;
    for (const AlignPair& p : aligns.seed) {
        anchors1.insert(p.first);
        anchors2.insert(p.second);
    }
    for (const AlignPair& p : aligns.valid) {
        anchors1.insert(p.first);
        anchors2.insert(p.second);
    }

    std::vector<EntityId> cand1, cand2;
    for (std::size_t e = 0; e < pair.kg1.num_entities(); ++e) {
        if (!anchors1.contains(static_cast<EntityId>(e))) cand1.push_back(static_cast<EntityId>(e));
    }
    for (std::size_t e = 0; e < pair.kg2.num_entities(); ++e) {
        if (!anchors2.contains(static_cast<EntityId>(e))) cand2.push_back(static_cast<EntityId>(e));
    }
    if (cand1.empty() || cand2.empty()) return {};

    std::size_t d = emb.rows.cols();
    std::size_t off2 = pair.entity_offset2();
    Mat a(cand1.size(), d), b(cand2.size(), d);
    for (std::size_t i = 0; i < cand1.size(); ++i) {
        std::copy_n(emb.rows.row(static_cast<std::size_t>(cand1[i])), d, a.row(i));
    }
    for (std::size_t j = 0; j < cand2.size(); ++j) {
        std::copy_n(emb.rows.row(off2 + static_cast<std::size_t>(cand2[j])), d, b.row(j));
    }

    int k = std::min<int>({config.csls_k, static_cast<int>(cand1.size()) - 1,
                           static_cast<int>(cand2.size()) - 1});
    SimilarityMetric metric = k >= 1 ? SimilarityMetric{MetricKind::csls, k}
                                     : SimilarityMetric{MetricKind::cosine, 0};
    TrustworthyAlignment raw = bidirectional_search(a, b, metric, found_at);

    TrustworthyAlignment mapped;
    mapped.pairs.reserve(raw.size());
    for (const ScoredPair& p : raw.pairs) {
        mapped.pairs.push_back({cand1[static_cast<std::size_t>(p.e1)],
                                cand2[static_cast<std::size_t>(p.e2)], p.score, p.found_at});
    }
    return mapped;
}

void write_alignment_tsv(const TrustworthyAlignment& ta, const SnapshotPair& pair,
                         const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (f == nullptr) throw Error("output error: cannot write " + path.string());
    TrustworthyAlignment sorted = ta;
    sorted.sort_canonical();
    for (const ScoredPair& p : sorted.pairs) {
        std::fprintf(f, "%s\t%s\t%.6f\t%d\n", pair.kg1.entity_name(p.e1).c_str(),
                     pair.kg2.entity_name(p.e2).c_str(), p.score, p.found_at);
    }
    std::fclose(f);
}

namespace {

TrustworthyAlignment remap_alignment(const TrustworthyAlignment& ta, const GrowthDelta& delta) {
    TrustworthyAlignment out;
    out.pairs.reserve(ta.size());
    for (const ScoredPair& p : ta.pairs) {
        out.pairs.push_back({delta.old_to_next_1[static_cast<std::size_t>(p.e1)],
                             delta.old_to_next_2[static_cast<std::size_t>(p.e2)], p.score,
                             p.found_at});
    }
    return out;
}

void remap_new_entities(NewEntities& cumulative, const GrowthDelta& delta) {
    NewEntities next;
    for (EntityId e : cumulative.kg1) next.kg1.insert(delta.old_to_next_1[static_cast<std::size_t>(e)]);
    for (EntityId e : cumulative.kg2) next.kg2.insert(delta.old_to_next_2[static_cast<std::size_t>(e)]);
    for (EntityId e : delta.new_entities_1) next.kg1.insert(e);
    for (EntityId e : delta.new_entities_2) next.kg2.insert(e);
    cumulative = std::move(next);
}

void write_snapshot_artifacts(const std::filesystem::path& out_dir, int t,
                              const TrainedModel& model, const TrustworthyAlignment& ta,
                              const SnapshotPair& pair) {
    std::filesystem::path dir = out_dir / ("t" + std::to_string(t));
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("output error: cannot create " + dir.string());
    save_checkpoint(model.state, dir / "checkpoint.ceas");
    write_history_csv(model.history, dir / "history.csv");
    write_alignment_tsv(ta, pair, dir / "alignment.tsv");
}

void write_manifest(const std::filesystem::path& out_dir, const RunConfig& config,
                    const std::vector<std::filesystem::path>& dirs, std::size_t n_snapshots) {
    std::FILE* f = std::fopen((out_dir / "manifest.txt").string().c_str(), "wb");
    if (f == nullptr) throw Error("output error: cannot write manifest under " + out_dir.string());
    std::fprintf(f, "mode=%s\n", mode_name(config.mode).c_str());
    std::fprintf(f, "dim=%d\nalpha=%g\nbeta=%g\nm=%d\ngamma=%g\nlambda=%g\n", config.dim,
                 config.alpha, config.beta, config.m, config.gamma, config.lambda);
    std::fprintf(f, "proxy_count=%d\ncsls_k=%d\nbatch_size=%d\nlr=%g\n", config.proxy_count,
                 config.csls_k, config.batch_size, config.lr);
    std::fprintf(f, "epochs=%d\nfinetune_epochs=%d\npatience=%d\neval_every=%d\nseed=%llu\n",
                 config.epochs, config.finetune_epochs, config.patience, config.eval_every,
                 static_cast<unsigned long long>(config.seed));
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        std::fprintf(f, "snapshot_dir_%zu=%s\n", i, dirs[i].string().c_str());
    }
    for (std::size_t i = 0; i < n_snapshots; ++i) {
        std::fprintf(f, "artifacts_t%zu=t%zu/checkpoint.ceas,t%zu/history.csv,t%zu/alignment.tsv\n",
                     i, i, i, i);
    }
    std::fprintf(f, "reports=metrics.csv,growth.csv\n");
    std::fclose(f);
}

// A TrainedModel wrapper for the inductive-only mode: new-entity
// initialization, no gradient steps.
TrainedModel inductive_update(const TrainedModel& prev, const SnapshotPair& pair_next,
                              const GrowthDelta& delta, const RunConfig& config) {
    auto start = std::chrono::steady_clock::now();
    TrainedModel model;
    model.state = init_new_entities(prev.state, pair_next, delta, config);
    model.history.push_back({0, 0.0, 0.0, 0.0, std::nullopt});
    model.stopped_epoch = 0;
    model.wall_time_s =
        std::max(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(),
                 1e-9);
    return model;
}

} // namespace

RunRecord run_pipeline(const std::vector<std::filesystem::path>& snapshot_dirs,
                       const RunConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    if (snapshot_dirs.empty()) {
        throw Error("precondition violated error: run_pipeline needs at least one snapshot");
    }
    bool write_artifacts = !out_dir.empty();
    if (write_artifacts) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) throw Error("output error: cannot create " + out_dir.string());
    }

    RunRecord record;
    SnapshotPair pair;
    AlignmentSets aligns;
    TrainedModel model;
    TrustworthyAlignment ta;
    NewEntities cumulative_new;

    for (std::size_t idx = 0; idx < snapshot_dirs.size(); ++idx) {
        try {
            auto [next_pair, next_aligns] = load_snapshot(snapshot_dirs[idx], static_cast<int>(idx));
            if (idx == 0) {
                pair = std::move(next_pair);
                aligns = std::move(next_aligns);
                model = train_initial(pair, aligns, config);
                EmbeddingMatrix emb = encode_all(model.state, pair);
                ta = search_alignment(emb, pair, aligns, config, 0);
            } else {
                GrowthDelta delta = validate_growth(pair, next_pair);
                remap_new_entities(cumulative_new, delta);
                TrustworthyAlignment old_ta = remap_alignment(ta, delta);

                switch (config.mode) {
                    case Mode::full: {
                        auto asa = select_affected_seeds(next_aligns.seed, delta);
                        auto ta_top = select_top_ta(old_ta, config.m);
                        model = finetune(model, next_pair, delta, asa, ta_top, next_aligns.valid,
                                         config);
                        break;
                    }
                    case Mode::no_ta: {
                        auto asa = select_affected_seeds(next_aligns.seed, delta);
                        model = finetune(model, next_pair, delta, asa, {}, next_aligns.valid,
                                         config);
                        break;
                    }
                    case Mode::no_ta_no_asa:
                        model = inductive_update(model, next_pair, delta, config);
                        break;
                    case Mode::retrain:
                        model = train_initial(next_pair, next_aligns, config);
                        break;
                }

                EmbeddingMatrix emb = encode_all(model.state, next_pair);
                TrustworthyAlignment new_ta =
                    search_alignment(emb, next_pair, next_aligns, config, static_cast<int>(idx));
                if (config.mode == Mode::retrain) {
                    ta = std::move(new_ta); // old predictions fully replaced
                } else {
                    ta = integrate_alignment(old_ta, new_ta, delta);
                }
                pair = std::move(next_pair);
                aligns = std::move(next_aligns);
            }

            SnapshotRecord snap;
            snap.t = static_cast<int>(idx);
            snap.mode = config.mode;
            snap.metrics = evaluate(ta, aligns.test);
            snap.metrics.new_entity_recall = new_entity_recall(ta, aligns.test, cumulative_new);
            snap.wall_time_s = model.wall_time_s;
            snap.ta_size = ta.size();
            snap.seed_size = aligns.seed.size();
            snap.valid_size = aligns.valid.size();
            snap.test_size = aligns.test.size();
            record.snapshots.push_back(snap);

            log_info("t=%zu mode=%s P=%.3f R=%.3f F1=%.3f ta=%zu wall=%.2fs", idx,
                     mode_name(config.mode).c_str(), snap.metrics.precision, snap.metrics.recall,
                     snap.metrics.f1, ta.size(), model.wall_time_s);

            if (write_artifacts) {
                write_snapshot_artifacts(out_dir, static_cast<int>(idx), model, ta, pair);
            }
        } catch (const Error& e) {
            throw Error("snapshot " + std::to_string(idx) + ": " + e.what());
        }
    }

    if (write_artifacts) {
        emit_report(record, out_dir);
        write_manifest(out_dir, config, snapshot_dirs, snapshot_dirs.size());
    }
    return record;
}

} // namespace contea
