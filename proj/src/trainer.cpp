#include "contea/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "contea/error.hpp"
#include "contea/log.hpp"
#include "contea/rng.hpp"

namespace contea {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// F1 saturates fast on small validation sets, so best-state selection also
// tracks the mean similarity of validation pairs as a continuous tie-break;
// the weight keeps it below one F1 quantum.
constexpr double kSimTieBreak = 1e-3;

struct ValScores {
    double f1 = 0.0;
    double mean_sim = 0.0;

    double combined() const { return f1 + kSimTieBreak * mean_sim; }
};

ValScores validation_scores(const EncoderState& state, const SnapshotPair& pair,
                            const std::vector<AlignPair>& pairs, const RunConfig& config);

enum class Group { base, rel, agg1, proxies, proxy_proj };

struct ParamSlice {
    Group group;
    double* param;
    const double* grad;
    std::size_t count;
    std::size_t row_index = 0; // for base rows
};

std::vector<ParamSlice> slices(EncoderState& state, const EncoderGradients& grads) {
    std::vector<ParamSlice> out;
    std::size_t d = state.dim();
    for (std::size_t r = 0; r < state.base_emb.rows(); ++r) {
        out.push_back({Group::base, state.base_emb.row(r), grads.base_emb.row(r), d, r});
    }
    out.push_back({Group::rel, state.rel_emb.data().data(), grads.rel_emb.data().data(),
                   state.rel_emb.data().size()});
    for (std::size_t l = 0; l < state.inner_layers.size(); ++l) {
        out.push_back({Group::agg1, state.inner_layers[l].weight.data().data(),
                       grads.inner_layers[l].weight.data().data(),
                       state.inner_layers[l].weight.data().size()});
        out.push_back({Group::agg1, state.inner_layers[l].bias.data(),
                       grads.inner_layers[l].bias.data(), state.inner_layers[l].bias.size()});
    }
    out.push_back({Group::proxies, state.proxies.data().data(), grads.proxies.data().data(),
                   state.proxies.data().size()});
    out.push_back({Group::proxy_proj, state.proxy_proj.data().data(),
                   grads.proxy_proj.data().data(), state.proxy_proj.data().size()});
    return out;
}

// Adam over the flattened parameter slices. Frozen slices are skipped
// entirely so frozen parameters stay bit-identical.
class Adam {
public:
    Adam(const EncoderState& state, double lr) : lr_(lr) {
        EncoderGradients shape = EncoderGradients::zeros_like(state);
        m_ = shape;
        v_ = shape;
    }

    void step(EncoderState& state, const EncoderGradients& grads) {
        ++t_;
        double bc1 = 1.0 - std::pow(kAdamBeta1, t_);
        double bc2 = 1.0 - std::pow(kAdamBeta2, t_);
        auto params = slices(state, grads);
        auto mom_m = moment_slices(m_);
        auto mom_v = moment_slices(v_);
        const FrozenMask& frozen = state.frozen;
        for (std::size_t s = 0; s < params.size(); ++s) {
            const ParamSlice& p = params[s];
            bool skip = false;
            switch (p.group) {
                case Group::base: skip = frozen.base_row_frozen(p.row_index); break;
                case Group::rel: skip = frozen.rel_emb; break;
                case Group::agg1: skip = frozen.agg1; break;
                case Group::proxies: skip = frozen.proxies; break;
                case Group::proxy_proj: skip = frozen.proxy_proj; break;
            }
            if (skip) continue;
            double* m = mom_m[s];
            double* v = mom_v[s];
            for (std::size_t i = 0; i < p.count; ++i) {
                double g = p.grad[i];
                m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g;
                v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g;
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                p.param[i] -= lr_ * mhat / (std::sqrt(vhat) + kAdamEps);
            }
            // keep base rows on the unit sphere: the reconstruction loss is
            // scale-sensitive and would otherwise shrink the embedding space
            if (p.group == Group::base) normalize_row(p.param, p.count);
        }
        if (!frozen.proxies) normalize_rows(state.proxies);
    }

private:
    // Moment buffers mirror the slice layout of the state.
    std::vector<double*> moment_slices(EncoderGradients& g) {
        std::vector<double*> out;
        for (std::size_t r = 0; r < g.base_emb.rows(); ++r) out.push_back(g.base_emb.row(r));
        out.push_back(g.rel_emb.data().data());
        for (auto& layer : g.inner_layers) {
            out.push_back(layer.weight.data().data());
            out.push_back(layer.bias.data());
        }
        out.push_back(g.proxies.data().data());
        out.push_back(g.proxy_proj.data().data());
        return out;
    }

    EncoderGradients m_;
    EncoderGradients v_;
    double lr_;
    int t_ = 0;
};

std::vector<Batch> make_batches(std::vector<AlignPair> pairs, int batch_size, Rng& rng) {
    rng.shuffle(pairs);
    std::vector<Batch> batches;
    for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(batch_size)) {
        Batch b;
        std::size_t end = std::min(pairs.size(), start + static_cast<std::size_t>(batch_size));
        b.pairs.assign(pairs.begin() + static_cast<std::ptrdiff_t>(start),
                       pairs.begin() + static_cast<std::ptrdiff_t>(end));
        batches.push_back(std::move(b));
    }
    return batches;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    auto delta = std::chrono::steady_clock::now() - start;
    double s = std::chrono::duration<double>(delta).count();
    return std::max(s, 1e-9);
}

struct TrainLoopSpec {
    int epochs;
    std::vector<AlignPair> align_pairs; // seed pairs (initial) or ASA (finetune)
    std::vector<AlignPair> ta_pairs;    // empty outside finetune
    bool is_finetune = false;
};

// Shared optimization loop. Records an epoch-0 entry with the initial loss,
// then runs mini-batch Adam steps with periodic validation and patience-based
// early stopping; restores the best-validation state at the end.
TrainedModel run_training(EncoderState state, const SnapshotPair& pair,
                          const std::vector<AlignPair>& valid, const RunConfig& config,
                          const TrainLoopSpec& spec) {
    auto start = std::chrono::steady_clock::now();
    GraphView view = GraphView::build(pair);
    std::size_t off2 = pair.entity_offset2();

    TrainedModel model;
    model.state = std::move(state);

    auto eval_loss = [&](const Batch& batch, const Batch& ta_batch) {
        LossInputs in;
        in.view = &view;
        in.kg2_offset = off2;
        in.batch = batch;
        in.ta_batch = ta_batch;
        in.alpha = config.alpha;
        in.beta = config.beta;
        in.gamma = config.gamma;
        in.lambda = config.lambda;
        return in;
    };

    // epoch-0 record: loss at the starting point, unshuffled batches
    {
        Batch b0{spec.align_pairs};
        if (static_cast<int>(b0.pairs.size()) > config.batch_size) {
            b0.pairs.resize(static_cast<std::size_t>(config.batch_size));
        }
        Batch ta0{spec.ta_pairs};
        if (static_cast<int>(ta0.pairs.size()) > config.batch_size) {
            ta0.pairs.resize(static_cast<std::size_t>(config.batch_size));
        }
        ForwardCache cache;
        encode_forward(model.state, view, cache);
        LossBreakdown loss;
        if (spec.is_finetune) {
            loss = loss_finetune(cache.out, model.state.base_emb, view, off2, b0, ta0,
                                 config.alpha, config.beta, config.gamma, config.lambda);
        } else {
            loss = loss_initial(cache.out, model.state.base_emb, view, off2, b0, config.alpha,
                                config.gamma, config.lambda);
        }
        model.history.push_back({0, loss.total, loss.align, loss.reconstruct, std::nullopt});
    }

    Adam adam(model.state, config.lr);
    Rng batch_rng(derive_seed(config.seed, spec.is_finetune ? 11 : 10));
    Rng ta_rng(derive_seed(config.seed, 12));

    EncoderState best_state = model.state;
    double best_score = -1e300;
    double best_f1 = -1.0;
    bool evaluated = false;
    int evals_since_best = 0;

    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        auto batches = make_batches(spec.align_pairs, config.batch_size, batch_rng);
        auto ta_batches = make_batches(spec.ta_pairs, config.batch_size, ta_rng);
        std::size_t steps = std::max<std::size_t>({batches.size(), ta_batches.size(), 1});

        double sum_total = 0.0, sum_align = 0.0, sum_rec = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            LossInputs in = eval_loss(batches.empty() ? Batch{} : batches[s % batches.size()],
                                      ta_batches.empty() ? Batch{} : ta_batches[s % ta_batches.size()]);
            GradientResult res =
                gradient(spec.is_finetune ? LossKind::finetune : LossKind::initial, model.state, in);
            if (!std::isfinite(res.loss.total)) {
                throw Error("training diverged error at epoch " + std::to_string(epoch));
            }
            adam.step(model.state, res.grads);
            sum_total += res.loss.total;
            sum_align += res.loss.align;
            sum_rec += res.loss.reconstruct;
        }
        double inv = 1.0 / static_cast<double>(steps);
        EpochRecord rec{epoch, sum_total * inv, sum_align * inv, sum_rec * inv, std::nullopt};
        model.stopped_epoch = epoch;

        if (epoch % config.eval_every == 0) {
            ValScores scores = validation_scores(model.state, pair, valid, config);
            rec.val_f1 = scores.f1;
            evaluated = true;
            if (scores.combined() > best_score) {
                best_score = scores.combined();
                best_state = model.state;
                // patience counts plain F1: the tie-break only refines which
                // state is kept
                if (scores.f1 > best_f1) {
                    best_f1 = scores.f1;
                    evals_since_best = 0;
                } else {
                    ++evals_since_best;
                }
            } else {
                ++evals_since_best;
            }
            model.history.push_back(rec);
            if (evals_since_best > config.patience) {
                log_debug("early stop at epoch %d (best val F1 %.4f)", epoch, best_f1);
                break;
            }
            continue;
        }
        model.history.push_back(rec);
    }

    if (evaluated) model.state = std::move(best_state);
    model.wall_time_s = elapsed_seconds(start);
    return model;
}

} // namespace

namespace {

// Mean encoder-output cosine over the given pairs; a continuous companion
// to the coarse subset F1 (unit output rows make this a plain dot product).
double mean_pair_similarity(const EmbeddingMatrix& emb, const SnapshotPair& pair,
                            const std::vector<AlignPair>& pairs) {
    if (pairs.empty()) return 0.0;
    std::size_t off2 = pair.entity_offset2();
    std::size_t d = emb.rows.cols();
    double sum = 0.0;
    for (const AlignPair& p : pairs) {
        sum += dot(emb.rows.row(static_cast<std::size_t>(p.first)),
                   emb.rows.row(off2 + static_cast<std::size_t>(p.second)), d);
    }
    return sum / static_cast<double>(pairs.size());
}

} // namespace

double validation_f1(const EncoderState& state, const SnapshotPair& pair,
                     const std::vector<AlignPair>& pairs, const RunConfig& config) {
    return validation_scores(state, pair, pairs, config).f1;
}

namespace {

ValScores validation_scores(const EncoderState& state, const SnapshotPair& pair,
                            const std::vector<AlignPair>& pairs, const RunConfig& config) {
    if (pairs.empty()) return {};
    EmbeddingMatrix emb = encode_all(state, pair);

    std::vector<EntityId> left, right;
    for (const AlignPair& p : pairs) {
        left.push_back(p.first);
        right.push_back(p.second);
    }
    std::sort(left.begin(), left.end());
    left.erase(std::unique(left.begin(), left.end()), left.end());
    std::sort(right.begin(), right.end());
    right.erase(std::unique(right.begin(), right.end()), right.end());

    std::size_t d = emb.rows.cols();
    Mat a(left.size(), d), b(right.size(), d);
    for (std::size_t i = 0; i < left.size(); ++i) {
        std::copy_n(emb.rows.row(static_cast<std::size_t>(left[i])), d, a.row(i));
    }
    std::size_t off2 = pair.entity_offset2();
    for (std::size_t j = 0; j < right.size(); ++j) {
        std::copy_n(emb.rows.row(off2 + static_cast<std::size_t>(right[j])), d, b.row(j));
    }

    // the csls_k < candidate-count invariant forces a clamp on tiny sets
    int k = std::min<int>({config.csls_k, static_cast<int>(left.size()) - 1,
                           static_cast<int>(right.size()) - 1});
    SimilarityMetric metric = k >= 1 ? SimilarityMetric{MetricKind::csls, k}
                                     : SimilarityMetric{MetricKind::cosine, 0};
    TrustworthyAlignment raw = bidirectional_search(a, b, metric);

    TrustworthyAlignment mapped;
    for (const ScoredPair& p : raw.pairs) {
        mapped.pairs.push_back({left[static_cast<std::size_t>(p.e1)],
                                right[static_cast<std::size_t>(p.e2)], p.score, p.found_at});
    }
    std::set<AlignPair> gold(pairs.begin(), pairs.end());
    std::size_t correct = 0;
    for (const ScoredPair& p : mapped.pairs) {
        if (gold.contains({p.e1, p.e2})) ++correct;
    }
    double precision = mapped.pairs.empty()
                           ? 0.0
                           : static_cast<double>(correct) / static_cast<double>(mapped.pairs.size());
    double recall = static_cast<double>(correct) / static_cast<double>(gold.size());
    ValScores scores;
    scores.f1 =
        (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    scores.mean_sim = mean_pair_similarity(emb, pair, pairs);
    return scores;
}

} // namespace

TrainedModel train_initial(const SnapshotPair& pair, const AlignmentSets& aligns,
                           const RunConfig& config) {
    config.validate();
    if (aligns.seed.empty()) {
        throw Error("precondition violated error: train_initial needs a nonempty seed alignment");
    }
    EncoderState state = init_parameters(pair, config, config.seed);
    TrainLoopSpec spec;
    spec.epochs = config.epochs;
    spec.align_pairs = aligns.seed;
    return run_training(std::move(state), pair, aligns.valid, config, spec);
}

TrainedModel finetune(const TrainedModel& prev, const SnapshotPair& pair_next,
                      const GrowthDelta& delta, const std::vector<AlignPair>& asa,
                      const std::vector<ScoredPair>& ta_top, const std::vector<AlignPair>& valid,
                      const RunConfig& config) {
    config.validate();
    EncoderState state = init_new_entities(prev.state, pair_next, delta, config);

    // Freeze regime: the inner aggregator and everything it aggregates over
    // (relation gates, old base rows) stay fixed; the cross-graph layer and
    // new entities learn.
    state.frozen.agg1 = true;
    state.frozen.rel_emb = true;
    state.frozen.base_rows.assign(pair_next.total_entities(), 0);
    std::size_t off2 = pair_next.entity_offset2();
    for (EntityId e : delta.old_to_next_1) {
        state.frozen.base_rows[static_cast<std::size_t>(e)] = 1;
    }
    for (EntityId e : delta.old_to_next_2) {
        state.frozen.base_rows[off2 + static_cast<std::size_t>(e)] = 1;
    }

    if (asa.empty() && ta_top.empty()) {
        log_info("warning: no finetuning signal (empty ASA and TA); reconstruction-only finetune");
    }

    TrainLoopSpec spec;
    spec.epochs = config.finetune_epochs;
    spec.align_pairs = asa;
    for (const ScoredPair& p : ta_top) spec.ta_pairs.emplace_back(p.e1, p.e2);
    spec.is_finetune = true;
    return run_training(std::move(state), pair_next, valid, config, spec);
}

void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (f == nullptr) throw Error("output error: cannot write " + path.string());
    std::fprintf(f, "epoch,total_loss,align_loss,reconstruct_loss,val_f1\n");
    for (const EpochRecord& rec : history) {
        if (rec.val_f1.has_value()) {
            std::fprintf(f, "%d,%.9g,%.9g,%.9g,%.6f\n", rec.epoch, rec.total, rec.align,
                         rec.reconstruct, *rec.val_f1);
        } else {
            std::fprintf(f, "%d,%.9g,%.9g,%.9g,\n", rec.epoch, rec.total, rec.align,
                         rec.reconstruct);
        }
    }
    std::fclose(f);
}

} // namespace contea
