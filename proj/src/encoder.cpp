#include "contea/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "contea/error.hpp"
#include "contea/rng.hpp"

namespace contea {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x43454131; // "CEA1"
constexpr std::uint32_t kCheckpointVersion = 1;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out = W * x + b, W is d x d
inline void affine(const Mat& w, const std::vector<double>& b, const double* x, double* out) {
    std::size_t d = w.rows();
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = b[i] + dot(w.row(i), x, d);
    }
}

// out = W^T * y
inline void affine_transpose(const Mat& w, const double* y, double* out) {
    std::size_t d = w.rows();
    std::fill(out, out + d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        axpy(y[i], w.row(i), out, d);
    }
}

} // namespace

bool EncoderState::all_finite() const {
    if (!base_emb.all_finite() || !rel_emb.all_finite() || !proxies.all_finite() ||
        !proxy_proj.all_finite()) {
        return false;
    }
    for (const auto& layer : inner_layers) {
        if (!layer.weight.all_finite()) return false;
        for (double v : layer.bias) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

EncoderGradients EncoderGradients::zeros_like(const EncoderState& state) {
    EncoderGradients g;
    g.base_emb = Mat(state.base_emb.rows(), state.base_emb.cols());
    g.rel_emb = Mat(state.rel_emb.rows(), state.rel_emb.cols());
    g.inner_layers.resize(state.inner_layers.size());
    for (std::size_t l = 0; l < state.inner_layers.size(); ++l) {
        g.inner_layers[l].weight = Mat(state.inner_layers[l].weight.rows(),
                                       state.inner_layers[l].weight.cols());
        g.inner_layers[l].bias.assign(state.inner_layers[l].bias.size(), 0.0);
    }
    g.proxies = Mat(state.proxies.rows(), state.proxies.cols());
    g.proxy_proj = Mat(state.proxy_proj.rows(), state.proxy_proj.cols());
    return g;
}

bool EncoderGradients::all_finite_or_name(const char** bad_group) const {
    auto check = [&](const Mat& m, const char* name) {
        if (!m.all_finite()) {
            *bad_group = name;
            return false;
        }
        return true;
    };
    if (!check(base_emb, "base_emb")) return false;
    if (!check(rel_emb, "rel_emb")) return false;
    for (std::size_t l = 0; l < inner_layers.size(); ++l) {
        if (!check(inner_layers[l].weight, l == 0 ? "inner0_weight" : "inner1_weight")) return false;
        for (double v : inner_layers[l].bias) {
            if (!std::isfinite(v)) {
                *bad_group = l == 0 ? "inner0_bias" : "inner1_bias";
                return false;
            }
        }
    }
    if (!check(proxies, "proxies")) return false;
    if (!check(proxy_proj, "proxy_proj")) return false;
    return true;
}

GraphView GraphView::build(const SnapshotPair& pair) {
    GraphView view;
    view.n_entities = pair.total_entities();
    view.n_relations = pair.total_relations();
    view.adj.resize(view.n_entities);
    view.recon_neighbors.resize(view.n_entities);

    EntityId e_off = static_cast<EntityId>(pair.entity_offset2());
    RelationId r_off = static_cast<RelationId>(pair.relation_offset2());

    for (std::size_t e = 0; e < pair.kg1.num_entities(); ++e) {
        auto local = pair.kg1.adjacency(static_cast<EntityId>(e));
        view.adj[e].assign(local.begin(), local.end());
    }
    for (std::size_t e = 0; e < pair.kg2.num_entities(); ++e) {
        auto local = pair.kg2.adjacency(static_cast<EntityId>(e));
        auto& out = view.adj[static_cast<std::size_t>(e_off) + e];
        out.reserve(local.size());
        for (const NeighborEdge& edge : local) {
            out.push_back({static_cast<RelationId>(edge.rel + r_off),
                           static_cast<EntityId>(edge.neighbor + e_off), edge.dir});
        }
    }
    for (std::size_t e = 0; e < view.n_entities; ++e) {
        auto& distinct = view.recon_neighbors[e];
        for (const NeighborEdge& edge : view.adj[e]) distinct.push_back(edge.neighbor);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    }
    return view;
}

EncoderState init_parameters(const SnapshotPair& pair, const RunConfig& config, std::uint64_t seed) {
    config.validate();
    if (pair.kg1.num_entities() == 0 || pair.kg2.num_entities() == 0) {
        throw Error("empty graph error: both KGs need at least one entity");
    }

    std::size_t d = static_cast<std::size_t>(config.dim);
    std::size_t k = static_cast<std::size_t>(config.proxy_count);
    double bound = 1.0 / std::sqrt(static_cast<double>(d));
    double noise = 0.05;

    EncoderState state;

    auto sample_normalized = [&](Mat& m, Rng& rng) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
            normalize_row(m.row(r), m.cols());
        }
    };

    Rng base_rng(derive_seed(seed, 0));
    state.base_emb = Mat(pair.total_entities(), d);
    sample_normalized(state.base_emb, base_rng);

    Rng rel_rng(derive_seed(seed, 1));
    state.rel_emb = Mat(pair.total_relations(), d);
    sample_normalized(state.rel_emb, rel_rng);

    Rng layer_rng(derive_seed(seed, 2));
    state.inner_layers.resize(2);
    for (auto& layer : state.inner_layers) {
        layer.weight = Mat(d, d);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                layer.weight(i, j) = (i == j ? 1.0 : 0.0) + layer_rng.uniform(-noise, noise);
            }
        }
        layer.bias.assign(d, 0.0);
    }

    Rng proxy_rng(derive_seed(seed, 3));
    state.proxies = Mat(k, d);
    sample_normalized(state.proxies, proxy_rng);

    Rng proj_rng(derive_seed(seed, 4));
    state.proxy_proj = Mat(d, 2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < 2 * d; ++j) {
            double ident = (j == i) ? 1.0 : (j == i + d ? 0.5 : 0.0);
            state.proxy_proj(i, j) = ident + proj_rng.uniform(-noise, noise);
        }
    }

    return state;
}

void encode_forward(const EncoderState& state, const GraphView& view, ForwardCache& cache) {
    const std::size_t n = view.n_entities;
    const std::size_t d = state.dim();
    const std::size_t k = state.proxy_count();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    cache.rel_gates = Mat(state.rel_emb.rows(), d);
    cache.mean0 = Mat(n, d);
    cache.hidden1 = Mat(n, d);
    cache.mean1 = Mat(n, d);
    cache.hidden2 = Mat(n, d);
    cache.attn = Mat(n, k);
    cache.context = Mat(n, d);
    cache.pre_norm = Mat(n, d);
    cache.norms.assign(n, 0.0);
    cache.out = Mat(n, d);

#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(state.rel_emb.rows()); ++r) {
        const double* src = state.rel_emb.row(static_cast<std::size_t>(r));
        double* dst = cache.rel_gates.row(static_cast<std::size_t>(r));
        for (std::size_t c = 0; c < d; ++c) dst[c] = sigmoid(src[c]);
    }

    // Stage 1, layer 0: gated mean over self + relational neighbors, then tanh.
#pragma omp parallel for schedule(static)
    for (std::int64_t ei = 0; ei < static_cast<std::int64_t>(n); ++ei) {
        std::size_t e = static_cast<std::size_t>(ei);
        const auto& edges = view.adj[e];
        double inv = 1.0 / (1.0 + static_cast<double>(edges.size()));
        double* mean = cache.mean0.row(e);
        std::copy_n(state.base_emb.row(e), d, mean); // self term, all-ones gate
        for (const NeighborEdge& edge : edges) {
            const double* nb = state.base_emb.row(static_cast<std::size_t>(edge.neighbor));
            const double* gate = cache.rel_gates.row(static_cast<std::size_t>(edge.rel));
            for (std::size_t c = 0; c < d; ++c) mean[c] += nb[c] * gate[c];
        }
        for (std::size_t c = 0; c < d; ++c) mean[c] *= inv;

        double* h1 = cache.hidden1.row(e);
        affine(state.inner_layers[0].weight, state.inner_layers[0].bias, mean, h1);
        for (std::size_t c = 0; c < d; ++c) h1[c] = std::tanh(h1[c]);
    }

    // Stage 1 layer 1, then the proxy-attention cross layer and the
    // normalized projection.
#pragma omp parallel for schedule(static)
    for (std::int64_t ei = 0; ei < static_cast<std::int64_t>(n); ++ei) {
        std::size_t e = static_cast<std::size_t>(ei);
        const auto& edges = view.adj[e];
        double inv = 1.0 / (1.0 + static_cast<double>(edges.size()));
        double* mean = cache.mean1.row(e);
        std::copy_n(cache.hidden1.row(e), d, mean);
        for (const NeighborEdge& edge : edges) {
            const double* nb = cache.hidden1.row(static_cast<std::size_t>(edge.neighbor));
            const double* gate = cache.rel_gates.row(static_cast<std::size_t>(edge.rel));
            for (std::size_t c = 0; c < d; ++c) mean[c] += nb[c] * gate[c];
        }
        for (std::size_t c = 0; c < d; ++c) mean[c] *= inv;

        double* h2 = cache.hidden2.row(e);
        affine(state.inner_layers[1].weight, state.inner_layers[1].bias, mean, h2);
        for (std::size_t c = 0; c < d; ++c) h2[c] = std::tanh(h2[c]);

        // scaled dot-product attention over the proxy set
        double* attn = cache.attn.row(e);
        double zmax = -1e300;
        for (std::size_t p = 0; p < k; ++p) {
            attn[p] = dot(h2, state.proxies.row(p), d) * inv_sqrt_d;
            zmax = std::max(zmax, attn[p]);
        }
        double zsum = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            attn[p] = std::exp(attn[p] - zmax);
            zsum += attn[p];
        }
        double* ctx = cache.context.row(e);
        std::fill(ctx, ctx + d, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            attn[p] /= zsum;
            axpy(attn[p], state.proxies.row(p), ctx, d);
        }

        double* pre = cache.pre_norm.row(e);
        for (std::size_t i = 0; i < d; ++i) {
            const double* w = state.proxy_proj.row(i);
            pre[i] = dot(w, h2, d) + dot(w + d, ctx, d);
        }
        double norm = l2_norm(pre, d);
        if (!(norm > 1e-300)) {
            throw Error("numerical instability error: zero-norm encoder output for entity " +
                        std::to_string(e));
        }
        cache.norms[e] = norm;
        double* out = cache.out.row(e);
        double invn = 1.0 / norm;
        for (std::size_t c = 0; c < d; ++c) out[c] = pre[c] * invn;
    }
}

EmbeddingMatrix encode_all(const EncoderState& state, const SnapshotPair& pair) {
    GraphView view = GraphView::build(pair);
    ForwardCache cache;
    encode_forward(state, view, cache);
    return {std::move(cache.out), pair.t};
}

void encoder_backward(const EncoderState& state, const GraphView& view, const ForwardCache& cache,
                      const Mat& d_out, EncoderGradients& grads) {
    const std::size_t n = view.n_entities;
    const std::size_t d = state.dim();
    const std::size_t k = state.proxy_count();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const FrozenMask& frozen = state.frozen;

    Mat d_pre(n, d);   // gradient at the projector output (before normalize)
    Mat d_h2(n, d);
    Mat d_ctx(n, d);
    Mat d_z(n, k);
    Mat d_s2(n, d);    // pre-tanh of layer 1
    Mat d_m1(n, d);
    Mat d_h1(n, d);
    Mat d_s1(n, d);
    Mat d_m0(n, d);

    // Per-entity adjoints down to the layer-1 mean; no cross-entity writes.
#pragma omp parallel for schedule(static)
    for (std::int64_t ei = 0; ei < static_cast<std::int64_t>(n); ++ei) {
        std::size_t e = static_cast<std::size_t>(ei);
        const double* go = d_out.row(e);
        const double* out = cache.out.row(e);
        double* dpre = d_pre.row(e);
        double proj = dot(out, go, d);
        double invn = 1.0 / cache.norms[e];
        for (std::size_t c = 0; c < d; ++c) dpre[c] = (go[c] - out[c] * proj) * invn;

        double* dh2 = d_h2.row(e);
        double* dctx = d_ctx.row(e);
        std::fill(dh2, dh2 + d, 0.0);
        std::fill(dctx, dctx + d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            const double* w = state.proxy_proj.row(i);
            axpy(dpre[i], w, dh2, d);
            axpy(dpre[i], w + d, dctx, d);
        }

        const double* attn = cache.attn.row(e);
        double* dz = d_z.row(e);
        double mix = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            dz[p] = dot(dctx, state.proxies.row(p), d); // d(attn weight)
            mix += attn[p] * dz[p];
        }
        for (std::size_t p = 0; p < k; ++p) {
            dz[p] = attn[p] * (dz[p] - mix);
            axpy(dz[p] * inv_sqrt_d, state.proxies.row(p), dh2, d);
        }

        const double* h2 = cache.hidden2.row(e);
        double* ds2 = d_s2.row(e);
        for (std::size_t c = 0; c < d; ++c) ds2[c] = dh2[c] * (1.0 - h2[c] * h2[c]);
        affine_transpose(state.inner_layers[1].weight, ds2, d_m1.row(e));
    }

    // Parameter accumulation in fixed entity order (deterministic for any
    // thread count).
    for (std::size_t e = 0; e < n; ++e) {
        if (!frozen.proxy_proj) {
            const double* dpre = d_pre.row(e);
            const double* h2 = cache.hidden2.row(e);
            const double* ctx = cache.context.row(e);
            for (std::size_t i = 0; i < d; ++i) {
                double* w = grads.proxy_proj.row(i);
                axpy(dpre[i], h2, w, d);
                axpy(dpre[i], ctx, w + d, d);
            }
        }
        if (!frozen.proxies) {
            const double* attn = cache.attn.row(e);
            const double* dz = d_z.row(e);
            const double* dctx = d_ctx.row(e);
            const double* h2 = cache.hidden2.row(e);
            for (std::size_t p = 0; p < k; ++p) {
                double* gp = grads.proxies.row(p);
                axpy(attn[p], dctx, gp, d);
                axpy(dz[p] * inv_sqrt_d, h2, gp, d);
            }
        }
        if (!frozen.agg1) {
            const double* ds2 = d_s2.row(e);
            const double* m1 = cache.mean1.row(e);
            Mat& w1 = grads.inner_layers[1].weight;
            for (std::size_t i = 0; i < d; ++i) {
                axpy(ds2[i], m1, w1.row(i), d);
                grads.inner_layers[1].bias[i] += ds2[i];
            }
        }
    }

    // Gather d(hidden1): every incidence (e, r, u) is mirrored as (u, r, e),
    // so summing over our own adjacency collects all mean contributions.
#pragma omp parallel for schedule(static)
    for (std::int64_t ei = 0; ei < static_cast<std::int64_t>(n); ++ei) {
        std::size_t e = static_cast<std::size_t>(ei);
        const auto& edges = view.adj[e];
        double inv_self = 1.0 / (1.0 + static_cast<double>(edges.size()));
        double* dh1 = d_h1.row(e);
        const double* dm1_self = d_m1.row(e);
        for (std::size_t c = 0; c < d; ++c) dh1[c] = dm1_self[c] * inv_self;
        for (const NeighborEdge& edge : edges) {
            std::size_t u = static_cast<std::size_t>(edge.neighbor);
            double inv_u = 1.0 / (1.0 + static_cast<double>(view.adj[u].size()));
            const double* dm1_u = d_m1.row(u);
            const double* gate = cache.rel_gates.row(static_cast<std::size_t>(edge.rel));
            for (std::size_t c = 0; c < d; ++c) dh1[c] += dm1_u[c] * gate[c] * inv_u;
        }
        const double* h1 = cache.hidden1.row(e);
        double* ds1 = d_s1.row(e);
        for (std::size_t c = 0; c < d; ++c) ds1[c] = dh1[c] * (1.0 - h1[c] * h1[c]);
        affine_transpose(state.inner_layers[0].weight, ds1, d_m0.row(e));
    }

    for (std::size_t e = 0; e < n; ++e) {
        if (!frozen.agg1) {
            const double* ds1 = d_s1.row(e);
            const double* m0 = cache.mean0.row(e);
            Mat& w0 = grads.inner_layers[0].weight;
            for (std::size_t i = 0; i < d; ++i) {
                axpy(ds1[i], m0, w0.row(i), d);
                grads.inner_layers[0].bias[i] += ds1[i];
            }
        }
        if (!frozen.rel_emb) {
            const auto& edges = view.adj[e];
            double inv = 1.0 / (1.0 + static_cast<double>(edges.size()));
            const double* dm1 = d_m1.row(e);
            const double* dm0 = d_m0.row(e);
            for (const NeighborEdge& edge : edges) {
                std::size_t u = static_cast<std::size_t>(edge.neighbor);
                std::size_t r = static_cast<std::size_t>(edge.rel);
                const double* gate = cache.rel_gates.row(r);
                const double* h1_u = cache.hidden1.row(u);
                const double* b_u = state.base_emb.row(u);
                double* gr = grads.rel_emb.row(r);
                for (std::size_t c = 0; c < d; ++c) {
                    double dgate = (dm1[c] * h1_u[c] + dm0[c] * b_u[c]) * inv;
                    gr[c] += dgate * gate[c] * (1.0 - gate[c]);
                }
            }
        }
    }

    // Gather d(base).
#pragma omp parallel for schedule(static)
    for (std::int64_t ei = 0; ei < static_cast<std::int64_t>(n); ++ei) {
        std::size_t e = static_cast<std::size_t>(ei);
        if (frozen.base_row_frozen(e)) continue;
        const auto& edges = view.adj[e];
        double inv_self = 1.0 / (1.0 + static_cast<double>(edges.size()));
        double* gb = grads.base_emb.row(e);
        const double* dm0_self = d_m0.row(e);
        for (std::size_t c = 0; c < d; ++c) gb[c] += dm0_self[c] * inv_self;
        for (const NeighborEdge& edge : edges) {
            std::size_t u = static_cast<std::size_t>(edge.neighbor);
            double inv_u = 1.0 / (1.0 + static_cast<double>(view.adj[u].size()));
            const double* dm0_u = d_m0.row(u);
            const double* gate = cache.rel_gates.row(static_cast<std::size_t>(edge.rel));
            for (std::size_t c = 0; c < d; ++c) gb[c] += dm0_u[c] * gate[c] * inv_u;
        }
    }
}

EncoderState init_new_entities(const EncoderState& state, const SnapshotPair& pair_next,
                               const GrowthDelta& delta, const RunConfig& config) {
    const std::size_t d = state.dim();
    const std::size_t n_next = pair_next.total_entities();
    const std::size_t off2_next = pair_next.entity_offset2();
    const std::size_t n1_prev = delta.old_to_next_1.size();
    const std::size_t n2_prev = delta.old_to_next_2.size();

    EncoderState next = state;
    next.frozen = FrozenMask{};
    next.base_emb = Mat(n_next, d);

    std::vector<std::uint8_t> seen(n_next, 0);
    for (std::size_t e = 0; e < n1_prev; ++e) {
        std::size_t g = static_cast<std::size_t>(delta.old_to_next_1[e]);
        std::copy_n(state.base_emb.row(e), d, next.base_emb.row(g));
        seen[g] = 1;
    }
    for (std::size_t e = 0; e < n2_prev; ++e) {
        std::size_t g = off2_next + static_cast<std::size_t>(delta.old_to_next_2[e]);
        std::copy_n(state.base_emb.row(n1_prev + e), d, next.base_emb.row(g));
        seen[g] = 1;
    }

    // Relation rows persist; only their positions may move.
    next.rel_emb = Mat(pair_next.total_relations(), d);
    std::size_t roff_next = pair_next.relation_offset2();
    std::size_t r1_prev = delta.rel_old_to_next_1.size();
    for (std::size_t r = 0; r < r1_prev; ++r) {
        std::copy_n(state.rel_emb.row(r), d,
                    next.rel_emb.row(static_cast<std::size_t>(delta.rel_old_to_next_1[r])));
    }
    for (std::size_t r = 0; r < delta.rel_old_to_next_2.size(); ++r) {
        std::copy_n(state.rel_emb.row(r1_prev + r), d,
                    next.rel_emb.row(roff_next + static_cast<std::size_t>(delta.rel_old_to_next_2[r])));
    }

    GraphView view = GraphView::build(pair_next);

    std::vector<std::size_t> fresh;
    for (std::size_t g = 0; g < n_next; ++g) {
        if (seen[g]) continue;
        const auto& one_hop = view.recon_neighbors[g];
        double* row = next.base_emb.row(g);
        std::size_t count = 0;
        for (EntityId u : one_hop) {
            if (seen[static_cast<std::size_t>(u)]) {
                axpy(1.0, next.base_emb.row(static_cast<std::size_t>(u)), row, d);
                ++count;
            }
        }
        if (count == 0) {
            // two-hop seen frontier
            std::vector<EntityId> frontier;
            for (EntityId u : one_hop) {
                for (EntityId w : view.recon_neighbors[static_cast<std::size_t>(u)]) {
                    if (seen[static_cast<std::size_t>(w)]) frontier.push_back(w);
                }
            }
            std::sort(frontier.begin(), frontier.end());
            frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
            for (EntityId w : frontier) {
                axpy(1.0, next.base_emb.row(static_cast<std::size_t>(w)), row, d);
                ++count;
            }
        }
        if (count > 0) {
            double inv = 1.0 / static_cast<double>(count);
            for (std::size_t c = 0; c < d; ++c) row[c] *= inv;
        } else {
            fresh.push_back(g);
        }
    }

    // No seen entity within two hops: fresh seeded init, per-entity stream so
    // the result does not depend on processing order.
    double bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t g : fresh) {
        Rng rng(derive_seed(config.seed, 0x66726573ULL + g));
        double* row = next.base_emb.row(g);
        for (std::size_t c = 0; c < d; ++c) row[c] = rng.uniform(-bound, bound);
        normalize_row(row, d);
    }

    return next;
}

namespace {

void write_group(std::ofstream& out, const std::string& name, const double* data,
                 std::uint64_t rows, std::uint64_t cols) {
    std::uint16_t len = static_cast<std::uint16_t>(name.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(name.data(), len);
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(rows * cols * sizeof(double)));
}

struct GroupRecord {
    std::string name;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<double> values;
};

GroupRecord read_group(std::ifstream& in, const std::filesystem::path& path) {
    GroupRecord rec;
    std::uint16_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    rec.name.resize(len);
    in.read(rec.name.data(), len);
    in.read(reinterpret_cast<char*>(&rec.rows), sizeof(rec.rows));
    in.read(reinterpret_cast<char*>(&rec.cols), sizeof(rec.cols));
    if (!in) throw Error("checkpoint error: truncated group header in " + path.string());
    rec.values.resize(rec.rows * rec.cols);
    in.read(reinterpret_cast<char*>(rec.values.data()),
            static_cast<std::streamsize>(rec.values.size() * sizeof(double)));
    if (!in) throw Error("checkpoint error: truncated group '" + rec.name + "' in " + path.string());
    return rec;
}

} // namespace

void save_checkpoint(const EncoderState& state, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("output error: cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(&kCheckpointMagic), sizeof(kCheckpointMagic));
    out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof(kCheckpointVersion));
    std::uint32_t groups = 8;
    out.write(reinterpret_cast<const char*>(&groups), sizeof(groups));

    write_group(out, "base_emb", state.base_emb.data().data(), state.base_emb.rows(), state.base_emb.cols());
    write_group(out, "rel_emb", state.rel_emb.data().data(), state.rel_emb.rows(), state.rel_emb.cols());
    write_group(out, "inner0_weight", state.inner_layers[0].weight.data().data(),
                state.inner_layers[0].weight.rows(), state.inner_layers[0].weight.cols());
    write_group(out, "inner0_bias", state.inner_layers[0].bias.data(), 1, state.inner_layers[0].bias.size());
    write_group(out, "inner1_weight", state.inner_layers[1].weight.data().data(),
                state.inner_layers[1].weight.rows(), state.inner_layers[1].weight.cols());
    write_group(out, "inner1_bias", state.inner_layers[1].bias.data(), 1, state.inner_layers[1].bias.size());
    write_group(out, "proxies", state.proxies.data().data(), state.proxies.rows(), state.proxies.cols());
    write_group(out, "proxy_proj", state.proxy_proj.data().data(), state.proxy_proj.rows(), state.proxy_proj.cols());
    if (!out) throw Error("output error: failed writing checkpoint " + path.string());
}

EncoderState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("checkpoint error: cannot open " + path.string());
    std::uint32_t magic = 0, version = 0, groups = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&groups), sizeof(groups));
    if (!in || magic != kCheckpointMagic) {
        throw Error("checkpoint error: bad magic in " + path.string());
    }
    if (version != kCheckpointVersion) {
        throw Error("checkpoint error: unsupported version " + std::to_string(version));
    }

    EncoderState state;
    state.inner_layers.resize(2);
    for (std::uint32_t g = 0; g < groups; ++g) {
        GroupRecord rec = read_group(in, path);
        auto to_mat = [&]() {
            Mat m(rec.rows, rec.cols);
            std::copy(rec.values.begin(), rec.values.end(), m.data().begin());
            return m;
        };
        if (rec.name == "base_emb") state.base_emb = to_mat();
        else if (rec.name == "rel_emb") state.rel_emb = to_mat();
        else if (rec.name == "inner0_weight") state.inner_layers[0].weight = to_mat();
        else if (rec.name == "inner0_bias") state.inner_layers[0].bias = rec.values;
        else if (rec.name == "inner1_weight") state.inner_layers[1].weight = to_mat();
        else if (rec.name == "inner1_bias") state.inner_layers[1].bias = rec.values;
        else if (rec.name == "proxies") state.proxies = to_mat();
        else if (rec.name == "proxy_proj") state.proxy_proj = to_mat();
        else throw Error("checkpoint error: unknown group '" + rec.name + "' in " + path.string());
    }
    return state;
}

} // namespace contea
