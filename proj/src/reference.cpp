#include "contea/reference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace contea::reference {

namespace {

double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double vec_norm(const std::vector<double>& a) { return std::sqrt(vec_dot(a, a)); }

std::vector<double> get_row(const Mat& m, std::size_t r) {
    return {m.row(r), m.row(r) + m.cols()};
}

// Adjacency of one entity of the pair, in global ids, sorted.
std::vector<NeighborEdge> global_edges(const SnapshotPair& pair, std::size_t global_e) {
    std::vector<NeighborEdge> edges;
    std::size_t e_off = pair.entity_offset2();
    if (global_e < e_off) {
        auto local = pair.kg1.adjacency(static_cast<EntityId>(global_e));
        edges.assign(local.begin(), local.end());
    } else {
        auto local = pair.kg2.adjacency(static_cast<EntityId>(global_e - e_off));
        for (NeighborEdge edge : local) {
            edge.rel = static_cast<RelationId>(edge.rel + pair.relation_offset2());
            edge.neighbor = static_cast<EntityId>(edge.neighbor + e_off);
            edges.push_back(edge);
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

} // namespace

Mat encode_all(const EncoderState& state, const SnapshotPair& pair) {
    const std::size_t n = pair.total_entities();
    const std::size_t d = state.dim();
    const std::size_t k = state.proxy_count();
    Mat out(n, d);

    // stage 1, layer 0, for every entity
    Mat h1(n, d);
    for (std::size_t e = 0; e < n; ++e) {
        auto edges = global_edges(pair, e);
        std::vector<double> mean = get_row(state.base_emb, e);
        for (const NeighborEdge& edge : edges) {
            for (std::size_t c = 0; c < d; ++c) {
                double gate = 1.0 / (1.0 + std::exp(-state.rel_emb(static_cast<std::size_t>(edge.rel), c)));
                mean[c] += state.base_emb(static_cast<std::size_t>(edge.neighbor), c) * gate;
            }
        }
        for (std::size_t c = 0; c < d; ++c) mean[c] /= 1.0 + static_cast<double>(edges.size());
        for (std::size_t i = 0; i < d; ++i) {
            double s = state.inner_layers[0].bias[i];
            for (std::size_t j = 0; j < d; ++j) s += state.inner_layers[0].weight(i, j) * mean[j];
            h1(e, i) = std::tanh(s);
        }
    }

    for (std::size_t e = 0; e < n; ++e) {
        auto edges = global_edges(pair, e);
        std::vector<double> mean = get_row(h1, e);
        for (const NeighborEdge& edge : edges) {
            for (std::size_t c = 0; c < d; ++c) {
                double gate = 1.0 / (1.0 + std::exp(-state.rel_emb(static_cast<std::size_t>(edge.rel), c)));
                mean[c] += h1(static_cast<std::size_t>(edge.neighbor), c) * gate;
            }
        }
        for (std::size_t c = 0; c < d; ++c) mean[c] /= 1.0 + static_cast<double>(edges.size());

        std::vector<double> h2(d);
        for (std::size_t i = 0; i < d; ++i) {
            double s = state.inner_layers[1].bias[i];
            for (std::size_t j = 0; j < d; ++j) s += state.inner_layers[1].weight(i, j) * mean[j];
            h2[i] = std::tanh(s);
        }

        std::vector<double> logits(k);
        for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += h2[c] * state.proxies(p, c);
            logits[p] = s / std::sqrt(static_cast<double>(d));
        }
        double zmax = *std::max_element(logits.begin(), logits.end());
        double zsum = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            logits[p] = std::exp(logits[p] - zmax);
            zsum += logits[p];
        }
        std::vector<double> ctx(d, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            double a = logits[p] / zsum;
            for (std::size_t c = 0; c < d; ++c) ctx[c] += a * state.proxies(p, c);
        }

        std::vector<double> pre(d);
        for (std::size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += state.proxy_proj(i, j) * h2[j];
            for (std::size_t j = 0; j < d; ++j) s += state.proxy_proj(i, d + j) * ctx[j];
            pre[i] = s;
        }
        double norm = vec_norm(pre);
        for (std::size_t c = 0; c < d; ++c) out(e, c) = pre[c] / norm;
    }
    return out;
}

Mat cosine(const Mat& emb_a, const Mat& emb_b) {
    Mat s(emb_a.rows(), emb_b.rows());
    for (std::size_t i = 0; i < emb_a.rows(); ++i) {
        std::vector<double> a = get_row(emb_a, i);
        double na = vec_norm(a);
        for (std::size_t j = 0; j < emb_b.rows(); ++j) {
            std::vector<double> b = get_row(emb_b, j);
            s(i, j) = vec_dot(a, b) / (na * vec_norm(b));
        }
    }
    return s;
}

Mat csls(const Mat& emb_a, const Mat& emb_b, int k) {
    Mat cos = cosine(emb_a, emb_b);
    const std::size_t na = cos.rows();
    const std::size_t nb = cos.cols();
    const std::size_t kk = static_cast<std::size_t>(k);

    auto mean_top = [&](std::vector<double> values) {
        std::sort(values.begin(), values.end(), std::greater<double>());
        double sum = 0.0;
        for (std::size_t i = 0; i < kk; ++i) sum += values[i];
        return sum / static_cast<double>(kk);
    };

    std::vector<double> r_b(na), r_a(nb);
    for (std::size_t i = 0; i < na; ++i) {
        r_b[i] = mean_top(std::vector<double>(cos.row(i), cos.row(i) + nb));
    }
    for (std::size_t j = 0; j < nb; ++j) {
        std::vector<double> col(na);
        for (std::size_t i = 0; i < na; ++i) col[i] = cos(i, j);
        r_a[j] = mean_top(col);
    }

    Mat s(na, nb);
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            s(i, j) = 2.0 * cos(i, j) - r_b[i] - r_a[j];
        }
    }
    return s;
}

std::vector<ScoredPair> bidirectional_search(const Mat& emb_a, const Mat& emb_b,
                                             const SimilarityMetric& metric) {
    Mat s = metric.kind == MetricKind::cosine ? cosine(emb_a, emb_b)
                                              : csls(emb_a, emb_b, metric.csls_k);
    std::vector<ScoredPair> result;
    for (std::size_t i = 0; i < s.rows(); ++i) {
        std::size_t jbest = 0;
        for (std::size_t j = 1; j < s.cols(); ++j) {
            if (s(i, j) > s(i, jbest)) jbest = j;
        }
        bool mutual = true;
        for (std::size_t i2 = 0; i2 < s.rows(); ++i2) {
            if (s(i2, jbest) > s(i, jbest) || (s(i2, jbest) == s(i, jbest) && i2 < i)) {
                mutual = false;
                break;
            }
        }
        if (mutual) {
            result.push_back({static_cast<EntityId>(i), static_cast<EntityId>(jbest), s(i, jbest), 0});
        }
    }
    return result;
}

double reconstruction_loss(const Mat& base_emb, const SnapshotPair& pair) {
    const std::size_t n = pair.total_entities();
    const std::size_t d = base_emb.cols();
    double total = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
        std::set<EntityId> distinct;
        for (const NeighborEdge& edge : global_edges(pair, e)) distinct.insert(edge.neighbor);
        if (distinct.empty()) continue;
        for (std::size_t c = 0; c < d; ++c) {
            double mean = 0.0;
            for (EntityId u : distinct) mean += base_emb(static_cast<std::size_t>(u), c);
            mean /= static_cast<double>(distinct.size());
            double diff = base_emb(e, c) - mean;
            total += diff * diff;
        }
    }
    return total;
}

double alignment_loss(const Mat& encoder_out, std::size_t kg2_offset,
                      const std::vector<AlignPair>& batch, double gamma, double lambda) {
    auto sim = [&](EntityId e1, EntityId e2) {
        std::vector<double> a = get_row(encoder_out, static_cast<std::size_t>(e1));
        std::vector<double> b = get_row(encoder_out, kg2_offset + static_cast<std::size_t>(e2));
        return vec_dot(a, b) / (vec_norm(a) * vec_norm(b));
    };
    double sum = 0.0;
    for (const AlignPair& pos : batch) {
        for (const AlignPair& other : batch) {
            if (other.second == pos.second) continue;
            sum += std::exp(gamma * (lambda - sim(pos.first, pos.second) + sim(pos.first, other.second)));
        }
    }
    return std::log(1.0 + sum);
}

std::vector<ScoredPair> integrate(const std::vector<ScoredPair>& old_pairs,
                                  const std::vector<ScoredPair>& new_pairs) {
    struct Item {
        ScoredPair pair;
        int origin;
        bool used = false;
    };
    std::vector<Item> pool;
    for (const ScoredPair& p : old_pairs) pool.push_back({p, 0});
    for (const ScoredPair& p : new_pairs) pool.push_back({p, 1});

    std::vector<ScoredPair> kept;
    std::set<EntityId> taken1, taken2;
    std::set<std::pair<EntityId, EntityId>> kept_keys;

    while (true) {
        int best = -1;
        for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
            if (pool[static_cast<std::size_t>(i)].used) continue;
            if (best < 0) {
                best = i;
                continue;
            }
            const Item& a = pool[static_cast<std::size_t>(i)];
            const Item& b = pool[static_cast<std::size_t>(best)];
            bool better = a.pair.score > b.pair.score ||
                          (a.pair.score == b.pair.score &&
                           (a.origin < b.origin ||
                            (a.origin == b.origin &&
                             std::tie(a.pair.e1, a.pair.e2) < std::tie(b.pair.e1, b.pair.e2))));
            if (better) best = i;
        }
        if (best < 0) break;
        Item& item = pool[static_cast<std::size_t>(best)];
        item.used = true;
        if (kept_keys.contains({item.pair.e1, item.pair.e2})) continue;
        if (taken1.contains(item.pair.e1) || taken2.contains(item.pair.e2)) continue;
        taken1.insert(item.pair.e1);
        taken2.insert(item.pair.e2);
        kept_keys.insert({item.pair.e1, item.pair.e2});
        kept.push_back(item.pair);
    }
    std::sort(kept.begin(), kept.end(), [](const ScoredPair& a, const ScoredPair& b) {
        return std::tie(a.e1, a.e2) < std::tie(b.e1, b.e2);
    });
    return kept;
}

std::vector<NeighborEdge> neighbors(const KnowledgeGraph& kg, EntityId e) {
    std::vector<NeighborEdge> edges;
    for (const Triple& t : kg.triples()) {
        if (t.head == e) edges.push_back({t.rel, t.tail, Direction::out});
        if (t.tail == e) edges.push_back({t.rel, t.head, Direction::in});
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

std::vector<AlignPair> affected_seeds(const std::vector<AlignPair>& seeds,
                                      const GrowthDelta& delta) {
    std::vector<AlignPair> result;
    for (const AlignPair& seed : seeds) {
        bool hit = false;
        for (const Triple& t : delta.new_triples_1) {
            if (t.head == seed.first || t.tail == seed.first) {
                hit = true;
                break;
            }
        }
        if (!hit) {
            for (const Triple& t : delta.new_triples_2) {
                if (t.head == seed.second || t.tail == seed.second) {
                    hit = true;
                    break;
                }
            }
        }
        if (hit) result.push_back(seed);
    }
    std::sort(result.begin(), result.end());
    return result;
}

namespace {

// Every scalar parameter of the state, as (group view) accessors.
struct ParamView {
    double* data;
    std::size_t count;
};

std::vector<ParamView> param_views(EncoderState& state) {
    std::vector<ParamView> views;
    views.push_back({state.base_emb.data().data(), state.base_emb.data().size()});
    views.push_back({state.rel_emb.data().data(), state.rel_emb.data().size()});
    for (auto& layer : state.inner_layers) {
        views.push_back({layer.weight.data().data(), layer.weight.data().size()});
        views.push_back({layer.bias.data(), layer.bias.size()});
    }
    views.push_back({state.proxies.data().data(), state.proxies.data().size()});
    views.push_back({state.proxy_proj.data().data(), state.proxy_proj.data().size()});
    return views;
}

std::vector<ParamView> grad_views(EncoderGradients& grads) {
    std::vector<ParamView> views;
    views.push_back({grads.base_emb.data().data(), grads.base_emb.data().size()});
    views.push_back({grads.rel_emb.data().data(), grads.rel_emb.data().size()});
    for (auto& layer : grads.inner_layers) {
        views.push_back({layer.weight.data().data(), layer.weight.data().size()});
        views.push_back({layer.bias.data(), layer.bias.size()});
    }
    views.push_back({grads.proxies.data().data(), grads.proxies.data().size()});
    views.push_back({grads.proxy_proj.data().data(), grads.proxy_proj.data().size()});
    return views;
}

} // namespace

EncoderGradients finite_difference_gradient(EncoderState state,
                                            const std::function<double(const EncoderState&)>& loss,
                                            double h) {
    EncoderGradients grads = EncoderGradients::zeros_like(state);
    auto params = param_views(state);
    auto out = grad_views(grads);
    for (std::size_t g = 0; g < params.size(); ++g) {
        for (std::size_t i = 0; i < params[g].count; ++i) {
            double saved = params[g].data[i];
            params[g].data[i] = saved + h;
            double up = loss(state);
            params[g].data[i] = saved - h;
            double down = loss(state);
            params[g].data[i] = saved;
            out[g].data[i] = (up - down) / (2.0 * h);
        }
    }
    return grads;
}

double max_relative_error(const EncoderGradients& a, const EncoderGradients& b,
                          double denom_floor) {
    EncoderGradients& ma = const_cast<EncoderGradients&>(a);
    EncoderGradients& mb = const_cast<EncoderGradients&>(b);
    auto va = grad_views(ma);
    auto vb = grad_views(mb);
    double worst = 0.0;
    for (std::size_t g = 0; g < va.size(); ++g) {
        for (std::size_t i = 0; i < va[g].count; ++i) {
            double x = va[g].data[i];
            double y = vb[g].data[i];
            double denom = std::max({std::abs(x), std::abs(y), denom_floor});
            worst = std::max(worst, std::abs(x - y) / denom);
        }
    }
    return worst;
}

} // namespace contea::reference
