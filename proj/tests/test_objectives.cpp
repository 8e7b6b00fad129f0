#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "contea/encoder.hpp"
#include "contea/error.hpp"
#include "contea/objectives.hpp"
#include "contea/reference.hpp"
#include "contea/rng.hpp"

using namespace contea;

namespace {

KnowledgeGraph graph_from(const std::vector<std::array<std::string, 3>>& triples) {
    KnowledgeGraph kg;
    for (const auto& t : triples) kg.add_triple(t[0], t[1], t[2]);
    kg.finalize();
    return kg;
}

SnapshotPair random_pair(int n_entities, int n_relations, int n_triples, std::uint64_t seed) {
    Rng rng(seed);
    auto random_kg = [&](const char* prefix) {
        KnowledgeGraph kg;
        for (int i = 0; i < n_triples; ++i) {
            int h = static_cast<int>(rng.index(static_cast<std::size_t>(n_entities)));
            int t = static_cast<int>(rng.index(static_cast<std::size_t>(n_entities)));
            if (h == t) t = (t + 1) % n_entities;
            kg.add_triple(prefix + std::to_string(h),
                          "r" + std::to_string(rng.index(static_cast<std::size_t>(n_relations))),
                          prefix + std::to_string(t));
        }
        kg.finalize();
        return kg;
    };
    SnapshotPair pair;
    pair.kg1 = random_kg("a");
    pair.kg2 = random_kg("b");
    return pair;
}

Mat unit_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Mat m(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
        normalize_row(m.row(r), d);
    }
    return m;
}

} // namespace

TEST_CASE("reconstruction loss is zero when all embeddings are identical") {
    SnapshotPair pair;
    pair.kg1 = graph_from({{"a", "r", "b"}, {"b", "r", "c"}});
    pair.kg2 = graph_from({{"x", "s", "y"}});
    GraphView view = GraphView::build(pair);
    Mat base(pair.total_entities(), 4, 0.3);
    CHECK(reconstruction_loss(base, view) == doctest::Approx(0.0));
}

TEST_CASE("reconstruction loss: each endpoint of a single edge contributes |e - n|^2") {
    // two entities joined by one triple: both sides see the other as their
    // only neighbor, so with e=(1,0), n=(0,1) each term is |(1,-1)|^2 = 2
    SnapshotPair pair;
    pair.kg1 = graph_from({{"e", "r", "n"}});
    pair.kg2 = graph_from({{"x", "s", "y"}});
    GraphView view = GraphView::build(pair);
    Mat base(pair.total_entities(), 2);
    base(0, 0) = 1.0; // e
    base(1, 1) = 1.0; // n
    base(2, 0) = 0.5; // kg2 rows: x == y's mean? x,y mirror each other
    base(3, 0) = 0.5;
    CHECK(reconstruction_loss(base, view) == doctest::Approx(4.0));
}

TEST_CASE("reconstruction loss matches the double-loop oracle on random graphs") {
    for (std::uint64_t seed : {11ULL, 12ULL}) {
        SnapshotPair pair = random_pair(10, 3, 25, seed);
        GraphView view = GraphView::build(pair);
        Mat base = unit_rows(pair.total_entities(), 6, seed);
        double got = reconstruction_loss(base, view);
        double want = reference::reconstruction_loss(base, pair);
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("alignment loss edge cases") {
    Mat out = unit_rows(8, 4, 3);
    SUBCASE("empty batch scores 0") {
        CHECK(alignment_loss(out, 4, Batch{}, 1.0, 0.0) == 0.0);
    }
    SUBCASE("single pair has no negatives") {
        Batch b{{{0, 0}}};
        CHECK(alignment_loss(out, 4, b, 1.0, 0.0) == 0.0);
    }
    SUBCASE("shared target leaves no admissible negatives") {
        Batch b{{{0, 1}, {2, 1}}};
        CHECK(alignment_loss(out, 4, b, 1.0, 0.0) == 0.0);
    }
}

TEST_CASE("alignment loss hand values on an engineered two-pair batch") {
    // rows: a=(1,0), c=(0,1) on the kg1 side; b=(1,0), d=(0,1) on the kg2
    // side. sim(a,b)=1, sim(a,d)=0, sim(c,d)=1, sim(c,b)=0: both exponent
    // terms equal gamma*(lambda - 1 + 0).
    Mat out(4, 2);
    out(0, 0) = 1.0;
    out(1, 1) = 1.0;
    out(2, 0) = 1.0;
    out(3, 1) = 1.0;
    Batch batch{{{0, 0}, {1, 1}}}; // kg2 offset 2: rows 2 and 3

    SUBCASE("gamma=1 lambda=0: log(1 + 2 e^{-1})") {
        double want = std::log(1.0 + 2.0 * std::exp(-1.0));
        CHECK(alignment_loss(out, 2, batch, 1.0, 0.0) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("gamma=2 lambda=0.5: log(1 + 2 e^{-1})") {
        double want = std::log(1.0 + 2.0 * std::exp(2.0 * (0.5 - 1.0)));
        CHECK(alignment_loss(out, 2, batch, 2.0, 0.5) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("equal pos and neg similarity: log(1 + 2 e^0) = log 3") {
        Mat eq(4, 2);
        for (int r = 0; r < 4; ++r) eq(static_cast<std::size_t>(r), 0) = 1.0;
        CHECK(alignment_loss(eq, 2, batch, 1.0, 0.0) ==
              doctest::Approx(std::log(3.0)).epsilon(1e-12));
    }
}

TEST_CASE("alignment loss equals the reference on random batches and is order-invariant") {
    Mat out = unit_rows(24, 8, 21);
    Rng rng(5);
    for (int round = 0; round < 5; ++round) {
        Batch batch;
        std::size_t n = 2 + rng.index(8);
        for (std::size_t i = 0; i < n; ++i) {
            batch.pairs.emplace_back(static_cast<EntityId>(rng.index(12)),
                                     static_cast<EntityId>(rng.index(12)));
        }
        std::sort(batch.pairs.begin(), batch.pairs.end());
        batch.pairs.erase(std::unique(batch.pairs.begin(), batch.pairs.end()), batch.pairs.end());

        double got = alignment_loss(out, 12, batch, 4.0, 0.4);
        double want = reference::alignment_loss(out, 12, batch.pairs, 4.0, 0.4);
        CHECK(got == doctest::Approx(want).epsilon(1e-10));

        Batch shuffled = batch;
        rng.shuffle(shuffled.pairs);
        CHECK(alignment_loss(out, 12, shuffled, 4.0, 0.4) == got);
    }
}

TEST_CASE("alignment loss strictly increases in lambda for a nonempty batch") {
    Mat out = unit_rows(10, 6, 9);
    Batch batch{{{0, 0}, {1, 1}, {2, 2}}};
    double prev = alignment_loss(out, 5, batch, 3.0, 0.0);
    CHECK(prev > 0.0);
    for (double lambda : {0.2, 0.4, 0.8, 1.6}) {
        double cur = alignment_loss(out, 5, batch, 3.0, lambda);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("loss_initial composes align + alpha * reconstruct") {
    SnapshotPair pair = random_pair(8, 2, 16, 31);
    GraphView view = GraphView::build(pair);
    RunConfig config;
    config.dim = 6;
    config.proxy_count = 3;
    EncoderState state = init_parameters(pair, config, 7);
    EmbeddingMatrix emb = encode_all(state, pair);
    Batch batch{{{0, 0}, {1, 1}}};

    LossBreakdown l = loss_initial(emb.rows, state.base_emb, view, pair.entity_offset2(), batch,
                                   0.1, 15.0, 0.5);
    CHECK(l.total == doctest::Approx(l.align + 0.1 * l.reconstruct).epsilon(1e-15));
    LossBreakdown l0 = loss_initial(emb.rows, state.base_emb, view, pair.entity_offset2(), batch,
                                    0.0, 15.0, 0.5);
    CHECK(l0.total == doctest::Approx(l0.align).epsilon(1e-15));
}

TEST_CASE("loss_finetune composes align(ASA) + alpha * reconstruct + beta * align(TA)") {
    SnapshotPair pair = random_pair(8, 2, 16, 33);
    GraphView view = GraphView::build(pair);
    RunConfig config;
    config.dim = 6;
    config.proxy_count = 3;
    EncoderState state = init_parameters(pair, config, 8);
    EmbeddingMatrix emb = encode_all(state, pair);
    Batch asa{{{0, 0}, {1, 1}}};
    Batch ta{{{2, 2}, {3, 3}, {4, 4}}};

    LossBreakdown l = loss_finetune(emb.rows, state.base_emb, view, pair.entity_offset2(), asa, ta,
                                    0.1, 0.1, 15.0, 0.5);
    CHECK(l.total ==
          doctest::Approx(l.align + 0.1 * l.reconstruct + 0.1 * l.align_ta).epsilon(1e-15));

    // beta = 0 reduces to the initial-loss form on the ASA batch
    LossBreakdown nb = loss_finetune(emb.rows, state.base_emb, view, pair.entity_offset2(), asa, ta,
                                     0.1, 0.0, 15.0, 0.5);
    LossBreakdown li = loss_initial(emb.rows, state.base_emb, view, pair.entity_offset2(), asa, 0.1,
                                    15.0, 0.5);
    CHECK(nb.total == doctest::Approx(li.total).epsilon(1e-15));

    // both batches empty: total is alpha * reconstruction only
    LossBreakdown le = loss_finetune(emb.rows, state.base_emb, view, pair.entity_offset2(), Batch{},
                                     Batch{}, 0.1, 0.1, 15.0, 0.5);
    CHECK(le.total == doctest::Approx(0.1 * le.reconstruct).epsilon(1e-15));
}

TEST_CASE("fully frozen state yields a zero gradient structure") {
    SnapshotPair pair = random_pair(6, 2, 12, 41);
    GraphView view = GraphView::build(pair);
    RunConfig config;
    config.dim = 4;
    config.proxy_count = 2;
    EncoderState state = init_parameters(pair, config, 2);
    state.frozen.agg1 = true;
    state.frozen.rel_emb = true;
    state.frozen.proxies = true;
    state.frozen.proxy_proj = true;
    state.frozen.base_rows.assign(pair.total_entities(), 1);

    LossInputs in;
    in.view = &view;
    in.kg2_offset = pair.entity_offset2();
    in.batch = Batch{{{0, 0}, {1, 1}}};
    GradientResult res = gradient(LossKind::initial, state, in);
    auto all_zero = [](const Mat& m) {
        for (double v : m.data()) {
            if (v != 0.0) return false;
        }
        return true;
    };
    CHECK(all_zero(res.grads.base_emb));
    CHECK(all_zero(res.grads.rel_emb));
    CHECK(all_zero(res.grads.proxies));
    CHECK(all_zero(res.grads.proxy_proj));
    CHECK(all_zero(res.grads.inner_layers[0].weight));
    CHECK(all_zero(res.grads.inner_layers[1].weight));
}

TEST_CASE("non-finite gradients raise a numerical instability error naming the group") {
    SnapshotPair pair = random_pair(5, 2, 10, 61);
    GraphView view = GraphView::build(pair);
    RunConfig config;
    config.dim = 4;
    config.proxy_count = 2;
    EncoderState state = init_parameters(pair, config, 2);
    state.base_emb(0, 0) = std::numeric_limits<double>::infinity();

    LossInputs in;
    in.view = &view;
    in.kg2_offset = pair.entity_offset2();
    try {
        gradient(LossKind::reconstruction, state, in);
        FAIL("expected numerical instability error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("numerical instability error") != std::string::npos);
        CHECK(msg.find("base_emb") != std::string::npos);
    }
}

TEST_CASE("reconstruction gradient: hand case gives 2(e - n)") {
    // e's only neighbor is n; n's residual is zero because its two
    // neighbors average to exactly n, and x's term does not involve e.
    SnapshotPair pair;
    pair.kg1 = graph_from({{"e", "r", "n"}, {"n", "r", "x"}});
    pair.kg2 = graph_from({{"p", "s", "q"}});
    GraphView view = GraphView::build(pair);

    RunConfig config;
    config.dim = 2;
    config.proxy_count = 2;
    EncoderState state = init_parameters(pair, config, 3);
    // e=(1,0), n=(0,1), x = 2n - e = (-1,2) so mean(e,x) = n
    state.base_emb(0, 0) = 1.0;
    state.base_emb(0, 1) = 0.0;
    state.base_emb(1, 0) = 0.0;
    state.base_emb(1, 1) = 1.0;
    state.base_emb(2, 0) = -1.0;
    state.base_emb(2, 1) = 2.0;

    LossInputs in;
    in.view = &view;
    in.kg2_offset = pair.entity_offset2();
    GradientResult res = gradient(LossKind::reconstruction, state, in);
    CHECK(res.grads.base_emb(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.grads.base_emb(0, 1) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences on a d=8 toy") {
    // 6 entities across the pair, d=8, every loss kind
    SnapshotPair pair;
    pair.kg1 = graph_from({{"a", "r", "b"}, {"b", "q", "c"}, {"c", "r", "a"}});
    pair.kg2 = graph_from({{"x", "s", "y"}, {"y", "s", "z"}, {"z", "u", "x"}});
    GraphView view = GraphView::build(pair);

    RunConfig config;
    config.dim = 8;
    config.proxy_count = 3;
    EncoderState state = init_parameters(pair, config, 19);

    LossInputs in;
    in.view = &view;
    in.kg2_offset = pair.entity_offset2();
    in.batch = Batch{{{0, 0}, {1, 2}}};
    in.ta_batch = Batch{{{2, 1}, {0, 2}}};
    in.alpha = 0.1;
    in.beta = 0.1;
    in.gamma = 2.0;
    in.lambda = 0.5;

    auto check_kind = [&](LossKind kind) {
        GradientResult analytic = gradient(kind, state, in);
        auto loss_of = [&](const EncoderState& s) {
            switch (kind) {
                case LossKind::reconstruction:
                    return reconstruction_loss(s.base_emb, view);
                case LossKind::alignment: {
                    EmbeddingMatrix emb = encode_all(s, pair);
                    return alignment_loss(emb.rows, in.kg2_offset, in.batch, in.gamma, in.lambda);
                }
                case LossKind::initial: {
                    EmbeddingMatrix emb = encode_all(s, pair);
                    return loss_initial(emb.rows, s.base_emb, view, in.kg2_offset, in.batch,
                                        in.alpha, in.gamma, in.lambda)
                        .total;
                }
                case LossKind::finetune: {
                    EmbeddingMatrix emb = encode_all(s, pair);
                    return loss_finetune(emb.rows, s.base_emb, view, in.kg2_offset, in.batch,
                                         in.ta_batch, in.alpha, in.beta, in.gamma, in.lambda)
                        .total;
                }
            }
            return 0.0;
        };
        EncoderGradients fd = reference::finite_difference_gradient(state, loss_of, 1e-5);
        double err = reference::max_relative_error(analytic.grads, fd);
        CAPTURE(static_cast<int>(kind));
        CHECK(err <= 1e-4);
    };

    check_kind(LossKind::reconstruction);
    check_kind(LossKind::alignment);
    check_kind(LossKind::initial);
    check_kind(LossKind::finetune);
}

TEST_CASE("gradient check also passes at d=4") {
    SnapshotPair pair = random_pair(5, 2, 10, 55);
    GraphView view = GraphView::build(pair);
    RunConfig config;
    config.dim = 4;
    config.proxy_count = 2;
    EncoderState state = init_parameters(pair, config, 23);

    LossInputs in;
    in.view = &view;
    in.kg2_offset = pair.entity_offset2();
    in.batch = Batch{{{0, 0}, {1, 1}, {2, 3}}};
    in.gamma = 3.0;
    in.lambda = 0.3;
    in.alpha = 0.2;

    GradientResult analytic = gradient(LossKind::initial, state, in);
    EncoderGradients fd = reference::finite_difference_gradient(
        state,
        [&](const EncoderState& s) {
            EmbeddingMatrix emb = encode_all(s, pair);
            return loss_initial(emb.rows, s.base_emb, view, in.kg2_offset, in.batch, in.alpha,
                                in.gamma, in.lambda)
                .total;
        },
        1e-5);
    CHECK(reference::max_relative_error(analytic.grads, fd) <= 1e-4);
}
