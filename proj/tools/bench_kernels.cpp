// Benchmark of the OpenMP kernels against the serial reference
// implementations: encoder forward, CSLS similarity, and bidirectional
// search. Also cross-checks that both paths agree, so a run doubles as a
// smoke test.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "contea/encoder.hpp"
#include "contea/kg_store.hpp"
#include "contea/matcher.hpp"
#include "contea/reference.hpp"
#include "contea/rng.hpp"

using namespace contea;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

KnowledgeGraph random_graph(int n_entities, int n_relations, int n_triples, Rng& rng,
                            const char* prefix) {
    KnowledgeGraph kg;
    for (int i = 0; i < n_triples; ++i) {
        int h = static_cast<int>(rng.index(static_cast<std::size_t>(n_entities)));
        int t = static_cast<int>(rng.index(static_cast<std::size_t>(n_entities)));
        if (h == t) t = (t + 1) % n_entities;
        int r = static_cast<int>(rng.index(static_cast<std::size_t>(n_relations)));
        kg.add_triple(prefix + std::to_string(h), "r" + std::to_string(r),
                      prefix + std::to_string(t));
    }
    kg.finalize();
    return kg;
}

Mat random_unit_rows(std::size_t rows, std::size_t cols, Rng& rng) {
    Mat m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
        normalize_row(m.row(r), cols);
    }
    return m;
}

double max_abs_diff(const Mat& a, const Mat& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

int read_arg(int argc, char** argv, const char* name, int fallback) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == name) return std::atoi(argv[i + 1]);
    }
    return fallback;
}

} // namespace

int main(int argc, char** argv) {
    int n_entities = read_arg(argc, argv, "--entities", 400);
    int dim = read_arg(argc, argv, "--dim", 100);
    int repeat = read_arg(argc, argv, "--repeat", 3);
    int threads = read_arg(argc, argv, "--threads", 0);
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
    std::printf("openmp threads: %d\n", threads > 0 ? threads : omp_get_max_threads());
#else
    (void)threads;
    std::printf("built without openmp (serial)\n");
#endif

    Rng rng(7);
    SnapshotPair pair;
    pair.kg1 = random_graph(n_entities, 16, n_entities * 4, rng, "a");
    pair.kg2 = random_graph(n_entities, 16, n_entities * 4, rng, "b");

    RunConfig config;
    config.dim = dim;
    config.proxy_count = 64;
    EncoderState state = init_parameters(pair, config, 11);

    std::printf("%-22s %12s %12s %9s %12s\n", "kernel", "parallel ms", "serial ms", "speedup",
                "max |diff|");

    auto report = [&](const char* name, double par_s, double ser_s, double diff) {
        std::printf("%-22s %12.2f %12.2f %8.2fx %12.3e\n", name, par_s * 1e3, ser_s * 1e3,
                    ser_s / par_s, diff);
    };

    {
        double t0 = now_seconds();
        EmbeddingMatrix emb;
        for (int i = 0; i < repeat; ++i) emb = encode_all(state, pair);
        double par = (now_seconds() - t0) / repeat;

        t0 = now_seconds();
        Mat ref;
        for (int i = 0; i < repeat; ++i) ref = reference::encode_all(state, pair);
        double ser = (now_seconds() - t0) / repeat;
        report("encode_all", par, ser, max_abs_diff(emb.rows, ref));
    }

    Mat a = random_unit_rows(static_cast<std::size_t>(n_entities), static_cast<std::size_t>(dim), rng);
    Mat b = random_unit_rows(static_cast<std::size_t>(n_entities) + 20, static_cast<std::size_t>(dim), rng);

    {
        SimilarityMetric metric{MetricKind::csls, 10};
        double t0 = now_seconds();
        Mat s;
        for (int i = 0; i < repeat; ++i) s = similarity(a, b, metric);
        double par = (now_seconds() - t0) / repeat;

        t0 = now_seconds();
        Mat ref;
        for (int i = 0; i < repeat; ++i) ref = reference::csls(a, b, 10);
        double ser = (now_seconds() - t0) / repeat;
        report("similarity (csls)", par, ser, max_abs_diff(s, ref));
    }

    {
        SimilarityMetric metric{MetricKind::cosine, 0};
        double t0 = now_seconds();
        TrustworthyAlignment ta;
        for (int i = 0; i < repeat; ++i) ta = bidirectional_search(a, b, metric);
        double par = (now_seconds() - t0) / repeat;

        t0 = now_seconds();
        std::vector<ScoredPair> ref;
        for (int i = 0; i < repeat; ++i) ref = reference::bidirectional_search(a, b, metric);
        double ser = (now_seconds() - t0) / repeat;

        double diff = ta.pairs.size() == ref.size() ? 0.0 : 1.0;
        if (diff == 0.0) {
            TrustworthyAlignment sorted = ta;
            sorted.sort_canonical();
            for (std::size_t i = 0; i < ref.size(); ++i) {
                if (sorted.pairs[i].e1 != ref[i].e1 || sorted.pairs[i].e2 != ref[i].e2) diff = 1.0;
            }
        }
        report("bidirectional_search", par, ser, diff);
        std::printf("%-22s %zu mutual pairs\n", "", ta.pairs.size());
    }

    return 0;
}
