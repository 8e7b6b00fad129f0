#include "contea/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "contea/error.hpp"

namespace contea {

bool TrustworthyAlignment::conflict_free() const {
    std::unordered_set<EntityId> left, right;
    for (const ScoredPair& p : pairs) {
        if (!left.insert(p.e1).second) return false;
        if (!right.insert(p.e2).second) return false;
    }
    return true;
}

void TrustworthyAlignment::sort_canonical() {
    std::sort(pairs.begin(), pairs.end(), [](const ScoredPair& a, const ScoredPair& b) {
        return std::tie(a.e1, a.e2) < std::tie(b.e1, b.e2);
    });
}

namespace {

// Row-normalized copy; throws on zero rows (cosine undefined).
Mat normalized_or_throw(const Mat& m, const char* which) {
    Mat out = m;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        if (!normalize_row(out.row(r), out.cols())) {
            throw Error(std::string("degenerate vector error: zero row ") + std::to_string(r) +
                        " in " + which);
        }
    }
    return out;
}

Mat cosine_matrix(const Mat& a, const Mat& b) {
    Mat s(a.rows(), b.rows());
    const std::size_t d = a.cols();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(a.rows()); ++i) {
        const double* ra = a.row(static_cast<std::size_t>(i));
        double* srow = s.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < b.rows(); ++j) {
            srow[j] = dot(ra, b.row(j), d);
        }
    }
    return s;
}

// Mean of the k largest values of a row (k < row length).
double mean_top_k(const double* row, std::size_t n, std::size_t k, std::vector<double>& scratch) {
    scratch.assign(row, row + n);
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     scratch.end(), std::greater<double>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += scratch[i];
    return sum / static_cast<double>(k);
}

} // namespace

Mat similarity(const Mat& emb_a, const Mat& emb_b, const SimilarityMetric& metric) {
    if (emb_a.rows() == 0 || emb_b.rows() == 0) {
        throw Error("precondition violated error: similarity needs non-empty embeddings");
    }
    if (emb_a.cols() != emb_b.cols()) {
        throw Error("precondition violated error: similarity dimension mismatch");
    }
    Mat a = normalized_or_throw(emb_a, "emb_a");
    Mat b = normalized_or_throw(emb_b, "emb_b");
    Mat cos = cosine_matrix(a, b);
    if (metric.kind == MetricKind::cosine) return cos;

    const std::size_t na = cos.rows();
    const std::size_t nb = cos.cols();
    const std::size_t k = static_cast<std::size_t>(metric.csls_k);
    if (metric.csls_k < 1 || k >= nb || k >= na) {
        throw Error("precondition violated error: csls_k must be in [1, candidate count)");
    }

    // Hubness penalties: mean similarity to the k nearest cross-set rows.
    std::vector<double> r_b(na); // for each a-row, over columns
    std::vector<double> r_a(nb); // for each b-row, over rows
#pragma omp parallel
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(na); ++i) {
            r_b[static_cast<std::size_t>(i)] =
                mean_top_k(cos.row(static_cast<std::size_t>(i)), nb, k, scratch);
        }
#pragma omp for schedule(static)
        for (std::int64_t j = 0; j < static_cast<std::int64_t>(nb); ++j) {
            std::vector<double>& col = scratch;
            col.resize(na);
            for (std::size_t i = 0; i < na; ++i) col[i] = cos(i, static_cast<std::size_t>(j));
            std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(k - 1),
                             col.end(), std::greater<double>());
            double sum = 0.0;
            for (std::size_t i = 0; i < k; ++i) sum += col[i];
            r_a[static_cast<std::size_t>(j)] = sum / static_cast<double>(k);
        }
    }

    Mat s(na, nb);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(na); ++i) {
        std::size_t ii = static_cast<std::size_t>(i);
        const double* crow = cos.row(ii);
        double* srow = s.row(ii);
        for (std::size_t j = 0; j < nb; ++j) {
            srow[j] = 2.0 * crow[j] - r_b[ii] - r_a[j];
        }
    }
    return s;
}

TrustworthyAlignment bidirectional_search(const Mat& emb_a, const Mat& emb_b,
                                          const SimilarityMetric& metric, int found_at) {
    Mat s = similarity(emb_a, emb_b, metric);
    const std::size_t na = s.rows();
    const std::size_t nb = s.cols();

    std::vector<std::size_t> best_col(na);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(na); ++i) {
        const double* row = s.row(static_cast<std::size_t>(i));
        std::size_t best = 0;
        for (std::size_t j = 1; j < nb; ++j) {
            if (row[j] > row[best]) best = j; // ties keep the lowest index
        }
        best_col[static_cast<std::size_t>(i)] = best;
    }

    std::vector<std::size_t> best_row(nb);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(nb); ++j) {
        std::size_t jj = static_cast<std::size_t>(j);
        std::size_t best = 0;
        for (std::size_t i = 1; i < na; ++i) {
            if (s(i, jj) > s(best, jj)) best = i;
        }
        best_row[jj] = best;
    }

    TrustworthyAlignment ta;
    for (std::size_t i = 0; i < na; ++i) {
        std::size_t j = best_col[i];
        if (best_row[j] == i) {
            ta.pairs.push_back({static_cast<EntityId>(i), static_cast<EntityId>(j), s(i, j),
                                found_at});
        }
    }
    return ta;
}

TrustworthyAlignment integrate_alignment(const TrustworthyAlignment& old_ta,
                                         const TrustworthyAlignment& new_ta,
                                         const GrowthDelta& delta) {
    (void)delta; // pairs between two new entities cannot conflict with old
                 // pairs (old pairs contain only old entities), so the
                 // keep-new-new rule falls out of score resolution
    if (!old_ta.conflict_free() || !new_ta.conflict_free()) {
        throw Error("precondition violated error: integrate_alignment inputs must be conflict-free");
    }

    struct Candidate {
        ScoredPair pair;
        int origin; // 0 = old, 1 = new; older wins score ties
    };
    std::vector<Candidate> all;
    all.reserve(old_ta.size() + new_ta.size());
    for (const ScoredPair& p : old_ta.pairs) all.push_back({p, 0});
    for (const ScoredPair& p : new_ta.pairs) all.push_back({p, 1});

    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        if (a.pair.score != b.pair.score) return a.pair.score > b.pair.score;
        if (a.origin != b.origin) return a.origin < b.origin;
        return std::tie(a.pair.e1, a.pair.e2) < std::tie(b.pair.e1, b.pair.e2);
    });

    TrustworthyAlignment out;
    std::unordered_set<EntityId> taken1, taken2;
    std::unordered_set<std::uint64_t> kept_pairs;
    for (const Candidate& c : all) {
        std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.pair.e1)) << 32) |
                            static_cast<std::uint32_t>(c.pair.e2);
        if (kept_pairs.contains(key)) continue; // same alignment found in both sets
        if (taken1.contains(c.pair.e1) || taken2.contains(c.pair.e2)) continue;
        taken1.insert(c.pair.e1);
        taken2.insert(c.pair.e2);
        kept_pairs.insert(key);
        out.pairs.push_back(c.pair);
    }
    out.sort_canonical();
    return out;
}

} // namespace contea
