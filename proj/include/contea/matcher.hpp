#pragma once
#include <cstdint>
#include <vector>

#include "contea/kg_store.hpp"
#include "contea/matrix.hpp"

namespace contea {

enum class MetricKind { cosine, csls };

struct SimilarityMetric {
    MetricKind kind = MetricKind::cosine;
    int csls_k = 10; // only used for csls; must satisfy 1 <= k < candidate count
};

struct ScoredPair {
    EntityId e1;
    EntityId e2;
    double score;
    int found_at = 0;
    auto operator<=>(const ScoredPair&) const = default;
};

// Predicted alignment surviving the mutual-nearest test. Conflict-free after
// integration: no entity appears in two pairs.
struct TrustworthyAlignment {
    std::vector<ScoredPair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool conflict_free() const;
    void sort_canonical(); // by (e1, e2)
};

// Dense similarity matrix between the rows of a and the rows of b.
// cosine: inner product over normalized rows (zero rows are an error).
// csls: 2*cos(i,j) - mean cos of row i to its k nearest rows of b
//                  - mean cos of row j to its k nearest rows of a.
Mat similarity(const Mat& emb_a, const Mat& emb_b, const SimilarityMetric& metric);

// Mutual-argmax search: (i, j) is kept iff j is i's best column and i is
// j's best row; ties break toward the lowest index. e1/e2 in the result are
// row indices of emb_a / emb_b.
TrustworthyAlignment bidirectional_search(const Mat& emb_a, const Mat& emb_b,
                                          const SimilarityMetric& metric, int found_at = 0);

// Merges the previous alignment with newly found pairs: identical pairs are
// kept once, conflicting pairs resolve to the higher score (older pair wins
// ties), losers are dropped entirely. Both inputs must be conflict-free.
TrustworthyAlignment integrate_alignment(const TrustworthyAlignment& old_ta,
                                         const TrustworthyAlignment& new_ta,
                                         const GrowthDelta& delta);

} // namespace contea
