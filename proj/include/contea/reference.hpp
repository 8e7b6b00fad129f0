#pragma once
#include <functional>
#include <vector>

#include "contea/encoder.hpp"
#include "contea/kg_store.hpp"
#include "contea/matcher.hpp"
#include "contea/matrix.hpp"
#include "contea/objectives.hpp"

// Serial reference implementations. Each is a deliberately naive,
// straight-line rewrite of the corresponding production kernel, kept
// independent of the production code paths so the two can be checked
// against each other (tests) and timed against each other (benchmark).
namespace contea::reference {

// Straight-line evaluation of the two-stage encoder for every entity.
Mat encode_all(const EncoderState& state, const SnapshotPair& pair);

// Triple-loop similarity matrices with explicit norm division.
Mat cosine(const Mat& emb_a, const Mat& emb_b);
Mat csls(const Mat& emb_a, const Mat& emb_b, int k);

// O(n^2) mutual-argmax scan.
std::vector<ScoredPair> bidirectional_search(const Mat& emb_a, const Mat& emb_b,
                                             const SimilarityMetric& metric);

// Double-loop reconstruction objective over distinct one-hop neighbors.
double reconstruction_loss(const Mat& base_emb, const SnapshotPair& pair);

// Direct evaluation of the in-batch LogSumExp alignment loss.
double alignment_loss(const Mat& encoder_out, std::size_t kg2_offset,
                      const std::vector<AlignPair>& batch, double gamma, double lambda);

// Repeated global-max conflict resolution (keep max score, ties to the
// older set, drop losers).
std::vector<ScoredPair> integrate(const std::vector<ScoredPair>& old_pairs,
                                  const std::vector<ScoredPair>& new_pairs);

// Linear scan over the full triple set.
std::vector<NeighborEdge> neighbors(const KnowledgeGraph& kg, EntityId e);

// Scan of every seed pair against every new triple.
std::vector<AlignPair> affected_seeds(const std::vector<AlignPair>& seeds,
                                      const GrowthDelta& delta);

// Central finite differences of an arbitrary loss over every parameter of
// the state (the mask is ignored; pass an unfrozen state).
EncoderGradients finite_difference_gradient(EncoderState state,
                                            const std::function<double(const EncoderState&)>& loss,
                                            double h);

// Largest elementwise relative error between two gradient structures; the
// denominator is floored to keep near-zero entries meaningful.
double max_relative_error(const EncoderGradients& a, const EncoderGradients& b,
                          double denom_floor = 1e-6);

} // namespace contea::reference
