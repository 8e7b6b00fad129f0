#pragma once
#include <filesystem>
#include <vector>

#include "contea/config.hpp"
#include "contea/encoder.hpp"
#include "contea/evalkit.hpp"
#include "contea/kg_store.hpp"
#include "contea/matcher.hpp"

namespace contea {

// Seed pairs whose anchor participates (as head or tail) in a newly added
// triple of its KG.
std::vector<AlignPair> select_affected_seeds(const std::vector<AlignPair>& seeds,
                                             const GrowthDelta& delta);

// The m highest-score pairs; ties break by (score desc, e1 asc, e2 asc).
std::vector<ScoredPair> select_top_ta(const TrustworthyAlignment& ta, int m);

// Mutual-nearest search over the full entity sets minus the anchor entities
// (seed and validation pairs are already known alignment, so they are not
// search candidates). Resulting pair ids are kg-local entity ids.
TrustworthyAlignment search_alignment(const EmbeddingMatrix& emb, const SnapshotPair& pair,
                                      const AlignmentSets& aligns, const RunConfig& config,
                                      int found_at);

// Runs the continual pipeline across the snapshot directories in the
// configured mode: t=0 trains the encoder and predicts the first alignment;
// each later snapshot incorporates new entities, finetunes (mode-dependent),
// searches, and integrates predictions. When out_dir is non-empty, writes
// per-snapshot checkpoints, history CSVs, alignment exports, the metrics
// and growth CSVs, and a manifest.
RunRecord run_pipeline(const std::vector<std::filesystem::path>& snapshot_dirs,
                       const RunConfig& config, const std::filesystem::path& out_dir = {});

// Alignment export, one "entity1\tentity2\tscore\tfound_at" row per pair.
void write_alignment_tsv(const TrustworthyAlignment& ta, const SnapshotPair& pair,
                         const std::filesystem::path& path);

} // namespace contea
