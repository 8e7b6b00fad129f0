#pragma once
#include <filesystem>
#include <optional>
#include <vector>

#include "contea/config.hpp"
#include "contea/encoder.hpp"
#include "contea/kg_store.hpp"
#include "contea/matcher.hpp"
#include "contea/objectives.hpp"

namespace contea {

struct EpochRecord {
    int epoch = 0;            // 0 = pre-training evaluation
    double total = 0.0;       // mean over the epoch's batches
    double align = 0.0;
    double reconstruct = 0.0;
    std::optional<double> val_f1; // present on evaluation epochs
};

struct TrainedModel {
    EncoderState state;
    std::vector<EpochRecord> history; // never empty; entry 0 is the initial loss
    int stopped_epoch = 0;
    double wall_time_s = 0.0;
};

// Initial training at t=0: every parameter group learns, Adam updates,
// early stop on the validation F1 of bidirectional search restricted to the
// validation pairs. Returns the best-validation state.
TrainedModel train_initial(const SnapshotPair& pair, const AlignmentSets& aligns,
                           const RunConfig& config);

// Finetuning at t>0: inner aggregator layers, relation embeddings and old
// base rows stay frozen; proxies, the projection and new base rows learn.
// New entities start from init_new_entities. Optimizes the finetuning loss
// over affected seeds + replayed trustworthy pairs.
TrainedModel finetune(const TrainedModel& prev, const SnapshotPair& pair_next,
                      const GrowthDelta& delta, const std::vector<AlignPair>& asa,
                      const std::vector<ScoredPair>& ta_top, const std::vector<AlignPair>& valid,
                      const RunConfig& config);

// F1 of bidirectional search restricted to the given pairs (the early-stop
// score). Uses CSLS with k clamped to the candidate count, falling back to
// cosine for tiny sets.
double validation_f1(const EncoderState& state, const SnapshotPair& pair,
                     const std::vector<AlignPair>& pairs, const RunConfig& config);

// epoch,total_loss,align_loss,reconstruct_loss,val_f1 (val_f1 blank between
// evaluations)
void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

} // namespace contea
