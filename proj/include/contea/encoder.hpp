#pragma once
#include <cstdint>
#include <filesystem>
#include <vector>

#include "contea/config.hpp"
#include "contea/kg_store.hpp"
#include "contea/matrix.hpp"

namespace contea {

struct AggregatorLayer {
    Mat weight;               // d x d
    std::vector<double> bias; // d
};

// Which parameter groups are excluded from gradients/updates. Base rows can
// be frozen individually (old entities stay fixed during finetuning while
// new entities learn).
struct FrozenMask {
    bool agg1 = false;
    bool rel_emb = false;
    bool proxies = false;
    bool proxy_proj = false;
    std::vector<std::uint8_t> base_rows; // empty means no base row frozen

    bool base_row_frozen(std::size_t row) const {
        return row < base_rows.size() && base_rows[row] != 0;
    }
    bool any_base_frozen() const {
        for (auto f : base_rows) {
            if (f) return true;
        }
        return false;
    }
};

// All learnable parameters of the subgraph encoder over one snapshot pair.
// base_emb rows use the pair's shared dense id space (kg2 offset by |E1|),
// rel_emb likewise. proxies rows are kept unit-L2-normalized after every
// optimizer update.
struct EncoderState {
    Mat base_emb;                  // (|E1|+|E2|) x d
    Mat rel_emb;                   // (|R1|+|R2|) x d
    std::vector<AggregatorLayer> inner_layers; // 2 layers
    Mat proxies;                   // K x d
    Mat proxy_proj;                // d x 2d, maps [inner ; proxy context] -> output
    FrozenMask frozen;

    std::size_t dim() const { return base_emb.cols(); }
    std::size_t proxy_count() const { return proxies.rows(); }
    bool all_finite() const;
};

struct EmbeddingMatrix {
    Mat rows;         // one unit-norm d-vector per entity (shared id space)
    int source_t = 0; // timestamp of the state that produced it
};

// Pair-wide adjacency in the shared id space, plus the deduplicated one-hop
// neighbor lists used by the reconstruction objective and inductive
// initialization. Immutable once built; safe to share across threads.
struct GraphView {
    std::size_t n_entities = 0;
    std::size_t n_relations = 0;
    std::vector<std::vector<NeighborEdge>> adj;       // global rel/neighbor ids
    std::vector<std::vector<EntityId>> recon_neighbors; // distinct one-hop entities, sorted

    static GraphView build(const SnapshotPair& pair);
};

// Per-entity intermediates of one encode pass, kept for the backward pass.
struct ForwardCache {
    Mat rel_gates;  // sigma(rel_emb), (|R1|+|R2|) x d
    Mat mean0;      // N x d, stage-1 layer-0 gated mean
    Mat hidden1;    // N x d, tanh output of layer 0
    Mat mean1;      // N x d
    Mat hidden2;    // N x d, tanh output of layer 1
    Mat attn;       // N x K, proxy attention weights
    Mat context;    // N x d, attention-weighted proxy mix
    Mat pre_norm;   // N x d, projector output before normalization
    std::vector<double> norms; // N
    Mat out;        // N x d, unit rows
};

// Gradients mirroring EncoderState group for group.
struct EncoderGradients {
    Mat base_emb;
    Mat rel_emb;
    std::vector<AggregatorLayer> inner_layers;
    Mat proxies;
    Mat proxy_proj;

    static EncoderGradients zeros_like(const EncoderState& state);
    bool all_finite_or_name(const char** bad_group) const;
};

// Deterministic parameter initialization for a snapshot pair: embeddings
// uniform in [-1/sqrt(d), 1/sqrt(d)] then row-normalized, aggregator
// weights identity-plus-noise.
EncoderState init_parameters(const SnapshotPair& pair, const RunConfig& config, std::uint64_t seed);

// Full forward pass over every entity of the pair; rows of the result are
// unit-norm. Per-entity work is independent, so the pass parallelizes
// without changing results.
EmbeddingMatrix encode_all(const EncoderState& state, const SnapshotPair& pair);

// Forward with intermediates retained (training path).
void encode_forward(const EncoderState& state, const GraphView& view, ForwardCache& cache);

// Accumulates d(loss)/d(parameters) into grads given d(loss)/d(out).
// Skips accumulation for groups frozen in state.frozen.
void encoder_backward(const EncoderState& state, const GraphView& view, const ForwardCache& cache,
                      const Mat& d_out, EncoderGradients& grads);

// Builds the state for the next snapshot from a trained state: old rows are
// carried over bit-exactly (via the delta's id remaps) and each new entity
// starts from the mean of its seen neighbors' base embeddings, falling back
// to the two-hop seen frontier and then to a seeded random row.
EncoderState init_new_entities(const EncoderState& state, const SnapshotPair& pair_next,
                               const GrowthDelta& delta, const RunConfig& config);

// Versioned binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const EncoderState& state, const std::filesystem::path& path);
EncoderState load_checkpoint(const std::filesystem::path& path);

} // namespace contea
