#pragma once
#include <cstddef>
#include <vector>

#include "contea/encoder.hpp"
#include "contea/kg_store.hpp"
#include "contea/matrix.hpp"

namespace contea {

// A mini-batch of alignment pairs. Negatives are implicit: for each pair,
// every other target entity in the batch with a different id.
struct Batch {
    std::vector<AlignPair> pairs;
};

struct LossBreakdown {
    double align = 0.0;       // alignment loss over the (ASA) batch
    double reconstruct = 0.0; // neighborhood reconstruction loss (unweighted)
    double align_ta = 0.0;    // alignment loss over the replayed TA batch
    double total = 0.0;       // align + alpha * reconstruct + beta * align_ta
};

// Sum over entities of the squared distance between the base embedding and
// the mean of its distinct one-hop neighbors; isolated entities contribute 0.
double reconstruction_loss(const Mat& base_emb, const GraphView& view);

// LogSumExp margin loss over encoder outputs with in-batch negatives:
// log[1 + sum exp(gamma * (lambda - sim(e1,e2) + sim(e1,e2')))], cosine
// similarity. Batches of fewer than two distinct targets score 0.
double alignment_loss(const Mat& encoder_out, std::size_t kg2_offset, const Batch& batch,
                      double gamma, double lambda);

LossBreakdown loss_initial(const Mat& encoder_out, const Mat& base_emb, const GraphView& view,
                           std::size_t kg2_offset, const Batch& batch, double alpha, double gamma,
                           double lambda);

// Finetuning loss: alignment over affected seeds + alpha * reconstruction
// + beta * alignment over replayed trustworthy pairs. Logs a
// "no finetuning signal" warning when both batches are empty.
LossBreakdown loss_finetune(const Mat& encoder_out, const Mat& base_emb, const GraphView& view,
                            std::size_t kg2_offset, const Batch& asa_batch, const Batch& ta_batch,
                            double alpha, double beta, double gamma, double lambda);

enum class LossKind { reconstruction, alignment, initial, finetune };

struct LossInputs {
    const GraphView* view = nullptr;
    std::size_t kg2_offset = 0;
    Batch batch;      // alignment batch; ASA when kind == finetune
    Batch ta_batch;   // only used when kind == finetune
    double alpha = 0.1;
    double beta = 0.1;
    double gamma = 15.0;
    double lambda = 0.5;
};

struct GradientResult {
    EncoderGradients grads;
    LossBreakdown loss;
};

// Exact analytic gradients of the requested loss with respect to every
// unfrozen parameter group; frozen groups come back zero. Throws
// "numerical instability error" naming the group on non-finite values.
GradientResult gradient(LossKind kind, const EncoderState& state, const LossInputs& inputs);

} // namespace contea
