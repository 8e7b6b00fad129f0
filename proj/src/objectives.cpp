#include "contea/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "contea/error.hpp"
#include "contea/log.hpp"

namespace contea {

namespace {

// Per-entity residual against the mean of its distinct neighbors; zero for
// isolated entities.
void reconstruction_residuals(const Mat& base_emb, const GraphView& view, Mat& residuals) {
    const std::size_t d = base_emb.cols();
#pragma omp parallel for schedule(static)
    for (std::int64_t ei = 0; ei < static_cast<std::int64_t>(view.n_entities); ++ei) {
        std::size_t e = static_cast<std::size_t>(ei);
        const auto& nbrs = view.recon_neighbors[e];
        double* res = residuals.row(e);
        if (nbrs.empty()) {
            std::fill(res, res + d, 0.0);
            continue;
        }
        std::copy_n(base_emb.row(e), d, res);
        double inv = 1.0 / static_cast<double>(nbrs.size());
        for (EntityId u : nbrs) {
            const double* nb = base_emb.row(static_cast<std::size_t>(u));
            for (std::size_t c = 0; c < d; ++c) res[c] -= nb[c] * inv;
        }
    }
}

// Shared core of the alignment loss: value plus, when d_out is non-null,
// gradient accumulation scaled by grad_scale. Pairs are summed in sorted
// order so batch permutations cannot change the result.
double alignment_core(const Mat& out, std::size_t kg2_offset, const Batch& batch, double gamma,
                      double lambda, double grad_scale, Mat* d_out) {
    std::vector<AlignPair> pairs = batch.pairs;
    std::sort(pairs.begin(), pairs.end());
    const std::size_t b = pairs.size();
    const std::size_t d = out.cols();
    if (b < 2) return 0.0;

    std::vector<std::size_t> row1(b), row2(b);
    for (std::size_t p = 0; p < b; ++p) {
        row1[p] = static_cast<std::size_t>(pairs[p].first);
        row2[p] = kg2_offset + static_cast<std::size_t>(pairs[p].second);
    }

    // sims[p*b + q] = sim(e1_p, e2_q)
    std::vector<double> sims(b * b);
#pragma omp parallel for schedule(static)
    for (std::int64_t pi = 0; pi < static_cast<std::int64_t>(b); ++pi) {
        std::size_t p = static_cast<std::size_t>(pi);
        const double* a = out.row(row1[p]);
        for (std::size_t q = 0; q < b; ++q) {
            sims[p * b + q] = dot(a, out.row(row2[q]), d);
        }
    }

    double max_term = 0.0; // the constant 1 = exp(0) participates in the max
    bool any = false;
    for (std::size_t p = 0; p < b; ++p) {
        for (std::size_t q = 0; q < b; ++q) {
            if (pairs[q].second == pairs[p].second) continue;
            double x = gamma * (lambda - sims[p * b + p] + sims[p * b + q]);
            max_term = std::max(max_term, x);
            any = true;
        }
    }
    if (!any) return 0.0;

    double denom = std::exp(-max_term);
    for (std::size_t p = 0; p < b; ++p) {
        for (std::size_t q = 0; q < b; ++q) {
            if (pairs[q].second == pairs[p].second) continue;
            double x = gamma * (lambda - sims[p * b + p] + sims[p * b + q]);
            denom += std::exp(x - max_term);
        }
    }
    double loss = max_term + std::log(denom);

    if (d_out != nullptr) {
        double inv_denom = 1.0 / denom;
        for (std::size_t p = 0; p < b; ++p) {
            double weight_sum = 0.0;
            const double* o1 = out.row(row1[p]);
            for (std::size_t q = 0; q < b; ++q) {
                if (pairs[q].second == pairs[p].second) continue;
                double x = gamma * (lambda - sims[p * b + p] + sims[p * b + q]);
                double w = std::exp(x - max_term) * inv_denom;
                weight_sum += w;
                double coeff = grad_scale * gamma * w; // d loss / d sim(e1_p, e2_q)
                axpy(coeff, out.row(row2[q]), d_out->row(row1[p]), d);
                axpy(coeff, o1, d_out->row(row2[q]), d);
            }
            double coeff_pos = -grad_scale * gamma * weight_sum;
            axpy(coeff_pos, out.row(row2[p]), d_out->row(row1[p]), d);
            axpy(coeff_pos, o1, d_out->row(row2[p]), d);
        }
    }
    return loss;
}

// d(reconstruction)/d(base): gathers both the entity's own residual and its
// appearances in neighbors' means (the neighbor relation is symmetric).
void reconstruction_gradient(const Mat& base_emb, const GraphView& view, double scale,
                             Mat& d_base) {
    const std::size_t d = base_emb.cols();
    Mat residuals(view.n_entities, d);
    reconstruction_residuals(base_emb, view, residuals);

#pragma omp parallel for schedule(static)
    for (std::int64_t ei = 0; ei < static_cast<std::int64_t>(view.n_entities); ++ei) {
        std::size_t e = static_cast<std::size_t>(ei);
        double* gb = d_base.row(e);
        const auto& own = view.recon_neighbors[e];
        if (!own.empty()) {
            axpy(2.0 * scale, residuals.row(e), gb, d);
        }
        for (EntityId v : own) {
            std::size_t vi = static_cast<std::size_t>(v);
            const auto& v_nbrs = view.recon_neighbors[vi];
            if (v_nbrs.empty()) continue;
            double coeff = -2.0 * scale / static_cast<double>(v_nbrs.size());
            axpy(coeff, residuals.row(vi), gb, d);
        }
    }
}

void apply_frozen(EncoderGradients& grads, const FrozenMask& frozen) {
    if (frozen.agg1) {
        for (auto& layer : grads.inner_layers) {
            layer.weight.set_zero();
            std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
        }
    }
    if (frozen.rel_emb) grads.rel_emb.set_zero();
    if (frozen.proxies) grads.proxies.set_zero();
    if (frozen.proxy_proj) grads.proxy_proj.set_zero();
    if (!frozen.base_rows.empty()) {
        std::size_t d = grads.base_emb.cols();
        for (std::size_t r = 0; r < grads.base_emb.rows(); ++r) {
            if (frozen.base_row_frozen(r)) {
                std::fill_n(grads.base_emb.row(r), d, 0.0);
            }
        }
    }
}

} // namespace

double reconstruction_loss(const Mat& base_emb, const GraphView& view) {
    const std::size_t d = base_emb.cols();
    Mat residuals(view.n_entities, d);
    reconstruction_residuals(base_emb, view, residuals);
    std::vector<double> terms(view.n_entities);
#pragma omp parallel for schedule(static)
    for (std::int64_t ei = 0; ei < static_cast<std::int64_t>(view.n_entities); ++ei) {
        std::size_t e = static_cast<std::size_t>(ei);
        const double* res = residuals.row(e);
        terms[e] = dot(res, res, d);
    }
    double loss = 0.0;
    for (double t : terms) loss += t; // fixed-order reduction
    return loss;
}

double alignment_loss(const Mat& encoder_out, std::size_t kg2_offset, const Batch& batch,
                      double gamma, double lambda) {
    return alignment_core(encoder_out, kg2_offset, batch, gamma, lambda, 0.0, nullptr);
}

LossBreakdown loss_initial(const Mat& encoder_out, const Mat& base_emb, const GraphView& view,
                           std::size_t kg2_offset, const Batch& batch, double alpha, double gamma,
                           double lambda) {
    LossBreakdown out;
    out.align = alignment_loss(encoder_out, kg2_offset, batch, gamma, lambda);
    out.reconstruct = reconstruction_loss(base_emb, view);
    out.total = out.align + alpha * out.reconstruct;
    return out;
}

LossBreakdown loss_finetune(const Mat& encoder_out, const Mat& base_emb, const GraphView& view,
                            std::size_t kg2_offset, const Batch& asa_batch, const Batch& ta_batch,
                            double alpha, double beta, double gamma, double lambda) {
    if (asa_batch.pairs.empty() && ta_batch.pairs.empty()) {
        log_info("warning: no finetuning signal (empty ASA and TA); reconstruction only");
    }
    LossBreakdown out;
    out.align = alignment_loss(encoder_out, kg2_offset, asa_batch, gamma, lambda);
    out.align_ta = alignment_loss(encoder_out, kg2_offset, ta_batch, gamma, lambda);
    out.reconstruct = reconstruction_loss(base_emb, view);
    out.total = out.align + alpha * out.reconstruct + beta * out.align_ta;
    return out;
}

GradientResult gradient(LossKind kind, const EncoderState& state, const LossInputs& inputs) {
    if (inputs.view == nullptr) {
        throw Error("precondition violated error: gradient requires a graph view");
    }
    const GraphView& view = *inputs.view;
    GradientResult result;
    result.grads = EncoderGradients::zeros_like(state);
    LossBreakdown& loss = result.loss;

    if (kind == LossKind::reconstruction) {
        loss.reconstruct = reconstruction_loss(state.base_emb, view);
        loss.total = loss.reconstruct;
        reconstruction_gradient(state.base_emb, view, 1.0, result.grads.base_emb);
    } else {
        ForwardCache cache;
        encode_forward(state, view, cache);
        Mat d_out(view.n_entities, state.dim());

        loss.align = alignment_core(cache.out, inputs.kg2_offset, inputs.batch, inputs.gamma,
                                    inputs.lambda, 1.0, &d_out);
        if (kind == LossKind::finetune) {
            loss.align_ta = alignment_core(cache.out, inputs.kg2_offset, inputs.ta_batch,
                                           inputs.gamma, inputs.lambda, inputs.beta, &d_out);
        }
        encoder_backward(state, view, cache, d_out, result.grads);

        if (kind == LossKind::alignment) {
            loss.total = loss.align;
        } else {
            loss.reconstruct = reconstruction_loss(state.base_emb, view);
            reconstruction_gradient(state.base_emb, view, inputs.alpha, result.grads.base_emb);
            loss.total = loss.align + inputs.alpha * loss.reconstruct;
            if (kind == LossKind::finetune) loss.total += inputs.beta * loss.align_ta;
        }
    }

    apply_frozen(result.grads, state.frozen);

    const char* bad_group = nullptr;
    if (!result.grads.all_finite_or_name(&bad_group)) {
        throw Error(std::string("numerical instability error: non-finite gradient in group '") +
                    bad_group + "'");
    }
    return result;
}

} // namespace contea
