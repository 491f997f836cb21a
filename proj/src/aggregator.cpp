#include "eva/aggregator.hpp"

#include <cmath>
#include <stdexcept>

#include "eva/rng.hpp"

namespace eva {

void GateParams::validate(std::size_t dim) const {
    if (weight.size() != dim) throw std::invalid_argument("gate weight dim mismatch");
    for (double w : weight) {
        if (!std::isfinite(w)) throw std::invalid_argument("gate weight not finite");
    }
    if (!std::isfinite(bias)) throw std::invalid_argument("gate bias not finite");
}

GateParams GateParams::seeded(std::size_t dim, Rng& rng) {
    GateParams g;
    g.weight = rng.normal_vector(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    g.bias = 0.0;
    return g;
}

void AggregatorParams::validate() const {
    attn_stage1.validate();
    attn_stage2.validate();
    const std::size_t dim = attn_stage1.model_dim;
    if (attn_stage2.model_dim != dim) throw std::invalid_argument("stage dims differ");
    gate4.validate(dim);
    gate8.validate(dim);
    gate_final.validate(dim);
    norm_stage1.validate();
    norm_stage2.validate();
    if (norm_stage1.scale.size() != dim || norm_stage2.scale.size() != dim) {
        throw std::invalid_argument("norm dim mismatch");
    }
}

AggregatorParams AggregatorParams::seeded(std::size_t dim, std::size_t num_heads, Rng& rng) {
    AggregatorParams p;
    p.gate4 = GateParams::seeded(dim, rng);
    p.gate8 = GateParams::seeded(dim, rng);
    p.gate_final = GateParams::seeded(dim, rng);
    p.attn_stage1 = AttentionParams::seeded(num_heads, dim, rng, 1.0);
    p.attn_stage2 = AttentionParams::seeded(num_heads, dim, rng, 1.0);
    p.norm_stage1 = NormParams::identity(dim);
    p.norm_stage2 = NormParams::identity(dim);
    return p;
}

namespace {

// Softmax logits over bands for one time step.
void gate_logits(const BandedFeatureMap& m, const GateParams& g, std::size_t t,
                 std::span<double> out) {
    for (std::size_t f = 0; f < m.bands; ++f) {
        auto band = m.band_vector(t, f);
        double z = g.bias;
        for (std::size_t d = 0; d < m.dim; ++d) z += g.weight[d] * band[d];
        out[f] = z;
    }
}

}  // namespace

Matrix frequency_gate_weights(const BandedFeatureMap& m, const GateParams& g) {
    m.validate();
    g.validate(m.dim);
    Matrix weights(m.steps, m.bands);
    for (std::size_t t = 0; t < m.steps; ++t) {
        gate_logits(m, g, t, weights.row(t));
        softmax_span(weights.row(t));
    }
    return weights;
}

TemporalSequence frequency_gated_pool(const BandedFeatureMap& m, const GateParams& g) {
    const Matrix weights = frequency_gate_weights(m, g);
    TemporalSequence out;
    out.features = Matrix(m.steps, m.dim);
    out.timeline = m.timeline;
    for (std::size_t t = 0; t < m.steps; ++t) {
        auto y = out.features.row(t);
        for (std::size_t f = 0; f < m.bands; ++f) {
            const double w = weights.at(t, f);
            auto band = m.band_vector(t, f);
            for (std::size_t d = 0; d < m.dim; ++d) y[d] += w * band[d];
        }
    }
    return out;
}

GateGrads frequency_gated_pool_param_grads(const BandedFeatureMap& m, const GateParams& g,
                                           const Matrix& d_out) {
    if (d_out.rows != m.steps || d_out.cols != m.dim) {
        throw std::invalid_argument("pool grad shape mismatch");
    }
    const Matrix weights = frequency_gate_weights(m, g);
    GateGrads grads;
    grads.d_weight.assign(m.dim, 0.0);

    std::vector<double> d_soft(m.bands), d_logit(m.bands);
    for (std::size_t t = 0; t < m.steps; ++t) {
        auto dy = d_out.row(t);
        for (std::size_t f = 0; f < m.bands; ++f) {
            auto band = m.band_vector(t, f);
            double dot = 0.0;
            for (std::size_t d = 0; d < m.dim; ++d) dot += dy[d] * band[d];
            d_soft[f] = dot;
        }
        auto a = weights.row(t);
        double inner = 0.0;
        for (std::size_t f = 0; f < m.bands; ++f) inner += a[f] * d_soft[f];
        for (std::size_t f = 0; f < m.bands; ++f) d_logit[f] = a[f] * (d_soft[f] - inner);

        for (std::size_t f = 0; f < m.bands; ++f) {
            auto band = m.band_vector(t, f);
            for (std::size_t d = 0; d < m.dim; ++d) grads.d_weight[d] += d_logit[f] * band[d];
            grads.d_bias += d_logit[f];
        }
    }
    return grads;
}

TemporalSequence cascaded_fuse(const TemporalSequence& final_seq,
                               const TemporalSequence& middle_seq,
                               const TemporalSequence& shallow_seq,
                               const AggregatorParams& p, CascadeTrace* trace) {
    p.validate();
    const std::size_t dim = p.attn_stage1.model_dim;
    if (final_seq.dim() != dim || middle_seq.dim() != dim || shallow_seq.dim() != dim) {
        throw std::invalid_argument("cascade input dim mismatch");
    }

    Matrix attn1 = cross_attention(final_seq.features, middle_seq.features,
                                   middle_seq.features, p.attn_stage1);
    Matrix sum1 = add(attn1, final_seq.features);
    Matrix normed1 = layer_norm_rows(sum1, p.norm_stage1);

    Matrix attn2 = cross_attention(normed1, shallow_seq.features, shallow_seq.features,
                                   p.attn_stage2);
    Matrix sum2 = add(attn2, normed1);

    TemporalSequence out;
    out.features = layer_norm_rows(sum2, p.norm_stage2);
    out.timeline = final_seq.timeline;
    if (trace) {
        trace->sum_stage1 = std::move(sum1);
        trace->normed_stage1 = std::move(normed1);
        trace->sum_stage2 = std::move(sum2);
    }
    return out;
}

CascadeInputGrads cascaded_fuse_input_grads(const TemporalSequence& final_seq,
                                            const TemporalSequence& middle_seq,
                                            const TemporalSequence& shallow_seq,
                                            const AggregatorParams& p,
                                            const CascadeTrace& trace, const Matrix& d_out) {
    Matrix d_sum2 = layer_norm_rows_input_grad(trace.sum_stage2, p.norm_stage2, d_out);
    AttentionInputGrads stage2 =
        cross_attention_input_grads(trace.normed_stage1, shallow_seq.features,
                                    shallow_seq.features, p.attn_stage2, d_sum2);
    Matrix d_normed1 = add(d_sum2, stage2.d_query);

    Matrix d_sum1 = layer_norm_rows_input_grad(trace.sum_stage1, p.norm_stage1, d_normed1);
    AttentionInputGrads stage1 =
        cross_attention_input_grads(final_seq.features, middle_seq.features,
                                    middle_seq.features, p.attn_stage1, d_sum1);

    CascadeInputGrads grads;
    grads.d_final = add(d_sum1, stage1.d_query);
    grads.d_middle = add(stage1.d_key, stage1.d_value);
    grads.d_shallow = add(stage2.d_key, stage2.d_value);
    return grads;
}

TemporalSequence aggregate(const CedLayers& layers, const AggregatorParams& p) {
    TemporalSequence pooled_final = frequency_gated_pool(layers.layer_final, p.gate_final);
    TemporalSequence pooled_middle = frequency_gated_pool(layers.layer8, p.gate8);
    TemporalSequence pooled_shallow = frequency_gated_pool(layers.layer4, p.gate4);
    return cascaded_fuse(pooled_final, pooled_middle, pooled_shallow, p);
}

}  // namespace eva
