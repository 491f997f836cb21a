#pragma once

#include <cstddef>
#include <vector>

#include "eva/feature_model.hpp"
#include "eva/matrix.hpp"
#include "eva/numerics.hpp"

namespace eva {

// Scalar affine gate over band vectors. Zero weight degrades to uniform
// band averaging.
struct GateParams {
    std::vector<double> weight;
    double bias = 0.0;

    void validate(std::size_t dim) const;
    static GateParams seeded(std::size_t dim, Rng& rng);
};

struct AggregatorParams {
    GateParams gate4;
    GateParams gate8;
    GateParams gate_final;
    AttentionParams attn_stage1;
    AttentionParams attn_stage2;
    NormParams norm_stage1;
    NormParams norm_stage2;

    void validate() const;
    static AggregatorParams seeded(std::size_t dim, std::size_t num_heads, Rng& rng);
};

// Softmax gate weights per time step, T x F. Rows sum to 1.
Matrix frequency_gate_weights(const BandedFeatureMap& m, const GateParams& g);

// Collapses the band axis: out[t] = sum_f softmax_f(w . m[t,f,:] + b) m[t,f,:].
// Keeps the input timeline.
TemporalSequence frequency_gated_pool(const BandedFeatureMap& m, const GateParams& g);

struct GateGrads {
    std::vector<double> d_weight;
    double d_bias = 0.0;
};

// Gradient of a scalar loss wrt the gate parameters, given the gradient
// wrt the pooled output.
GateGrads frequency_gated_pool_param_grads(const BandedFeatureMap& m, const GateParams& g,
                                           const Matrix& d_out);

// Intermediates of cascaded_fuse needed by its backward pass.
struct CascadeTrace {
    Matrix sum_stage1;     // attention + residual, before first norm
    Matrix normed_stage1;  // query input of stage 2
    Matrix sum_stage2;
};

// Two-stage evidence fusion: the final-layer sequence queries the middle
// layer, the result queries the shallow layer. Both stages are
// residual-then-norm. Output keeps the query length and timeline.
TemporalSequence cascaded_fuse(const TemporalSequence& final_seq,
                               const TemporalSequence& middle_seq,
                               const TemporalSequence& shallow_seq,
                               const AggregatorParams& p,
                               CascadeTrace* trace = nullptr);

struct CascadeInputGrads {
    Matrix d_final;
    Matrix d_middle;
    Matrix d_shallow;
};

CascadeInputGrads cascaded_fuse_input_grads(const TemporalSequence& final_seq,
                                            const TemporalSequence& middle_seq,
                                            const TemporalSequence& shallow_seq,
                                            const AggregatorParams& p,
                                            const CascadeTrace& trace,
                                            const Matrix& d_out);

// Full aggregation: per-layer gated pooling, then the two-stage fusion.
TemporalSequence aggregate(const CedLayers& layers, const AggregatorParams& p);

}  // namespace eva
