#pragma once

#include <cstddef>
#include <vector>

#include "eva/feature_model.hpp"
#include "eva/matrix.hpp"
#include "eva/numerics.hpp"

namespace eva {

// y = x . weight + bias, weight is in_dim x out_dim.
struct AffineMap {
    Matrix weight;
    std::vector<double> bias;

    std::size_t in_dim() const { return weight.rows; }
    std::size_t out_dim() const { return weight.cols; }
    void validate() const;
    static AffineMap identity(std::size_t dim);
    static AffineMap seeded(std::size_t in_dim, std::size_t out_dim, Rng& rng);

    void apply_row(std::span<const double> x, std::span<double> y) const;
    Matrix apply(const Matrix& x) const;
};

struct FusionParams {
    AffineMap proj_w;   // whisper dim -> token dim
    AffineMap proj_c;   // aggregated dim -> token dim
    double alpha = 0.01;

    void validate() const;
};

struct AudioMask {
    std::vector<bool> bits;

    std::size_t size() const { return bits.size(); }
    static AudioMask all(std::size_t n, bool value = true);
};

// Token stream with audio evidence added at masked positions:
//   masked:   out[i] = (tok[i] + proj_w(whisper[i])) * sqrt(2)
//                      + alpha * proj_c(aligned[i])
//   unmasked: out[i] = tok[i]
// Length and timeline always follow the token stream.
TemporalSequence inject_and_add(const TemporalSequence& tokens,
                                const TemporalSequence& whisper,
                                const TemporalSequence& aligned,
                                const AudioMask& mask, const FusionParams& p);

// Ablation route with the aggregated branch removed outright:
//   masked: out[i] = (tok[i] + proj_w(whisper[i])) * sqrt(2)
TemporalSequence inject_and_add(const TemporalSequence& tokens,
                                const TemporalSequence& whisper,
                                const AudioMask& mask, const FusionParams& p);

struct AffineGrads {
    Matrix d_weight;
    std::vector<double> d_bias;
};

struct FusionGrads {
    double d_alpha = 0.0;
    AffineGrads d_proj_w;
    AffineGrads d_proj_c;
    Matrix d_aligned;
};

// Gradients of a scalar loss wrt the fusion parameters and the aligned
// input, given the gradient wrt the fused output.
FusionGrads inject_and_add_grads(const TemporalSequence& tokens,
                                 const TemporalSequence& whisper,
                                 const TemporalSequence& aligned,
                                 const AudioMask& mask, const FusionParams& p,
                                 const Matrix& d_out);

// Window-level query-bank compressor used as the structural baseline:
// a static query bank cross-attends to each window of the input, so the
// output is num_queries rows per window instead of window rows.
struct QFormerParams {
    std::size_t window = 8;
    std::size_t num_queries = 1;
    Matrix queries;  // num_queries x dim
    AttentionParams attn;

    void validate() const;
    static QFormerParams seeded(std::size_t window, std::size_t num_queries,
                                std::size_t num_heads, std::size_t dim, Rng& rng);
};

std::size_t qformer_output_length(std::size_t input_length, const QFormerParams& p);

TemporalSequence qformer_compress(const TemporalSequence& features, const QFormerParams& p);

}  // namespace eva
