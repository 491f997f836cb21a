#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "eva/matrix.hpp"

namespace eva {

class Rng;

// Multi-head attention parameters. query/key/value/output are each
// model_dim x model_dim; head h owns the column block
// [h*head_dim, (h+1)*head_dim).
struct AttentionParams {
    std::size_t num_heads = 4;
    std::size_t model_dim = 0;
    Matrix query;
    Matrix key;
    Matrix value;
    Matrix output;

    std::size_t head_dim() const { return model_dim / num_heads; }
    void validate() const;

    static AttentionParams seeded(std::size_t num_heads, std::size_t model_dim,
                                  Rng& rng, double scale);
};

// Layer-normalization parameters (per-dimension affine after standardization).
struct NormParams {
    std::vector<double> scale;
    std::vector<double> shift;
    double eps = 1e-5;

    static NormParams identity(std::size_t dim, double eps = 1e-5);
    void validate() const;
};

// Row-wise softmax with max-subtraction. Rejects non-finite input.
Matrix softmax_rows(const Matrix& m);

// In-place softmax of a contiguous span, same stabilization.
void softmax_span(std::span<double> values);

// y = scale * (x - mean) / sqrt(var + eps) + shift, variance normalized by D.
std::vector<double> layer_norm(const std::vector<double>& x, const NormParams& p);

// Applies layer_norm to each row.
Matrix layer_norm_rows(const Matrix& x, const NormParams& p);

// Gradient of layer_norm_rows with respect to its input (affine params fixed).
Matrix layer_norm_rows_input_grad(const Matrix& x, const NormParams& p,
                                  const Matrix& d_out);

// Scaled dot-product cross-attention: per head,
// out_t = sum_s softmax_s(q_t . k_s / sqrt(head_dim)) v_s,
// heads concatenated then output-projected. No masking.
Matrix cross_attention(const Matrix& q_in, const Matrix& k_in,
                       const Matrix& v_in, const AttentionParams& p);

// Per-head attention weight matrices (each q_rows x k_rows, rows sum to 1).
std::vector<Matrix> attention_weight_matrices(const Matrix& q_in,
                                              const Matrix& k_in,
                                              const AttentionParams& p);

struct AttentionInputGrads {
    Matrix d_query;
    Matrix d_key;
    Matrix d_value;
};

// Gradients of cross_attention with respect to Q/K/V inputs (params fixed).
AttentionInputGrads cross_attention_input_grads(const Matrix& q_in,
                                                const Matrix& k_in,
                                                const Matrix& v_in,
                                                const AttentionParams& p,
                                                const Matrix& d_out);

// Central finite differences (f(x+h e_i) - f(x-h e_i)) / (2h).
// Rejects non-finite function values.
std::vector<double> finite_diff_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& theta, double h);

// ||a - b||_inf / max(||a||_inf, ||b||_inf, floor) over gradient vectors.
double gradient_relative_error(const std::vector<double>& analytic,
                               const std::vector<double>& numeric,
                               double floor = 1e-8);

}  // namespace eva
