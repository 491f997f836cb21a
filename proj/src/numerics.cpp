#include "eva/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eva/rng.hpp"

namespace eva {

void AttentionParams::validate() const {
    if (num_heads == 0 || model_dim == 0) {
        throw std::invalid_argument("attention: num_heads and model_dim must be positive");
    }
    if (model_dim % num_heads != 0) {
        throw std::invalid_argument("attention: model_dim not divisible by num_heads");
    }
    for (const Matrix* m : {&query, &key, &value, &output}) {
        if (m->rows != model_dim || m->cols != model_dim) {
            throw std::invalid_argument("attention: projection must be model_dim x model_dim");
        }
        if (!m->all_finite()) {
            throw std::invalid_argument("attention: non-finite projection entries");
        }
    }
}

AttentionParams AttentionParams::seeded(std::size_t num_heads, std::size_t model_dim,
                                        Rng& rng, double scale) {
    AttentionParams p;
    p.num_heads = num_heads;
    p.model_dim = model_dim;
    const double sigma = scale / std::sqrt(static_cast<double>(model_dim));
    for (Matrix* m : {&p.query, &p.key, &p.value, &p.output}) {
        *m = Matrix(model_dim, model_dim);
        for (double& v : m->data) {
            v = sigma * rng.normal();
        }
    }
    p.validate();
    return p;
}

NormParams NormParams::identity(std::size_t dim, double eps) {
    NormParams p;
    p.scale.assign(dim, 1.0);
    p.shift.assign(dim, 0.0);
    p.eps = eps;
    return p;
}

void NormParams::validate() const {
    if (eps <= 0.0) {
        throw std::invalid_argument("layer_norm: eps must be positive");
    }
    if (scale.size() != shift.size()) {
        throw std::invalid_argument("layer_norm: scale/shift length mismatch");
    }
    for (std::size_t i = 0; i < scale.size(); ++i) {
        if (!std::isfinite(scale[i]) || !std::isfinite(shift[i])) {
            throw std::invalid_argument("layer_norm: non-finite parameters");
        }
    }
}

void softmax_span(std::span<double> values) {
    double peak = values[0];
    for (double v : values) {
        peak = std::max(peak, v);
    }
    double total = 0.0;
    for (double& v : values) {
        v = std::exp(v - peak);
        total += v;
    }
    for (double& v : values) {
        v /= total;
    }
}

Matrix softmax_rows(const Matrix& m) {
    if (!m.all_finite()) {
        throw std::invalid_argument("softmax_rows: non-finite input");
    }
    if (m.cols == 0) {
        throw std::invalid_argument("softmax_rows: empty rows");
    }
    Matrix out = m;
    for (std::size_t r = 0; r < out.rows; ++r) {
        softmax_span(out.row(r));
    }
    return out;
}

std::vector<double> layer_norm(const std::vector<double>& x, const NormParams& p) {
    p.validate();
    const std::size_t dim = x.size();
    if (dim != p.scale.size()) {
        throw std::invalid_argument("layer_norm: input/parameter dimension mismatch");
    }
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(dim);
    double var = 0.0;
    for (double v : x) {
        const double d = v - mean;
        var += d * d;
    }
    var /= static_cast<double>(dim);
    const double inv_sigma = 1.0 / std::sqrt(var + p.eps);
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        out[i] = p.scale[i] * (x[i] - mean) * inv_sigma + p.shift[i];
    }
    return out;
}

Matrix layer_norm_rows(const Matrix& x, const NormParams& p) {
    p.validate();
    if (x.cols != p.scale.size()) {
        throw std::invalid_argument("layer_norm: input/parameter dimension mismatch");
    }
    Matrix out(x.rows, x.cols);
    std::vector<double> rowbuf(x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        auto in = x.row(r);
        std::copy(in.begin(), in.end(), rowbuf.begin());
        const std::vector<double> y = layer_norm(rowbuf, p);
        std::copy(y.begin(), y.end(), out.row(r).begin());
    }
    return out;
}

Matrix layer_norm_rows_input_grad(const Matrix& x, const NormParams& p,
                                  const Matrix& d_out) {
    if (x.rows != d_out.rows || x.cols != d_out.cols) {
        throw std::invalid_argument("layer_norm backward: shape mismatch");
    }
    const std::size_t dim = x.cols;
    Matrix dx(x.rows, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        auto in = x.row(r);
        auto g = d_out.row(r);
        double mean = 0.0;
        for (double v : in) {
            mean += v;
        }
        mean /= static_cast<double>(dim);
        double var = 0.0;
        for (double v : in) {
            const double d = v - mean;
            var += d * d;
        }
        var /= static_cast<double>(dim);
        const double inv_sigma = 1.0 / std::sqrt(var + p.eps);

        // dxhat = scale .* g; dx = (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat)) / sigma
        double mean_dxhat = 0.0;
        double mean_dxhat_xhat = 0.0;
        std::vector<double> dxhat(dim);
        std::vector<double> xhat(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            xhat[i] = (in[i] - mean) * inv_sigma;
            dxhat[i] = p.scale[i] * g[i];
            mean_dxhat += dxhat[i];
            mean_dxhat_xhat += dxhat[i] * xhat[i];
        }
        mean_dxhat /= static_cast<double>(dim);
        mean_dxhat_xhat /= static_cast<double>(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            dx.at(r, i) = (dxhat[i] - mean_dxhat - xhat[i] * mean_dxhat_xhat) * inv_sigma;
        }
    }
    return dx;
}

namespace {

void check_attention_inputs(const Matrix& q_in, const Matrix& k_in,
                            const Matrix& v_in, const AttentionParams& p) {
    p.validate();
    if (k_in.rows != v_in.rows) {
        throw std::invalid_argument("cross_attention: key/value length mismatch");
    }
    if (q_in.cols != p.model_dim || k_in.cols != p.model_dim || v_in.cols != p.model_dim) {
        throw std::invalid_argument("cross_attention: feature dim must equal model_dim");
    }
}

// Per-head score matrix, softmaxed: A_h[t, s] over key index s.
Matrix head_attention_weights(const Matrix& qp, const Matrix& kp,
                              std::size_t head, std::size_t head_dim) {
    const std::size_t offset = head * head_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    Matrix scores(qp.rows, kp.rows);
    for (std::size_t t = 0; t < qp.rows; ++t) {
        for (std::size_t s = 0; s < kp.rows; ++s) {
            double dot = 0.0;
            for (std::size_t d = 0; d < head_dim; ++d) {
                dot += qp.at(t, offset + d) * kp.at(s, offset + d);
            }
            scores.at(t, s) = dot * scale;
        }
        softmax_span(scores.row(t));
    }
    return scores;
}

}  // namespace

Matrix cross_attention(const Matrix& q_in, const Matrix& k_in,
                       const Matrix& v_in, const AttentionParams& p) {
    check_attention_inputs(q_in, k_in, v_in, p);
    const std::size_t head_dim = p.head_dim();

    const Matrix qp = matmul(q_in, p.query);
    const Matrix kp = matmul(k_in, p.key);
    const Matrix vp = matmul(v_in, p.value);

    Matrix concat(q_in.rows, p.model_dim);
    for (std::size_t h = 0; h < p.num_heads; ++h) {
        const std::size_t offset = h * head_dim;
        const Matrix weights = head_attention_weights(qp, kp, h, head_dim);
        for (std::size_t t = 0; t < q_in.rows; ++t) {
            for (std::size_t s = 0; s < k_in.rows; ++s) {
                const double w = weights.at(t, s);
                for (std::size_t d = 0; d < head_dim; ++d) {
                    concat.at(t, offset + d) += w * vp.at(s, offset + d);
                }
            }
        }
    }
    return matmul(concat, p.output);
}

std::vector<Matrix> attention_weight_matrices(const Matrix& q_in,
                                              const Matrix& k_in,
                                              const AttentionParams& p) {
    p.validate();
    if (q_in.cols != p.model_dim || k_in.cols != p.model_dim) {
        throw std::invalid_argument("cross_attention: feature dim must equal model_dim");
    }
    const Matrix qp = matmul(q_in, p.query);
    const Matrix kp = matmul(k_in, p.key);
    std::vector<Matrix> out;
    out.reserve(p.num_heads);
    for (std::size_t h = 0; h < p.num_heads; ++h) {
        out.push_back(head_attention_weights(qp, kp, h, p.head_dim()));
    }
    return out;
}

AttentionInputGrads cross_attention_input_grads(const Matrix& q_in,
                                                const Matrix& k_in,
                                                const Matrix& v_in,
                                                const AttentionParams& p,
                                                const Matrix& d_out) {
    check_attention_inputs(q_in, k_in, v_in, p);
    if (d_out.rows != q_in.rows || d_out.cols != p.model_dim) {
        throw std::invalid_argument("cross_attention backward: d_out shape mismatch");
    }
    const std::size_t head_dim = p.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    const Matrix qp = matmul(q_in, p.query);
    const Matrix kp = matmul(k_in, p.key);
    const Matrix vp = matmul(v_in, p.value);

    // d_concat = d_out . Wo^T
    const Matrix d_concat = matmul(d_out, transpose(p.output));

    Matrix d_qp(qp.rows, qp.cols);
    Matrix d_kp(kp.rows, kp.cols);
    Matrix d_vp(vp.rows, vp.cols);

    for (std::size_t h = 0; h < p.num_heads; ++h) {
        const std::size_t offset = h * head_dim;
        const Matrix weights = head_attention_weights(qp, kp, h, head_dim);

        for (std::size_t t = 0; t < qp.rows; ++t) {
            // dA[t, s] = d_concat_h[t] . vp_h[s]; row-softmax backward to scores.
            std::vector<double> d_weights(kp.rows);
            for (std::size_t s = 0; s < kp.rows; ++s) {
                double dot = 0.0;
                for (std::size_t d = 0; d < head_dim; ++d) {
                    dot += d_concat.at(t, offset + d) * vp.at(s, offset + d);
                }
                d_weights[s] = dot;
            }
            double weighted_sum = 0.0;
            for (std::size_t s = 0; s < kp.rows; ++s) {
                weighted_sum += weights.at(t, s) * d_weights[s];
            }
            for (std::size_t s = 0; s < kp.rows; ++s) {
                const double w = weights.at(t, s);
                const double d_score = w * (d_weights[s] - weighted_sum) * scale;
                for (std::size_t d = 0; d < head_dim; ++d) {
                    d_qp.at(t, offset + d) += d_score * kp.at(s, offset + d);
                    d_kp.at(s, offset + d) += d_score * qp.at(t, offset + d);
                }
                for (std::size_t d = 0; d < head_dim; ++d) {
                    d_vp.at(s, offset + d) += w * d_concat.at(t, offset + d);
                }
            }
        }
    }

    AttentionInputGrads grads;
    grads.d_query = matmul(d_qp, transpose(p.query));
    grads.d_key = matmul(d_kp, transpose(p.key));
    grads.d_value = matmul(d_vp, transpose(p.value));
    return grads;
}

std::vector<double> finite_diff_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& theta, double h) {
    if (h <= 0.0) {
        throw std::invalid_argument("finite_diff_gradient: step must be positive");
    }
    std::vector<double> grad(theta.size());
    std::vector<double> probe = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + h;
        const double hi = f(probe);
        probe[i] = theta[i] - h;
        const double lo = f(probe);
        probe[i] = theta[i];
        if (!std::isfinite(hi) || !std::isfinite(lo)) {
            throw std::invalid_argument("finite_diff_gradient: non-finite function value");
        }
        grad[i] = (hi - lo) / (2.0 * h);
    }
    return grad;
}

double gradient_relative_error(const std::vector<double>& analytic,
                               const std::vector<double>& numeric,
                               double floor) {
    if (analytic.size() != numeric.size()) {
        throw std::invalid_argument("gradient_relative_error: length mismatch");
    }
    double diff = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
        norm_a = std::max(norm_a, std::abs(analytic[i]));
        norm_b = std::max(norm_b, std::abs(numeric[i]));
    }
    return diff / std::max({norm_a, norm_b, floor});
}

}  // namespace eva
