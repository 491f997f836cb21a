#include "eva/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eva/rng.hpp"

namespace eva {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
}

void AffineMap::validate() const {
    if (weight.rows == 0 || weight.cols == 0) throw std::invalid_argument("empty affine map");
    if (bias.size() != weight.cols) throw std::invalid_argument("affine bias dim mismatch");
    if (!weight.all_finite()) throw std::invalid_argument("affine weight not finite");
    for (double b : bias) {
        if (!std::isfinite(b)) throw std::invalid_argument("affine bias not finite");
    }
}

AffineMap AffineMap::identity(std::size_t dim) {
    AffineMap m;
    m.weight = Matrix(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) m.weight.at(i, i) = 1.0;
    m.bias.assign(dim, 0.0);
    return m;
}

AffineMap AffineMap::seeded(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
    AffineMap m;
    m.weight = Matrix(in_dim, out_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (auto& w : m.weight.data) w = scale * rng.normal();
    m.bias.assign(out_dim, 0.0);
    return m;
}

void AffineMap::apply_row(std::span<const double> x, std::span<double> y) const {
    for (std::size_t j = 0; j < weight.cols; ++j) y[j] = bias[j];
    for (std::size_t i = 0; i < weight.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        auto w = weight.row(i);
        for (std::size_t j = 0; j < weight.cols; ++j) y[j] += xi * w[j];
    }
}

Matrix AffineMap::apply(const Matrix& x) const {
    if (x.cols != weight.rows) throw std::invalid_argument("affine input dim mismatch");
    Matrix y(x.rows, weight.cols);
    for (std::size_t r = 0; r < x.rows; ++r) apply_row(x.row(r), y.row(r));
    return y;
}

void FusionParams::validate() const {
    proj_w.validate();
    proj_c.validate();
    if (proj_w.out_dim() != proj_c.out_dim()) {
        throw std::invalid_argument("projection heads target different dims");
    }
    if (!std::isfinite(alpha)) throw std::invalid_argument("alpha not finite");
}

AudioMask AudioMask::all(std::size_t n, bool value) {
    AudioMask m;
    m.bits.assign(n, value);
    return m;
}

namespace {

void check_fusion_shapes(const TemporalSequence& tokens, const TemporalSequence& whisper,
                         const TemporalSequence* aligned, const AudioMask& mask,
                         const FusionParams& p) {
    p.validate();
    const std::size_t steps = tokens.steps();
    if (whisper.steps() != steps || mask.size() != steps ||
        (aligned && aligned->steps() != steps)) {
        throw std::invalid_argument("fusion inputs disagree on sequence length");
    }
    if (tokens.dim() != p.proj_w.out_dim()) {
        throw std::invalid_argument("token dim does not match projection output");
    }
    if (whisper.dim() != p.proj_w.in_dim()) {
        throw std::invalid_argument("whisper dim does not match its projection");
    }
    if (aligned && aligned->dim() != p.proj_c.in_dim()) {
        throw std::invalid_argument("aligned dim does not match its projection");
    }
}

}  // namespace

TemporalSequence inject_and_add(const TemporalSequence& tokens, const TemporalSequence& whisper,
                                const TemporalSequence& aligned, const AudioMask& mask,
                                const FusionParams& p) {
    check_fusion_shapes(tokens, whisper, &aligned, mask, p);
    const std::size_t dim = tokens.dim();
    TemporalSequence out;
    out.features = tokens.features;
    out.timeline = tokens.timeline;

    std::vector<double> proj_w(dim), proj_c(dim);
    for (std::size_t i = 0; i < tokens.steps(); ++i) {
        if (!mask.bits[i]) continue;
        p.proj_w.apply_row(whisper.features.row(i), proj_w);
        p.proj_c.apply_row(aligned.features.row(i), proj_c);
        auto tok = tokens.features.row(i);
        auto y = out.features.row(i);
        for (std::size_t d = 0; d < dim; ++d) {
            y[d] = (tok[d] + proj_w[d]) * kSqrt2 + p.alpha * proj_c[d];
        }
    }
    return out;
}

TemporalSequence inject_and_add(const TemporalSequence& tokens, const TemporalSequence& whisper,
                                const AudioMask& mask, const FusionParams& p) {
    check_fusion_shapes(tokens, whisper, nullptr, mask, p);
    const std::size_t dim = tokens.dim();
    TemporalSequence out;
    out.features = tokens.features;
    out.timeline = tokens.timeline;

    std::vector<double> proj_w(dim);
    for (std::size_t i = 0; i < tokens.steps(); ++i) {
        if (!mask.bits[i]) continue;
        p.proj_w.apply_row(whisper.features.row(i), proj_w);
        auto tok = tokens.features.row(i);
        auto y = out.features.row(i);
        for (std::size_t d = 0; d < dim; ++d) y[d] = (tok[d] + proj_w[d]) * kSqrt2;
    }
    return out;
}

FusionGrads inject_and_add_grads(const TemporalSequence& tokens, const TemporalSequence& whisper,
                                 const TemporalSequence& aligned, const AudioMask& mask,
                                 const FusionParams& p, const Matrix& d_out) {
    check_fusion_shapes(tokens, whisper, &aligned, mask, p);
    const std::size_t dim = tokens.dim();
    if (d_out.rows != tokens.steps() || d_out.cols != dim) {
        throw std::invalid_argument("fusion grad shape mismatch");
    }

    FusionGrads grads;
    grads.d_proj_w.d_weight = Matrix(p.proj_w.in_dim(), dim);
    grads.d_proj_w.d_bias.assign(dim, 0.0);
    grads.d_proj_c.d_weight = Matrix(p.proj_c.in_dim(), dim);
    grads.d_proj_c.d_bias.assign(dim, 0.0);
    grads.d_aligned = Matrix(aligned.steps(), aligned.dim());

    std::vector<double> proj_c(dim);
    for (std::size_t i = 0; i < tokens.steps(); ++i) {
        if (!mask.bits[i]) continue;
        auto g = d_out.row(i);
        auto w_in = whisper.features.row(i);
        auto c_in = aligned.features.row(i);

        p.proj_c.apply_row(c_in, proj_c);
        for (std::size_t d = 0; d < dim; ++d) grads.d_alpha += g[d] * proj_c[d];

        for (std::size_t j = 0; j < p.proj_w.in_dim(); ++j) {
            auto dw = grads.d_proj_w.d_weight.row(j);
            const double x = kSqrt2 * w_in[j];
            for (std::size_t d = 0; d < dim; ++d) dw[d] += x * g[d];
        }
        for (std::size_t d = 0; d < dim; ++d) grads.d_proj_w.d_bias[d] += kSqrt2 * g[d];

        for (std::size_t j = 0; j < p.proj_c.in_dim(); ++j) {
            auto dw = grads.d_proj_c.d_weight.row(j);
            const double x = p.alpha * c_in[j];
            for (std::size_t d = 0; d < dim; ++d) dw[d] += x * g[d];
        }
        for (std::size_t d = 0; d < dim; ++d) grads.d_proj_c.d_bias[d] += p.alpha * g[d];

        auto da = grads.d_aligned.row(i);
        for (std::size_t j = 0; j < p.proj_c.in_dim(); ++j) {
            auto w = p.proj_c.weight.row(j);
            double acc = 0.0;
            for (std::size_t d = 0; d < dim; ++d) acc += g[d] * w[d];
            da[j] = p.alpha * acc;
        }
    }
    return grads;
}

void QFormerParams::validate() const {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (num_queries == 0 || num_queries >= window) {
        throw std::invalid_argument("query count must be in [1, window)");
    }
    attn.validate();
    if (queries.rows != num_queries || queries.cols != attn.model_dim) {
        throw std::invalid_argument("query bank shape mismatch");
    }
    if (!queries.all_finite()) throw std::invalid_argument("query bank not finite");
}

QFormerParams QFormerParams::seeded(std::size_t window, std::size_t num_queries,
                                    std::size_t num_heads, std::size_t dim, Rng& rng) {
    QFormerParams p;
    p.window = window;
    p.num_queries = num_queries;
    p.queries = Matrix(num_queries, dim);
    for (auto& q : p.queries.data) q = rng.normal();
    p.attn = AttentionParams::seeded(num_heads, dim, rng, 1.0);
    return p;
}

std::size_t qformer_output_length(std::size_t input_length, const QFormerParams& p) {
    const std::size_t windows = (input_length + p.window - 1) / p.window;
    return windows * p.num_queries;
}

TemporalSequence qformer_compress(const TemporalSequence& features, const QFormerParams& p) {
    p.validate();
    features.validate();
    const std::size_t steps = features.steps();
    if (steps == 0) throw std::invalid_argument("cannot compress an empty sequence");
    if (features.dim() != p.attn.model_dim) throw std::invalid_argument("compress dim mismatch");

    const std::size_t windows = (steps + p.window - 1) / p.window;
    TemporalSequence out;
    out.features = Matrix(windows * p.num_queries, features.dim());
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t begin = w * p.window;
        const std::size_t end = std::min(begin + p.window, steps);

        Matrix chunk(end - begin, features.dim());
        double center_sum = 0.0;
        for (std::size_t t = begin; t < end; ++t) {
            std::copy_n(features.features.row(t).begin(), features.dim(),
                        chunk.row(t - begin).begin());
            center_sum += features.timeline.centers[t];
        }
        Matrix compressed = cross_attention(p.queries, chunk, chunk, p.attn);

        const double center = center_sum / static_cast<double>(end - begin);
        for (std::size_t q = 0; q < p.num_queries; ++q) {
            std::copy_n(compressed.row(q).begin(), features.dim(),
                        out.features.row(w * p.num_queries + q).begin());
            out.timeline.centers.push_back(center);
            out.timeline.coverage.push_back(1.0);
        }
    }
    return out;
}

}  // namespace eva
