#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <vector>

#include "eva/aggregator.hpp"
#include "eva/feature_model.hpp"
#include "eva/matrix.hpp"
#include "eva/numerics.hpp"
#include "eva/rng.hpp"

using namespace eva;

namespace {

BandedFeatureMap random_map(Rng& rng, std::size_t steps, std::size_t bands,
                            std::size_t dim, double scale = 1.0) {
    BandedFeatureMap m;
    m.steps = steps;
    m.bands = bands;
    m.dim = dim;
    m.data.resize(steps * bands * dim);
    for (auto& v : m.data) v = scale * rng.normal();
    for (std::size_t t = 0; t < steps; ++t) {
        m.timeline.centers.push_back(static_cast<double>(t) * 16.0 + 7.5);
        m.timeline.coverage.push_back(1.0);
    }
    return m;
}

TemporalSequence random_sequence(Rng& rng, std::size_t steps, std::size_t dim) {
    TemporalSequence s;
    s.features = Matrix(steps, dim);
    for (auto& v : s.features.data) v = rng.normal();
    for (std::size_t t = 0; t < steps; ++t) {
        s.timeline.centers.push_back(static_cast<double>(t));
        s.timeline.coverage.push_back(1.0);
    }
    return s;
}

// Plain-loop re-derivations, kept independent of the library kernels.

std::vector<double> oracle_softmax(const std::vector<double>& logits) {
    double sum = 0.0;
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i]);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

std::vector<double> oracle_layer_norm(const std::vector<double>& x, double eps = 1e-5) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / std::sqrt(var + eps);
    return out;
}

Matrix oracle_pool(const BandedFeatureMap& m, const GateParams& g) {
    Matrix out(m.steps, m.dim);
    for (std::size_t t = 0; t < m.steps; ++t) {
        std::vector<double> logits(m.bands);
        for (std::size_t f = 0; f < m.bands; ++f) {
            double dot = g.bias;
            for (std::size_t d = 0; d < m.dim; ++d) dot += g.weight[d] * m.at(t, f, d);
            logits[f] = dot;
        }
        const auto w = oracle_softmax(logits);
        for (std::size_t f = 0; f < m.bands; ++f)
            for (std::size_t d = 0; d < m.dim; ++d) out.at(t, d) += w[f] * m.at(t, f, d);
    }
    return out;
}

// Single-head attention; head_dim equals the model dim.
Matrix oracle_attention_1head(const Matrix& q, const Matrix& k, const Matrix& v,
                              const AttentionParams& p) {
    const std::size_t dim = p.model_dim;
    auto project = [&](const Matrix& x, const Matrix& w) {
        Matrix out(x.rows, dim);
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t c = 0; c < dim; ++c)
                for (std::size_t i = 0; i < dim; ++i) out.at(r, c) += x.at(r, i) * w.at(i, c);
        return out;
    };
    const Matrix qp = project(q, p.query), kp = project(k, p.key), vp = project(v, p.value);
    Matrix ctx(q.rows, dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t r = 0; r < q.rows; ++r) {
        std::vector<double> scores(k.rows);
        for (std::size_t s = 0; s < k.rows; ++s) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) dot += qp.at(r, i) * kp.at(s, i);
            scores[s] = dot * scale;
        }
        const auto w = oracle_softmax(scores);
        for (std::size_t s = 0; s < k.rows; ++s)
            for (std::size_t i = 0; i < dim; ++i) ctx.at(r, i) += w[s] * vp.at(s, i);
    }
    return project(ctx, p.output);
}

Matrix oracle_cascade(const Matrix& final_rows, const Matrix& middle_rows,
                      const Matrix& shallow_rows, const AggregatorParams& p) {
    const Matrix attn1 =
        oracle_attention_1head(final_rows, middle_rows, middle_rows, p.attn_stage1);
    Matrix normed1(final_rows.rows, final_rows.cols);
    for (std::size_t r = 0; r < final_rows.rows; ++r) {
        std::vector<double> row(final_rows.cols);
        for (std::size_t c = 0; c < final_rows.cols; ++c)
            row[c] = attn1.at(r, c) + final_rows.at(r, c);
        const auto n = oracle_layer_norm(row);
        for (std::size_t c = 0; c < final_rows.cols; ++c) normed1.at(r, c) = n[c];
    }
    const Matrix attn2 =
        oracle_attention_1head(normed1, shallow_rows, shallow_rows, p.attn_stage2);
    Matrix out(final_rows.rows, final_rows.cols);
    for (std::size_t r = 0; r < final_rows.rows; ++r) {
        std::vector<double> row(final_rows.cols);
        for (std::size_t c = 0; c < final_rows.cols; ++c)
            row[c] = attn2.at(r, c) + normed1.at(r, c);
        const auto n = oracle_layer_norm(row);
        for (std::size_t c = 0; c < final_rows.cols; ++c) out.at(r, c) = n[c];
    }
    return out;
}

}  // namespace

TEST_CASE("pooling a single band is the identity") {
    Rng rng(5);
    const auto m = random_map(rng, 4, 1, 6);
    const GateParams g = GateParams::seeded(6, rng);
    const auto pooled = frequency_gated_pool(m, g);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t d = 0; d < 6; ++d) CHECK(pooled.features.at(t, d) == m.at(t, 0, d));
}

TEST_CASE("a zero gate averages the bands") {
    Rng rng(6);
    const auto m = random_map(rng, 3, 4, 5);
    GateParams g;
    g.weight.assign(5, 0.0);
    const auto pooled = frequency_gated_pool(m, g);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t d = 0; d < 5; ++d) {
            double mean = 0.0;
            for (std::size_t f = 0; f < 4; ++f) mean += m.at(t, f, d);
            mean /= 4.0;
            CHECK(std::abs(pooled.features.at(t, d) - mean) <= 1e-12);
        }
}

TEST_CASE("worked scalar pooling example") {
    BandedFeatureMap m;
    m.steps = 1;
    m.bands = 2;
    m.dim = 1;
    m.data = {1.0, 3.0};
    m.timeline.centers = {7.5};
    m.timeline.coverage = {1.0};
    GateParams g;
    g.weight = {1.0};

    const double e1 = std::exp(1.0), e3 = std::exp(3.0);
    const double expected = (e1 * 1.0 + e3 * 3.0) / (e1 + e3);
    const auto pooled = frequency_gated_pool(m, g);
    CHECK(pooled.features.at(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(pooled.features.at(0, 0) == doctest::Approx(2.7616).epsilon(1e-3));
}

TEST_CASE("gate weights are simplex rows and pooling stays in the band hull") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t steps = 1 + static_cast<std::size_t>(rng.uniform() * 6);
        const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform() * 12);
        const auto m = random_map(rng, steps, 4, dim, rng.uniform(0.2, 4.0));
        const GateParams g = GateParams::seeded(dim, rng);

        const Matrix w = frequency_gate_weights(m, g);
        const auto pooled = frequency_gated_pool(m, g);
        for (std::size_t t = 0; t < steps; ++t) {
            double sum = 0.0;
            for (std::size_t f = 0; f < 4; ++f) {
                CHECK(w.at(t, f) >= 0.0);
                sum += w.at(t, f);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);

            for (std::size_t d = 0; d < dim; ++d) {
                double lo = m.at(t, 0, d), hi = m.at(t, 0, d);
                for (std::size_t f = 1; f < 4; ++f) {
                    lo = std::min(lo, m.at(t, f, d));
                    hi = std::max(hi, m.at(t, f, d));
                }
                CHECK(pooled.features.at(t, d) >= lo - 1e-9);
                CHECK(pooled.features.at(t, d) <= hi + 1e-9);
            }
        }
    }
}

TEST_CASE("pooling is equivariant under band permutation") {
    Rng rng(17);
    const auto m = random_map(rng, 5, 4, 7);
    const GateParams g = GateParams::seeded(7, rng);

    BandedFeatureMap permuted = m;
    const std::size_t perm[4] = {2, 0, 3, 1};
    for (std::size_t t = 0; t < m.steps; ++t)
        for (std::size_t f = 0; f < 4; ++f)
            for (std::size_t d = 0; d < m.dim; ++d)
                permuted.at(t, f, d) = m.at(t, perm[f], d);

    const auto a = frequency_gated_pool(m, g);
    const auto b = frequency_gated_pool(permuted, g);
    CHECK(max_abs_diff(a.features, b.features) <= 1e-12);
}

TEST_CASE("pooling matches the plain-loop oracle") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_map(rng, 3, 4, 6, 2.0);
        const GateParams g = GateParams::seeded(6, rng);
        const auto pooled = frequency_gated_pool(m, g);
        CHECK(max_abs_diff(pooled.features, oracle_pool(m, g)) <= 1e-12);
    }
}

TEST_CASE("cascade with zero value projections double-normalizes the query stream") {
    Rng rng(23);
    AggregatorParams p = AggregatorParams::seeded(8, 2, rng);
    p.attn_stage1.value = Matrix(8, 8);
    p.attn_stage2.value = Matrix(8, 8);

    const auto final_seq = random_sequence(rng, 4, 8);
    const auto middle_seq = random_sequence(rng, 6, 8);
    const auto shallow_seq = random_sequence(rng, 9, 8);
    const auto out = cascaded_fuse(final_seq, middle_seq, shallow_seq, p);

    REQUIRE(out.steps() == 4);
    CHECK(out.timeline == final_seq.timeline);
    for (std::size_t t = 0; t < 4; ++t) {
        std::vector<double> row(8);
        for (std::size_t d = 0; d < 8; ++d) row[d] = final_seq.features.at(t, d);
        const auto expected = oracle_layer_norm(oracle_layer_norm(row));
        for (std::size_t d = 0; d < 8; ++d)
            CHECK(std::abs(out.features.at(t, d) - expected[d]) <= 1e-12);
    }
}

TEST_CASE("cascade output follows the query stream length") {
    Rng rng(29);
    const AggregatorParams p = AggregatorParams::seeded(4, 2, rng);
    const auto out = cascaded_fuse(random_sequence(rng, 3, 4), random_sequence(rng, 5, 4),
                                   random_sequence(rng, 7, 4), p);
    CHECK(out.steps() == 3);
    CHECK(out.dim() == 4);
}

TEST_CASE("single-head cascade matches the plain-loop oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const AggregatorParams p = AggregatorParams::seeded(3, 1, rng);
        const auto f = random_sequence(rng, 2, 3);
        const auto m = random_sequence(rng, 4, 3);
        const auto s = random_sequence(rng, 5, 3);
        const auto out = cascaded_fuse(f, m, s, p);
        const auto expected = oracle_cascade(f.features, m.features, s.features, p);
        CHECK(max_abs_diff(out.features, expected) <= 1e-12);
    }
}

TEST_CASE("full aggregation matches a step-by-step oracle") {
    Rng rng(37);
    AggregatorParams p = AggregatorParams::seeded(2, 1, rng);

    CedLayers layers;
    layers.layer4 = random_map(rng, 2, 2, 2);
    layers.layer8 = random_map(rng, 2, 2, 2);
    layers.layer_final = random_map(rng, 2, 2, 2);
    layers.layer4.layer_id = 4;
    layers.layer8.layer_id = 8;
    layers.layer_final.layer_id = 12;
    layers.timeline = layers.layer_final.timeline;

    const auto out = aggregate(layers, p);
    const auto expected =
        oracle_cascade(oracle_pool(layers.layer_final, p.gate_final),
                       oracle_pool(layers.layer8, p.gate8),
                       oracle_pool(layers.layer4, p.gate4), p);
    CHECK(max_abs_diff(out.features, expected) <= 1e-12);
    CHECK(out.timeline == layers.timeline);
}

TEST_CASE("gate parameter gradients match finite differences") {
    Rng rng(43);
    for (int trial = 0; trial < 5; ++trial) {
        const auto m = random_map(rng, 3, 4, 4);
        const GateParams g = GateParams::seeded(4, rng);
        Matrix d_out(3, 4);
        for (auto& v : d_out.data) v = rng.normal();

        const GateGrads grads = frequency_gated_pool_param_grads(m, g, d_out);
        std::vector<double> analytic = grads.d_weight;
        analytic.push_back(grads.d_bias);

        std::vector<double> theta = g.weight;
        theta.push_back(g.bias);
        const auto numeric = finite_diff_gradient(
            [&](const std::vector<double>& t) {
                GateParams probe;
                probe.weight.assign(t.begin(), t.end() - 1);
                probe.bias = t.back();
                const auto pooled = frequency_gated_pool(m, probe);
                double loss = 0.0;
                for (std::size_t i = 0; i < pooled.features.data.size(); ++i)
                    loss += d_out.data[i] * pooled.features.data[i];
                return loss;
            },
            theta, 1e-5);
        CHECK(gradient_relative_error(analytic, numeric) <= 1e-6);
    }
}

TEST_CASE("aggregator parameter validation") {
    Rng rng(47);
    AggregatorParams p = AggregatorParams::seeded(8, 2, rng);
    CHECK_NOTHROW(p.validate());

    AggregatorParams bad_gate = p;
    bad_gate.gate8.weight.pop_back();
    CHECK_THROWS_AS(bad_gate.validate(), std::invalid_argument);

    AggregatorParams bad_attn = p;
    bad_attn.attn_stage2.query = Matrix(4, 4);
    CHECK_THROWS_AS(bad_attn.validate(), std::invalid_argument);
}
