#include "eva/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eva {

void InterpConfig::validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw std::invalid_argument("interp eps must be a positive finite real");
    }
}

std::vector<double> whisper_centers(std::size_t count, int step_mel, int center_mel) {
    std::vector<double> centers(count);
    for (std::size_t k = 0; k < count; ++k) {
        centers[k] = static_cast<double>(k) * step_mel + center_mel;
    }
    return centers;
}

std::vector<double> coverage_weights(const std::vector<long>& starts,
                                     const std::vector<long>& ends,
                                     long t_sz, long T_mel) {
    if (t_sz <= 0) throw std::invalid_argument("coverage window size must be positive");
    if (starts.size() != ends.size()) {
        throw std::invalid_argument("coverage starts/ends length mismatch");
    }
    std::vector<double> weights(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        if (ends[i] < starts[i]) throw std::invalid_argument("coverage window end before start");
        long valid = std::min(ends[i], T_mel - 1) - starts[i] + 1;
        weights[i] = static_cast<double>(std::max(0L, valid)) / static_cast<double>(t_sz);
    }
    return weights;
}

TemporalSequence time_aware_interpolate(const TemporalSequence& source,
                                        const std::vector<double>& target_centers,
                                        const InterpConfig& cfg, InterpTrace* trace) {
    cfg.validate();
    source.validate();
    const std::size_t src_steps = source.steps();
    if (src_steps == 0) throw std::invalid_argument("cannot interpolate an empty sequence");
    if (!std::is_sorted(target_centers.begin(), target_centers.end())) {
        throw std::invalid_argument("target centers must be monotone");
    }
    const std::size_t dim = source.dim();
    const std::size_t out_steps = target_centers.size();

    TemporalSequence out;
    out.features = Matrix(out_steps, dim);
    out.timeline.centers = target_centers;
    out.timeline.coverage.assign(out_steps, 1.0);
    if (trace) {
        trace->left.assign(out_steps, 0);
        trace->right.assign(out_steps, 0);
        trace->alpha.assign(out_steps, 0.0);
        trace->denom.assign(out_steps, 0.0);
        trace->degenerate = (src_steps == 1);
    }

    if (src_steps == 1) {
        for (std::size_t k = 0; k < out_steps; ++k) {
            std::copy_n(source.features.row(0).begin(), dim, out.features.row(k).begin());
        }
        return out;
    }

    const auto& t_src = source.timeline.centers;
    const auto& cov = source.timeline.coverage;
    for (std::size_t k = 0; k < out_steps; ++k) {
        auto it = std::lower_bound(t_src.begin(), t_src.end(), target_centers[k]);
        std::size_t r = static_cast<std::size_t>(it - t_src.begin());
        r = std::clamp<std::size_t>(r, 1, src_steps - 1);
        std::size_t l = r - 1;
        double alpha = (target_centers[k] - t_src[l]) / (t_src[r] - t_src[l] + cfg.eps);
        alpha = std::clamp(alpha, 0.0, 1.0);

        const double wl = (1.0 - alpha) * cov[l];
        const double wr = alpha * cov[r];
        const double denom = wl + wr + cfg.eps;
        auto x_l = source.features.row(l);
        auto x_r = source.features.row(r);
        auto y = out.features.row(k);
        for (std::size_t d = 0; d < dim; ++d) {
            y[d] = (wl * x_l[d] + wr * x_r[d]) / denom;
        }
        if (trace) {
            trace->left[k] = l;
            trace->right[k] = r;
            trace->alpha[k] = alpha;
            trace->denom[k] = denom;
        }
    }
    return out;
}

Matrix interpolate_input_grad(const Matrix& d_out, const TemporalSequence& source,
                              const InterpTrace& trace) {
    const std::size_t dim = source.dim();
    if (d_out.cols != dim) throw std::invalid_argument("interp grad dim mismatch");
    Matrix d_src(source.steps(), dim);

    if (trace.degenerate) {
        for (std::size_t k = 0; k < d_out.rows; ++k) {
            auto g = d_out.row(k);
            auto acc = d_src.row(0);
            for (std::size_t d = 0; d < dim; ++d) acc[d] += g[d];
        }
        return d_src;
    }

    if (trace.left.size() != d_out.rows) throw std::invalid_argument("interp trace length mismatch");
    const auto& cov = source.timeline.coverage;
    for (std::size_t k = 0; k < d_out.rows; ++k) {
        const double alpha = trace.alpha[k];
        const double scale_l = (1.0 - alpha) * cov[trace.left[k]] / trace.denom[k];
        const double scale_r = alpha * cov[trace.right[k]] / trace.denom[k];
        auto g = d_out.row(k);
        auto acc_l = d_src.row(trace.left[k]);
        auto acc_r = d_src.row(trace.right[k]);
        for (std::size_t d = 0; d < dim; ++d) {
            acc_l[d] += scale_l * g[d];
            acc_r[d] += scale_r * g[d];
        }
    }
    return d_src;
}

}  // namespace eva
