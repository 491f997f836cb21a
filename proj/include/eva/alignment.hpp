#pragma once

#include <cstddef>
#include <vector>

#include "eva/feature_model.hpp"
#include "eva/matrix.hpp"

namespace eva {

struct InterpConfig {
    double eps = 1e-8;

    void validate() const;
};

// Target timestamps of the fine stream: t[k] = k * step_mel + center_mel.
std::vector<double> whisper_centers(std::size_t count, int step_mel, int center_mel);

// Fraction of each analysis window [start, end] that overlaps the valid
// mel range [0, T_mel). Windows hanging past the end get partial weight.
std::vector<double> coverage_weights(const std::vector<long>& starts,
                                     const std::vector<long>& ends,
                                     long t_sz, long T_mel);

// Per-target blend state, kept so the backward pass can re-walk the
// forward decisions without re-running the search.
struct InterpTrace {
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    std::vector<double> alpha;
    std::vector<double> denom;
    bool degenerate = false;  // source had a single step: pure repeat
};

// Coverage-weighted linear interpolation of a sequence onto new target
// centers. A single-step source is repeated verbatim. Otherwise each
// target blends its two bracketing source steps, weighting each side by
// its coverage and renormalizing:
//   out = ((1-a) c_l x_l + a c_r x_r) / ((1-a) c_l + a c_r + eps)
TemporalSequence time_aware_interpolate(const TemporalSequence& source,
                                        const std::vector<double>& target_centers,
                                        const InterpConfig& cfg = {},
                                        InterpTrace* trace = nullptr);

// Gradient of a scalar loss wrt the source features given the gradient
// wrt the interpolated output. Coverage and timestamps are constants.
Matrix interpolate_input_grad(const Matrix& d_out, const TemporalSequence& source,
                              const InterpTrace& trace);

}  // namespace eva
