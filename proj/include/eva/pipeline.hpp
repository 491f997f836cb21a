#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eva/aggregator.hpp"
#include "eva/alignment.hpp"
#include "eva/config.hpp"
#include "eva/feature_model.hpp"
#include "eva/fusion.hpp"

namespace eva {

struct PipelineParams {
    AggregatorParams aggregator;
    FusionParams fusion;

    void validate() const;
    static PipelineParams seeded(std::uint64_t seed, std::size_t dim_ced,
                                 std::size_t dim_whisper, std::size_t dim_llm,
                                 std::size_t num_heads, double alpha_init);
};

struct PipelineInputs {
    CedLayers ced;
    WhisperFeatures whisper;
};

struct PipelineOptions {
    bool mask_ced = false;  // drop the aggregated branch from fusion entirely
    InterpConfig interp;
};

// Synthesizes both encoder stand-ins from the config, with event
// signatures derived from the seed.
PipelineInputs generate_inputs(const PipelineConfig& cfg);
PipelineParams params_from_config(const PipelineConfig& cfg);
PipelineOptions options_from_config(const PipelineConfig& cfg, bool mask_ced = false);

// Forward intermediates. The aggregated/aligned members stay empty when
// the run masks the aggregated branch.
struct PipelineRun {
    TemporalSequence pooled_final;
    TemporalSequence pooled_middle;
    TemporalSequence pooled_shallow;
    CascadeTrace cascade;
    TemporalSequence aggregated;
    InterpTrace interp;
    TemporalSequence aligned;
    TemporalSequence fused;
};

PipelineRun run_pipeline(const PipelineInputs& inputs, const PipelineParams& params,
                         const PipelineOptions& opts = {});

// Scalar diagnostic loss: half the squared Frobenius norm of the fused output.
double pipeline_loss(const PipelineInputs& inputs, const PipelineParams& params,
                     const PipelineOptions& opts = {});

struct PipelineGrads {
    double d_alpha = 0.0;
    GateGrads d_gate4;
    GateGrads d_gate8;
    GateGrads d_gate_final;
    AffineGrads d_proj_w;
    AffineGrads d_proj_c;
};

// Analytic gradients of pipeline_loss wrt the trainable parameter groups,
// backpropagated through fusion, interpolation, both attention stages and
// the band gates.
PipelineGrads pipeline_loss_gradients(const PipelineInputs& inputs,
                                      const PipelineParams& params,
                                      const PipelineOptions& opts = {});

enum class ParamGroup { alpha, gate4, gate8, gate_final, proj_w, proj_c };

inline constexpr ParamGroup kAllParamGroups[] = {
    ParamGroup::alpha,   ParamGroup::gate4,  ParamGroup::gate8,
    ParamGroup::gate_final, ParamGroup::proj_w, ParamGroup::proj_c,
};

std::string param_group_name(ParamGroup group);

// Flat views of one parameter group, for finite differencing. Gates and
// affine maps append their bias after the flattened weight.
std::vector<double> param_group_values(const PipelineParams& params, ParamGroup group);
void set_param_group(PipelineParams& params, ParamGroup group,
                     const std::vector<double>& values);
std::vector<double> param_group_gradient(const PipelineGrads& grads, ParamGroup group);

struct GroupGradients {
    std::vector<double> analytic;
    std::vector<double> numeric;
};

// Analytic vs central-difference gradients for one group.
GroupGradients gradient_check_group(const PipelineInputs& inputs,
                                    const PipelineParams& params, ParamGroup group,
                                    const PipelineOptions& opts, double h);

}  // namespace eva
