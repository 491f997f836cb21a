#include "eva/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

#include "eva/numerics.hpp"
#include "eva/rng.hpp"

namespace eva {

void PipelineParams::validate() const {
    aggregator.validate();
    fusion.validate();
    if (fusion.proj_c.in_dim() != aggregator.attn_stage1.model_dim) {
        throw std::invalid_argument("aggregated projection dim mismatch");
    }
}

PipelineParams PipelineParams::seeded(std::uint64_t seed, std::size_t dim_ced,
                                      std::size_t dim_whisper, std::size_t dim_llm,
                                      std::size_t num_heads, double alpha_init) {
    Rng agg_rng = Rng::substream(seed, 501);
    Rng fusion_rng = Rng::substream(seed, 502);
    PipelineParams p;
    p.aggregator = AggregatorParams::seeded(dim_ced, num_heads, agg_rng);
    p.fusion.proj_w = AffineMap::seeded(dim_whisper, dim_llm, fusion_rng);
    p.fusion.proj_c = AffineMap::seeded(dim_ced, dim_llm, fusion_rng);
    p.fusion.alpha = alpha_init;
    return p;
}

PipelineInputs generate_inputs(const PipelineConfig& cfg) {
    cfg.validate();
    const auto events = assign_event_signatures(cfg.events, cfg.seed, cfg.dim_ced);
    PipelineInputs inputs;
    inputs.ced = synth_ced_features(cfg.seed, cfg.duration_s, cfg.dim_ced, events, cfg.synth);
    inputs.whisper = synth_whisper_features(cfg.seed, cfg.duration_s, cfg.dim_whisper,
                                            cfg.dim_llm, cfg.synth.strides);
    return inputs;
}

PipelineParams params_from_config(const PipelineConfig& cfg) {
    cfg.validate();
    return PipelineParams::seeded(cfg.seed, cfg.dim_ced, cfg.dim_whisper, cfg.dim_llm,
                                  cfg.num_heads, cfg.alpha_init);
}

PipelineOptions options_from_config(const PipelineConfig& cfg, bool mask_ced) {
    PipelineOptions opts;
    opts.mask_ced = mask_ced;
    opts.interp.eps = cfg.interp_eps;
    return opts;
}

PipelineRun run_pipeline(const PipelineInputs& inputs, const PipelineParams& params,
                         const PipelineOptions& opts) {
    params.validate();
    PipelineRun run;
    const AudioMask mask = AudioMask::all(inputs.whisper.tokens.steps());

    if (opts.mask_ced) {
        run.fused = inject_and_add(inputs.whisper.tokens, inputs.whisper.encoder, mask,
                                   params.fusion);
        return run;
    }

    run.pooled_final = frequency_gated_pool(inputs.ced.layer_final, params.aggregator.gate_final);
    run.pooled_middle = frequency_gated_pool(inputs.ced.layer8, params.aggregator.gate8);
    run.pooled_shallow = frequency_gated_pool(inputs.ced.layer4, params.aggregator.gate4);
    run.aggregated = cascaded_fuse(run.pooled_final, run.pooled_middle, run.pooled_shallow,
                                   params.aggregator, &run.cascade);
    run.aligned = time_aware_interpolate(run.aggregated, inputs.whisper.tokens.timeline.centers,
                                         opts.interp, &run.interp);
    run.fused = inject_and_add(inputs.whisper.tokens, inputs.whisper.encoder, run.aligned,
                               mask, params.fusion);
    return run;
}

double pipeline_loss(const PipelineInputs& inputs, const PipelineParams& params,
                     const PipelineOptions& opts) {
    const PipelineRun run = run_pipeline(inputs, params, opts);
    double acc = 0.0;
    for (double x : run.fused.features.data) acc += x * x;
    return 0.5 * acc;
}

PipelineGrads pipeline_loss_gradients(const PipelineInputs& inputs,
                                      const PipelineParams& params,
                                      const PipelineOptions& opts) {
    if (opts.mask_ced) {
        throw std::invalid_argument("gradients need the aggregated branch active");
    }
    const PipelineRun run = run_pipeline(inputs, params, opts);
    const AudioMask mask = AudioMask::all(inputs.whisper.tokens.steps());

    // d(loss)/d(fused) of the half squared norm is the fused output itself.
    const Matrix& d_fused = run.fused.features;
    FusionGrads fusion_grads =
        inject_and_add_grads(inputs.whisper.tokens, inputs.whisper.encoder, run.aligned,
                             mask, params.fusion, d_fused);

    Matrix d_aggregated =
        interpolate_input_grad(fusion_grads.d_aligned, run.aggregated, run.interp);

    CascadeInputGrads cascade_grads = cascaded_fuse_input_grads(
        run.pooled_final, run.pooled_middle, run.pooled_shallow, params.aggregator,
        run.cascade, d_aggregated);

    PipelineGrads grads;
    grads.d_alpha = fusion_grads.d_alpha;
    grads.d_proj_w = std::move(fusion_grads.d_proj_w);
    grads.d_proj_c = std::move(fusion_grads.d_proj_c);
    grads.d_gate_final = frequency_gated_pool_param_grads(
        inputs.ced.layer_final, params.aggregator.gate_final, cascade_grads.d_final);
    grads.d_gate8 = frequency_gated_pool_param_grads(
        inputs.ced.layer8, params.aggregator.gate8, cascade_grads.d_middle);
    grads.d_gate4 = frequency_gated_pool_param_grads(
        inputs.ced.layer4, params.aggregator.gate4, cascade_grads.d_shallow);
    return grads;
}

std::string param_group_name(ParamGroup group) {
    switch (group) {
        case ParamGroup::alpha: return "alpha";
        case ParamGroup::gate4: return "gate4";
        case ParamGroup::gate8: return "gate8";
        case ParamGroup::gate_final: return "gate_final";
        case ParamGroup::proj_w: return "proj_w";
        case ParamGroup::proj_c: return "proj_c";
    }
    throw std::invalid_argument("unknown parameter group");
}

namespace {

std::vector<double> flatten_gate(const GateParams& g) {
    std::vector<double> flat = g.weight;
    flat.push_back(g.bias);
    return flat;
}

void unflatten_gate(GateParams& g, const std::vector<double>& flat) {
    if (flat.size() != g.weight.size() + 1) throw std::invalid_argument("gate size mismatch");
    std::copy_n(flat.begin(), g.weight.size(), g.weight.begin());
    g.bias = flat.back();
}

std::vector<double> flatten_affine(const Matrix& weight, const std::vector<double>& bias) {
    std::vector<double> flat = weight.data;
    flat.insert(flat.end(), bias.begin(), bias.end());
    return flat;
}

void unflatten_affine(AffineMap& m, const std::vector<double>& flat) {
    if (flat.size() != m.weight.data.size() + m.bias.size()) {
        throw std::invalid_argument("affine size mismatch");
    }
    std::copy_n(flat.begin(), m.weight.data.size(), m.weight.data.begin());
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(m.weight.data.size()),
                m.bias.size(), m.bias.begin());
}

}  // namespace

std::vector<double> param_group_values(const PipelineParams& params, ParamGroup group) {
    switch (group) {
        case ParamGroup::alpha: return {params.fusion.alpha};
        case ParamGroup::gate4: return flatten_gate(params.aggregator.gate4);
        case ParamGroup::gate8: return flatten_gate(params.aggregator.gate8);
        case ParamGroup::gate_final: return flatten_gate(params.aggregator.gate_final);
        case ParamGroup::proj_w:
            return flatten_affine(params.fusion.proj_w.weight, params.fusion.proj_w.bias);
        case ParamGroup::proj_c:
            return flatten_affine(params.fusion.proj_c.weight, params.fusion.proj_c.bias);
    }
    throw std::invalid_argument("unknown parameter group");
}

void set_param_group(PipelineParams& params, ParamGroup group,
                     const std::vector<double>& values) {
    switch (group) {
        case ParamGroup::alpha:
            if (values.size() != 1) throw std::invalid_argument("alpha takes one value");
            params.fusion.alpha = values[0];
            return;
        case ParamGroup::gate4: unflatten_gate(params.aggregator.gate4, values); return;
        case ParamGroup::gate8: unflatten_gate(params.aggregator.gate8, values); return;
        case ParamGroup::gate_final:
            unflatten_gate(params.aggregator.gate_final, values);
            return;
        case ParamGroup::proj_w: unflatten_affine(params.fusion.proj_w, values); return;
        case ParamGroup::proj_c: unflatten_affine(params.fusion.proj_c, values); return;
    }
    throw std::invalid_argument("unknown parameter group");
}

std::vector<double> param_group_gradient(const PipelineGrads& grads, ParamGroup group) {
    switch (group) {
        case ParamGroup::alpha: return {grads.d_alpha};
        case ParamGroup::gate4: return flatten_gate({grads.d_gate4.d_weight, grads.d_gate4.d_bias});
        case ParamGroup::gate8: return flatten_gate({grads.d_gate8.d_weight, grads.d_gate8.d_bias});
        case ParamGroup::gate_final:
            return flatten_gate({grads.d_gate_final.d_weight, grads.d_gate_final.d_bias});
        case ParamGroup::proj_w:
            return flatten_affine(grads.d_proj_w.d_weight, grads.d_proj_w.d_bias);
        case ParamGroup::proj_c:
            return flatten_affine(grads.d_proj_c.d_weight, grads.d_proj_c.d_bias);
    }
    throw std::invalid_argument("unknown parameter group");
}

GroupGradients gradient_check_group(const PipelineInputs& inputs,
                                    const PipelineParams& params, ParamGroup group,
                                    const PipelineOptions& opts, double h) {
    GroupGradients out;
    out.analytic = param_group_gradient(pipeline_loss_gradients(inputs, params, opts), group);

    const auto loss_at = [&](const std::vector<double>& theta) {
        PipelineParams perturbed = params;
        set_param_group(perturbed, group, theta);
        return pipeline_loss(inputs, perturbed, opts);
    };
    out.numeric = finite_diff_gradient(loss_at, param_group_values(params, group), h);
    return out;
}

}  // namespace eva
