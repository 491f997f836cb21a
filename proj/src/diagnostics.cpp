#include "eva/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "eva/numerics.hpp"

namespace eva {

BandMask BandMask::parse(const std::string& csv) {
    BandMask mask;
    std::size_t band = 0;
    std::stringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (band >= mask.keep.size()) throw std::invalid_argument("band mask needs 4 entries");
        if (tok == "1") {
            mask.keep[band] = true;
        } else if (tok == "0") {
            mask.keep[band] = false;
        } else {
            throw std::invalid_argument("band mask entries must be 0 or 1");
        }
        ++band;
    }
    if (band != mask.keep.size()) throw std::invalid_argument("band mask needs 4 entries");
    return mask;
}

std::string BandMask::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (i) out += ',';
        out += keep[i] ? '1' : '0';
    }
    return out;
}

BandedFeatureMap band_mask_apply(const BandedFeatureMap& m, const BandMask& mask) {
    if (m.bands != mask.keep.size()) {
        throw std::invalid_argument("band mask expects exactly 4 bands");
    }
    BandedFeatureMap out = m;
    for (std::size_t f = 0; f < out.bands; ++f) {
        if (mask.keep[f]) continue;
        for (std::size_t t = 0; t < out.steps; ++t) {
            for (std::size_t d = 0; d < out.dim; ++d) out.at(t, f, d) = 0.0;
        }
    }
    return out;
}

CedLayers band_mask_apply(const CedLayers& layers, const BandMask& mask) {
    CedLayers out;
    out.layer4 = band_mask_apply(layers.layer4, mask);
    out.layer8 = band_mask_apply(layers.layer8, mask);
    out.layer_final = band_mask_apply(layers.layer_final, mask);
    out.timeline = layers.timeline;
    return out;
}

double detection_score(const Matrix& features, const std::vector<double>& signature) {
    if (features.cols != signature.size()) {
        throw std::invalid_argument("signature dim mismatch");
    }
    double sig_norm = 0.0;
    for (double s : signature) sig_norm += s * s;
    sig_norm = std::sqrt(sig_norm);
    if (sig_norm == 0.0) throw std::invalid_argument("signature must be nonzero");

    double best = 0.0;
    for (std::size_t t = 0; t < features.rows; ++t) {
        auto row = features.row(t);
        double dot = 0.0, norm = 0.0;
        for (std::size_t d = 0; d < row.size(); ++d) {
            dot += row[d] * signature[d];
            norm += row[d] * row[d];
        }
        if (norm == 0.0) continue;
        best = std::max(best, dot / (std::sqrt(norm) * sig_norm));
    }
    return best;
}

std::vector<std::pair<std::string, BandMask>> ablation_configurations() {
    std::vector<std::pair<std::string, BandMask>> configs;
    for (std::size_t b = 0; b < 4; ++b) {
        BandMask mask;
        mask.keep[b] = false;
        configs.emplace_back("mask band " + std::to_string(b), mask);
    }
    configs.emplace_back("mask 0-4 kHz", BandMask{{false, false, true, true}});
    configs.emplace_back("mask 4-8 kHz", BandMask{{true, true, false, false}});
    for (std::size_t b = 0; b < 4; ++b) {
        BandMask mask{{false, false, false, false}};
        mask.keep[b] = true;
        configs.emplace_back("keep band " + std::to_string(b), mask);
    }
    configs.emplace_back("full 0-8 kHz", BandMask{});
    return configs;
}

AblationReport run_band_ablation(const PipelineConfig& cfg) {
    const PipelineInputs inputs = generate_inputs(cfg);
    const PipelineParams params = params_from_config(cfg);
    const PipelineOptions opts = options_from_config(cfg);
    const auto events = assign_event_signatures(cfg.events, cfg.seed, cfg.dim_ced);

    AblationReport report;
    report.seed = cfg.seed;
    for (const auto& [name, mask] : ablation_configurations()) {
        PipelineInputs masked = inputs;
        masked.ced = band_mask_apply(inputs.ced, mask);
        const PipelineRun run = run_pipeline(masked, params, opts);

        AblationConfigResult result;
        result.name = name;
        result.mask = mask;
        for (const auto& ev : events) {
            result.detection.push_back(detection_score(run.aggregated.features, ev.signature));
        }
        if (!result.detection.empty()) {
            result.mean_detection =
                std::accumulate(result.detection.begin(), result.detection.end(), 0.0) /
                static_cast<double>(result.detection.size());
        }
        const auto& agg = run.aggregated.features;
        double energy = 0.0;
        for (double x : agg.data) energy += x * x;
        result.energy = agg.data.empty() ? 0.0 : energy / static_cast<double>(agg.data.size());
        result.fused_length = run.fused.steps();
        report.configs.push_back(std::move(result));
    }
    return report;
}

nlohmann::json ablation_to_json(const AblationReport& r) {
    nlohmann::json configs = nlohmann::json::array();
    for (const auto& c : r.configs) {
        nlohmann::json keep = nlohmann::json::array();
        for (bool k : c.mask.keep) keep.push_back(k ? 1 : 0);
        configs.push_back({{"name", c.name},
                           {"keep_mask", keep},
                           {"detection", c.detection},
                           {"mean_detection", c.mean_detection},
                           {"energy", c.energy},
                           {"fused_length", c.fused_length}});
    }
    return {{"configs", configs}, {"seed", r.seed}};
}

std::string ablation_to_text(const AblationReport& r) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %-9s %12s %12s %8s\n", "config", "keep",
                  "mean_detect", "energy", "fused_T");
    out << line;
    for (const auto& c : r.configs) {
        std::snprintf(line, sizeof(line), "%-14s %-9s %12.6f %12.6f %8zu\n", c.name.c_str(),
                      c.mask.to_string().c_str(), c.mean_detection, c.energy, c.fused_length);
        out << line;
    }
    return out.str();
}

std::vector<LengthRow> sequence_length_report(const std::vector<std::size_t>& lengths,
                                              const QFormerParams& qf) {
    qf.validate();
    std::vector<LengthRow> rows;
    for (std::size_t t : lengths) {
        if (t == 0) throw std::invalid_argument("sequence length must be >= 1");
        LengthRow row;
        row.input_length = t;
        row.fused_length = t;  // fusion is length-neutral
        row.compressed_length = qformer_output_length(t, qf);
        row.ratio = static_cast<double>(row.compressed_length) /
                    static_cast<double>(row.fused_length);
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json length_report_to_json(const std::vector<LengthRow>& rows,
                                     const QFormerParams& qf) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({{"input_length", r.input_length},
                       {"fused_length", r.fused_length},
                       {"compressed_length", r.compressed_length},
                       {"ratio", r.ratio}});
    }
    return {{"window", qf.window}, {"num_queries", qf.num_queries}, {"rows", out}};
}

std::string length_report_to_text(const std::vector<LengthRow>& rows) {
    std::ostringstream out;
    char line[120];
    std::snprintf(line, sizeof(line), "%8s %8s %12s %8s\n", "input", "fused", "compressed",
                  "ratio");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%8zu %8zu %12zu %8.4f\n", r.input_length,
                      r.fused_length, r.compressed_length, r.ratio);
        out << line;
    }
    return out.str();
}

std::vector<GradientCheckRow> gradient_report(const PipelineConfig& cfg, double h,
                                              double tolerance) {
    const PipelineInputs inputs = generate_inputs(cfg);
    const PipelineParams params = params_from_config(cfg);
    const PipelineOptions opts = options_from_config(cfg);

    std::vector<GradientCheckRow> rows;
    for (ParamGroup group : kAllParamGroups) {
        const GroupGradients g = gradient_check_group(inputs, params, group, opts, h);
        GradientCheckRow row;
        row.name = param_group_name(group);
        row.max_rel_error = gradient_relative_error(g.analytic, g.numeric);
        row.pass = row.max_rel_error <= tolerance;
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json gradient_report_to_json(const std::vector<GradientCheckRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    bool all_pass = true;
    for (const auto& r : rows) {
        all_pass = all_pass && r.pass;
        out.push_back({{"name", r.name},
                       {"max_rel_error", r.max_rel_error},
                       {"pass", r.pass}});
    }
    return {{"all_pass", all_pass}, {"groups", out}};
}

std::string gradient_report_to_text(const std::vector<GradientCheckRow>& rows) {
    std::ostringstream out;
    char line[120];
    std::snprintf(line, sizeof(line), "%-12s %14s  %s\n", "group", "max_rel_error", "status");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-12s %14.3e  %s\n", r.name.c_str(),
                      r.max_rel_error, r.pass ? "PASS" : "FAIL");
        out << line;
    }
    return out.str();
}

}  // namespace eva
