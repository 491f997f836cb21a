#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eva/feature_model.hpp"
#include "eva/fusion.hpp"
#include "eva/pipeline.hpp"

namespace eva {

struct BandMask {
    std::array<bool, 4> keep{true, true, true, true};

    static BandMask parse(const std::string& csv);  // "1,0,1,1"
    std::string to_string() const;
    bool operator==(const BandMask& other) const = default;
};

// Zeroes the dropped bands. Applied upstream of the aggregator.
BandedFeatureMap band_mask_apply(const BandedFeatureMap& m, const BandMask& mask);
CedLayers band_mask_apply(const CedLayers& layers, const BandMask& mask);

// Max over time of the cosine between a feature row and the signature.
double detection_score(const Matrix& features, const std::vector<double>& signature);

struct AblationConfigResult {
    std::string name;
    BandMask mask;
    std::vector<double> detection;  // one score per planted event
    double mean_detection = 0.0;
    double energy = 0.0;  // mean square of the aggregated output
    std::size_t fused_length = 0;
};

struct AblationReport {
    std::uint64_t seed = 0;
    std::vector<AblationConfigResult> configs;
};

// The 11 standard configurations: mask each single band, mask the lower
// and upper halves, keep each single band, and the full range.
std::vector<std::pair<std::string, BandMask>> ablation_configurations();

// Runs the pipeline once per configuration with shared parameters and
// scores every planted event against the aggregated output.
AblationReport run_band_ablation(const PipelineConfig& cfg);

nlohmann::json ablation_to_json(const AblationReport& r);
std::string ablation_to_text(const AblationReport& r);

struct LengthRow {
    std::size_t input_length = 0;
    std::size_t fused_length = 0;
    std::size_t compressed_length = 0;
    double ratio = 0.0;  // compressed / fused
};

// Length-neutral fusion vs window compression, per requested length.
std::vector<LengthRow> sequence_length_report(const std::vector<std::size_t>& lengths,
                                              const QFormerParams& qf);

nlohmann::json length_report_to_json(const std::vector<LengthRow>& rows,
                                     const QFormerParams& qf);
std::string length_report_to_text(const std::vector<LengthRow>& rows);

struct GradientCheckRow {
    std::string name;
    double max_rel_error = 0.0;
    bool pass = false;
};

// Analytic vs finite-difference gradients for every trainable group.
std::vector<GradientCheckRow> gradient_report(const PipelineConfig& cfg, double h = 1e-4,
                                              double tolerance = 1e-4);

nlohmann::json gradient_report_to_json(const std::vector<GradientCheckRow>& rows);
std::string gradient_report_to_text(const std::vector<GradientCheckRow>& rows);

}  // namespace eva
