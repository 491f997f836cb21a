#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eva/feature_model.hpp"

namespace eva {

// Everything a run needs to be reproducible. Flags may override single
// fields; the effective config is echoed into every manifest.
struct PipelineConfig {
    int version = 1;
    std::uint64_t seed = 1;
    double duration_s = 1.6;
    std::size_t dim_ced = 32;
    std::size_t dim_whisper = 32;
    std::size_t dim_llm = 64;
    std::size_t num_heads = 4;
    double alpha_init = 0.01;
    double interp_eps = 1e-8;
    CedSynthConfig synth;
    std::vector<PlantedEvent> events;  // signatures are derived from the seed later

    void validate() const;
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& c);
PipelineConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string to_hex(std::uint64_t value);

// FNV-1a of the canonical JSON dump, as fixed-width hex.
std::string config_hash(const PipelineConfig& c);

}  // namespace eva
