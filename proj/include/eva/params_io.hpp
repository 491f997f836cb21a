#pragma once

#include <filesystem>

#include "eva/pipeline.hpp"

namespace eva {

// Parameter checkpoint: JSON with one named flat array per tensor plus its
// shape. The loader rejects shape mismatches, both against the stored
// metadata and across arrays.
void save_params(const std::filesystem::path& path, const PipelineParams& params);
PipelineParams load_params(const std::filesystem::path& path);

// Additionally checks the checkpoint against configured dimensions.
PipelineParams load_params(const std::filesystem::path& path, const PipelineConfig& expect);

}  // namespace eva
