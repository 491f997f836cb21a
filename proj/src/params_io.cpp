#include "eva/params_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace eva {

namespace {

using nlohmann::json;

json matrix_entry(const Matrix& m) {
    return {{"shape", {m.rows, m.cols}}, {"data", m.data}};
}

json vector_entry(const std::vector<double>& v) {
    return {{"shape", {v.size()}}, {"data", v}};
}

Matrix matrix_from(const json& arrays, const std::string& name) {
    const auto& entry = arrays.at(name);
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw std::invalid_argument(name + ": expected a rank-2 shape");
    Matrix m(shape[0], shape[1]);
    m.data = entry.at("data").get<std::vector<double>>();
    if (m.data.size() != shape[0] * shape[1]) {
        throw std::invalid_argument(name + ": data does not match its declared shape");
    }
    return m;
}

std::vector<double> vector_from(const json& arrays, const std::string& name) {
    const auto& entry = arrays.at(name);
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 1) throw std::invalid_argument(name + ": expected a rank-1 shape");
    auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != shape[0]) {
        throw std::invalid_argument(name + ": data does not match its declared shape");
    }
    return data;
}

void put_gate(json& arrays, const std::string& prefix, const GateParams& g) {
    arrays[prefix + ".weight"] = vector_entry(g.weight);
    arrays[prefix + ".bias"] = vector_entry({g.bias});
}

GateParams gate_from(const json& arrays, const std::string& prefix) {
    GateParams g;
    g.weight = vector_from(arrays, prefix + ".weight");
    const auto bias = vector_from(arrays, prefix + ".bias");
    if (bias.size() != 1) throw std::invalid_argument(prefix + ".bias must hold one value");
    g.bias = bias[0];
    return g;
}

void put_attention(json& arrays, const std::string& prefix, const AttentionParams& p) {
    arrays[prefix + ".query"] = matrix_entry(p.query);
    arrays[prefix + ".key"] = matrix_entry(p.key);
    arrays[prefix + ".value"] = matrix_entry(p.value);
    arrays[prefix + ".output"] = matrix_entry(p.output);
}

AttentionParams attention_from(const json& arrays, const std::string& prefix,
                               std::size_t num_heads) {
    AttentionParams p;
    p.num_heads = num_heads;
    p.query = matrix_from(arrays, prefix + ".query");
    p.model_dim = p.query.rows;
    p.key = matrix_from(arrays, prefix + ".key");
    p.value = matrix_from(arrays, prefix + ".value");
    p.output = matrix_from(arrays, prefix + ".output");
    p.validate();
    return p;
}

void put_norm(json& arrays, const std::string& prefix, const NormParams& p) {
    arrays[prefix + ".scale"] = vector_entry(p.scale);
    arrays[prefix + ".shift"] = vector_entry(p.shift);
    arrays[prefix + ".eps"] = vector_entry({p.eps});
}

NormParams norm_from(const json& arrays, const std::string& prefix) {
    NormParams p;
    p.scale = vector_from(arrays, prefix + ".scale");
    p.shift = vector_from(arrays, prefix + ".shift");
    const auto eps = vector_from(arrays, prefix + ".eps");
    if (eps.size() != 1) throw std::invalid_argument(prefix + ".eps must hold one value");
    p.eps = eps[0];
    p.validate();
    return p;
}

void put_affine(json& arrays, const std::string& prefix, const AffineMap& m) {
    arrays[prefix + ".weight"] = matrix_entry(m.weight);
    arrays[prefix + ".bias"] = vector_entry(m.bias);
}

AffineMap affine_from(const json& arrays, const std::string& prefix) {
    AffineMap m;
    m.weight = matrix_from(arrays, prefix + ".weight");
    m.bias = vector_from(arrays, prefix + ".bias");
    m.validate();
    return m;
}

}  // namespace

void save_params(const std::filesystem::path& path, const PipelineParams& params) {
    params.validate();
    json arrays;
    put_gate(arrays, "gate4", params.aggregator.gate4);
    put_gate(arrays, "gate8", params.aggregator.gate8);
    put_gate(arrays, "gate_final", params.aggregator.gate_final);
    put_attention(arrays, "attn_stage1", params.aggregator.attn_stage1);
    put_attention(arrays, "attn_stage2", params.aggregator.attn_stage2);
    put_norm(arrays, "norm_stage1", params.aggregator.norm_stage1);
    put_norm(arrays, "norm_stage2", params.aggregator.norm_stage2);
    put_affine(arrays, "proj_w", params.fusion.proj_w);
    put_affine(arrays, "proj_c", params.fusion.proj_c);

    const json out = {{"version", 1},
                      {"num_heads", params.aggregator.attn_stage1.num_heads},
                      {"alpha", params.fusion.alpha},
                      {"arrays", arrays}};
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot open for write: " + path.string());
    file << out.dump(2) << '\n';
}

PipelineParams load_params(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open checkpoint: " + path.string());
    json j;
    try {
        file >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("checkpoint is not valid JSON: " + std::string(e.what()));
    }
    if (j.value("version", 0) != 1) throw std::invalid_argument("unsupported checkpoint version");

    const auto num_heads = j.at("num_heads").get<std::size_t>();
    const auto& arrays = j.at("arrays");

    PipelineParams p;
    p.aggregator.gate4 = gate_from(arrays, "gate4");
    p.aggregator.gate8 = gate_from(arrays, "gate8");
    p.aggregator.gate_final = gate_from(arrays, "gate_final");
    p.aggregator.attn_stage1 = attention_from(arrays, "attn_stage1", num_heads);
    p.aggregator.attn_stage2 = attention_from(arrays, "attn_stage2", num_heads);
    p.aggregator.norm_stage1 = norm_from(arrays, "norm_stage1");
    p.aggregator.norm_stage2 = norm_from(arrays, "norm_stage2");
    p.fusion.proj_w = affine_from(arrays, "proj_w");
    p.fusion.proj_c = affine_from(arrays, "proj_c");
    p.fusion.alpha = j.at("alpha").get<double>();
    p.validate();
    return p;
}

PipelineParams load_params(const std::filesystem::path& path, const PipelineConfig& expect) {
    PipelineParams p = load_params(path);
    if (p.aggregator.attn_stage1.model_dim != expect.dim_ced ||
        p.aggregator.attn_stage1.num_heads != expect.num_heads ||
        p.fusion.proj_w.in_dim() != expect.dim_whisper ||
        p.fusion.proj_w.out_dim() != expect.dim_llm ||
        p.fusion.proj_c.in_dim() != expect.dim_ced) {
        throw std::invalid_argument("checkpoint shapes do not match the config");
    }
    return p;
}

}  // namespace eva
