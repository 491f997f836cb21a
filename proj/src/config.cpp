#include "eva/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eva {

void PipelineConfig::validate() const {
    if (version != 1) throw std::invalid_argument("unsupported config version");
    if (dim_ced == 0 || dim_whisper == 0 || dim_llm == 0) {
        throw std::invalid_argument("feature dims must be >= 1");
    }
    if (num_heads == 0 || dim_ced % num_heads != 0) {
        throw std::invalid_argument("head count must divide the aggregated dim");
    }
    if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
    if (!std::isfinite(alpha_init)) throw std::invalid_argument("alpha must be finite");
    if (!(interp_eps > 0.0)) throw std::invalid_argument("interp eps must be positive");
    if (synth.window_mel <= 0 || synth.hop_mel <= 0) {
        throw std::invalid_argument("window and hop must be positive");
    }
    if (!(synth.base_scale > 0.0)) throw std::invalid_argument("base scale must be positive");
    synth.strides.validate();
    for (const auto& ev : events) {
        if (ev.band_index < 0 || ev.band_index >= 4) {
            throw std::invalid_argument("event band out of range");
        }
        if (!(ev.amplitude > 0.0)) throw std::invalid_argument("event amplitude must be positive");
        if (!(ev.width > 0.0)) throw std::invalid_argument("event width must be positive");
    }
}

PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    c.version = j.value("version", 1);
    c.seed = j.value("seed", c.seed);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.num_heads = j.value("num_heads", c.num_heads);
    c.alpha_init = j.value("alpha", c.alpha_init);
    c.interp_eps = j.value("interp_eps", c.interp_eps);
    if (j.contains("dims")) {
        const auto& d = j.at("dims");
        c.dim_ced = d.value("ced", c.dim_ced);
        c.dim_whisper = d.value("whisper", c.dim_whisper);
        c.dim_llm = d.value("llm", c.dim_llm);
    }
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        c.synth.window_mel = s.value("window_mel", c.synth.window_mel);
        c.synth.hop_mel = s.value("hop_mel", c.synth.hop_mel);
        c.synth.final_layer_id = s.value("final_layer_id", c.synth.final_layer_id);
        c.synth.base_scale = s.value("base_scale", c.synth.base_scale);
    }
    if (j.contains("strides")) {
        const auto& s = j.at("strides");
        auto& st = c.synth.strides;
        st.whisper_stride_ms = s.value("whisper_stride_ms", st.whisper_stride_ms);
        st.ced_stride_ms = s.value("ced_stride_ms", st.ced_stride_ms);
        st.step_mel = s.value("step_mel", st.step_mel);
        st.center_mel = s.value("center_mel", st.center_mel);
        st.mel_frame_ms = s.value("mel_frame_ms", st.mel_frame_ms);
    }
    for (const auto& e : j.value("events", nlohmann::json::array())) {
        PlantedEvent ev;
        ev.band_index = e.at("band").get<int>();
        ev.center_time = e.at("center").get<double>();
        ev.width = e.value("width", ev.width);
        ev.amplitude = e.value("amplitude", ev.amplitude);
        c.events.push_back(std::move(ev));
    }
    c.validate();
    return c;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& ev : c.events) {
        events.push_back({{"band", ev.band_index},
                          {"center", ev.center_time},
                          {"width", ev.width},
                          {"amplitude", ev.amplitude}});
    }
    return {
        {"version", c.version},
        {"seed", c.seed},
        {"duration_s", c.duration_s},
        {"dims", {{"ced", c.dim_ced}, {"whisper", c.dim_whisper}, {"llm", c.dim_llm}}},
        {"num_heads", c.num_heads},
        {"alpha", c.alpha_init},
        {"interp_eps", c.interp_eps},
        {"synth",
         {{"window_mel", c.synth.window_mel},
          {"hop_mel", c.synth.hop_mel},
          {"final_layer_id", c.synth.final_layer_id},
          {"base_scale", c.synth.base_scale}}},
        {"strides",
         {{"whisper_stride_ms", c.synth.strides.whisper_stride_ms},
          {"ced_stride_ms", c.synth.strides.ced_stride_ms},
          {"step_mel", c.synth.strides.step_mel},
          {"center_mel", c.synth.strides.center_mel},
          {"mel_frame_ms", c.synth.strides.mel_frame_ms}}},
        {"events", events},
    };
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for hashing: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64(buf.str());
}

std::string to_hex(std::uint64_t value) {
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(value));
    return std::string(out);
}

std::string config_hash(const PipelineConfig& c) {
    return to_hex(fnv1a64(config_to_json(c).dump()));
}

}  // namespace eva
