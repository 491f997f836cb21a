#include "eva/feature_model.hpp"

#include <cmath>
#include <stdexcept>

#include "eva/alignment.hpp"
#include "eva/rng.hpp"

namespace eva {

namespace {

bool finite_all(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// Wide substream tags so per-layer and per-purpose draws never collide.
enum StreamTag : std::uint64_t {
    kBaseField = 101,
    kLayerPerturb = 201,  // + layer index
    kWhisperEncoder = 301,
    kWhisperTokens = 302,
    kEventSignature = 401,  // + event index
};

// Smooth noise field: iid normals averaged over a 3-step time window.
std::vector<double> smooth_field(Rng& rng, std::size_t steps, std::size_t width,
                                 double scale) {
    std::vector<double> noise((steps + 2) * width);
    for (auto& x : noise) x = rng.normal();
    std::vector<double> out(steps * width);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < width; ++j) {
            double sum = noise[t * width + j] + noise[(t + 1) * width + j] +
                         noise[(t + 2) * width + j];
            out[t * width + j] = scale * (sum / 3.0);
        }
    }
    return out;
}

}  // namespace

void TimelineSpec::validate() const {
    if (centers.size() != coverage.size()) {
        throw std::invalid_argument("timeline centers/coverage length mismatch");
    }
    if (!finite_all(centers) || !finite_all(coverage)) {
        throw std::invalid_argument("timeline contains non-finite values");
    }
    if (!monotone()) throw std::invalid_argument("timeline centers must be monotone");
    for (double c : coverage) {
        if (c < 0.0 || c > 1.0) throw std::invalid_argument("coverage outside [0,1]");
    }
}

bool TimelineSpec::monotone() const {
    for (std::size_t i = 1; i < centers.size(); ++i) {
        if (centers[i] < centers[i - 1]) return false;
    }
    return true;
}

void BandedFeatureMap::validate() const {
    if (bands == 0 || dim == 0) throw std::invalid_argument("banded map needs F >= 1, D >= 1");
    if (data.size() != steps * bands * dim) {
        throw std::invalid_argument("banded map data size mismatch");
    }
    if (timeline.size() != steps) throw std::invalid_argument("banded map timeline length mismatch");
    if (!finite_all(data)) throw std::invalid_argument("banded map contains non-finite values");
    timeline.validate();
}

void TemporalSequence::validate() const {
    if (timeline.size() != features.rows) {
        throw std::invalid_argument("sequence timeline length mismatch");
    }
    if (!features.all_finite()) throw std::invalid_argument("sequence contains non-finite values");
    timeline.validate();
}

void StrideConfig::validate() const {
    if (whisper_stride_ms <= 0 || ced_stride_ms <= 0 || step_mel <= 0 || center_mel < 0 ||
        mel_frame_ms <= 0) {
        throw std::invalid_argument("stride constants must be positive");
    }
    if (ced_stride_ms != 2 * whisper_stride_ms) {
        throw std::invalid_argument("coarse stride must be twice the fine stride");
    }
    if (step_mel * mel_frame_ms != whisper_stride_ms) {
        throw std::invalid_argument("step_mel inconsistent with fine stride");
    }
}

void PlantedEvent::validate(std::size_t expected_dim) const {
    if (band_index < 0 || band_index >= 4) throw std::invalid_argument("event band out of range");
    if (!(amplitude > 0.0)) throw std::invalid_argument("event amplitude must be positive");
    if (!(width > 0.0)) throw std::invalid_argument("event width must be positive");
    if (signature.size() != expected_dim) throw std::invalid_argument("event signature dim mismatch");
}

CedLayers synth_ced_features(std::uint64_t seed, double duration_s, std::size_t dim,
                             const std::vector<PlantedEvent>& events,
                             const CedSynthConfig& cfg) {
    cfg.strides.validate();
    if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
    if (dim == 0) throw std::invalid_argument("feature dim must be >= 1");
    if (cfg.window_mel <= 0 || cfg.hop_mel <= 0) {
        throw std::invalid_argument("window and hop must be positive");
    }

    const std::size_t steps =
        static_cast<std::size_t>(std::floor(duration_s * 1000.0 / cfg.strides.ced_stride_ms));
    if (steps == 0) throw std::invalid_argument("duration too short for one analysis window");
    const long mel_frames =
        static_cast<long>(std::floor(duration_s * 1000.0 / cfg.strides.mel_frame_ms));
    constexpr std::size_t kBands = 4;

    for (const auto& ev : events) ev.validate(dim);

    TimelineSpec timeline;
    std::vector<long> starts(steps), ends(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        starts[t] = static_cast<long>(t) * cfg.hop_mel;
        ends[t] = starts[t] + cfg.window_mel - 1;
        timeline.centers.push_back(0.5 * static_cast<double>(starts[t] + ends[t]));
    }
    timeline.coverage = coverage_weights(starts, ends, cfg.window_mel, mel_frames);

    const std::size_t cells = steps * kBands * dim;
    Rng base_rng = Rng::substream(seed, kBaseField);
    std::vector<double> base = smooth_field(base_rng, steps, kBands * dim, cfg.base_scale);

    CedLayers out;
    const std::uint8_t layer_ids[3] = {4, 8, static_cast<std::uint8_t>(cfg.final_layer_id)};
    BandedFeatureMap* maps[3] = {&out.layer4, &out.layer8, &out.layer_final};
    for (int li = 0; li < 3; ++li) {
        BandedFeatureMap& m = *maps[li];
        m.layer_id = layer_ids[li];
        m.steps = steps;
        m.bands = kBands;
        m.dim = dim;
        m.timeline = timeline;
        m.data = base;

        Rng perturb_rng = Rng::substream(seed, kLayerPerturb + static_cast<std::uint64_t>(li));
        std::vector<double> perturb =
            smooth_field(perturb_rng, steps, kBands * dim, 0.5 * cfg.base_scale);
        for (std::size_t i = 0; i < cells; ++i) m.data[i] += perturb[i];

        for (const auto& ev : events) {
            for (std::size_t t = 0; t < steps; ++t) {
                const double dt = (timeline.centers[t] - ev.center_time) / ev.width;
                const double bump = ev.amplitude * std::exp(-0.5 * dt * dt);
                for (std::size_t d = 0; d < dim; ++d) {
                    m.at(t, static_cast<std::size_t>(ev.band_index), d) += bump * ev.signature[d];
                }
            }
        }
    }
    out.timeline = timeline;
    return out;
}

WhisperFeatures synth_whisper_features(std::uint64_t seed, double duration_s,
                                       std::size_t dim_w, std::size_t dim_llm,
                                       const StrideConfig& strides) {
    strides.validate();
    if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
    if (dim_w == 0 || dim_llm == 0) throw std::invalid_argument("feature dims must be >= 1");

    const std::size_t steps =
        static_cast<std::size_t>(std::floor(duration_s * 1000.0 / strides.whisper_stride_ms));
    if (steps == 0) throw std::invalid_argument("duration too short for one analysis window");

    TimelineSpec timeline;
    timeline.centers = whisper_centers(steps, strides.step_mel, strides.center_mel);
    timeline.coverage.assign(steps, 1.0);

    WhisperFeatures out;
    out.encoder.timeline = timeline;
    out.encoder.features = Matrix(steps, dim_w);
    Rng enc_rng = Rng::substream(seed, kWhisperEncoder);
    for (auto& x : out.encoder.features.data) x = enc_rng.normal();

    out.tokens.timeline = timeline;
    out.tokens.features = Matrix(steps, dim_llm);
    Rng tok_rng = Rng::substream(seed, kWhisperTokens);
    for (auto& x : out.tokens.features.data) x = tok_rng.normal();
    return out;
}

std::vector<PlantedEvent> assign_event_signatures(std::vector<PlantedEvent> events,
                                                  std::uint64_t seed, std::size_t dim) {
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!events[i].signature.empty()) continue;
        Rng rng = Rng::substream(seed, kEventSignature + i);
        events[i].signature = rng.unit_vector(dim);
    }
    return events;
}

}  // namespace eva
