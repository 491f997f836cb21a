#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "eva/matrix.hpp"

namespace eva {

// Frame-center timestamps (mel frames, 10 ms each) plus per-step coverage
// weights in [0, 1]. Coverage below 1 marks windows that overlap padding.
struct TimelineSpec {
    std::vector<double> centers;
    std::vector<double> coverage;

    std::size_t size() const { return centers.size(); }
    void validate() const;
    bool monotone() const;

    bool operator==(const TimelineSpec& other) const = default;
};

// Per-layer features with an explicit frequency-band axis, T x F x D,
// index order (t, f, d).
struct BandedFeatureMap {
    std::uint8_t layer_id = 0;
    std::size_t steps = 0;   // T
    std::size_t bands = 0;   // F
    std::size_t dim = 0;     // D
    std::vector<double> data;
    TimelineSpec timeline;

    double& at(std::size_t t, std::size_t f, std::size_t d) {
        return data[(t * bands + f) * dim + d];
    }
    double at(std::size_t t, std::size_t f, std::size_t d) const {
        return data[(t * bands + f) * dim + d];
    }
    std::span<const double> band_vector(std::size_t t, std::size_t f) const {
        return std::span<const double>(data.data() + (t * bands + f) * dim, dim);
    }

    void validate() const;

    bool operator==(const BandedFeatureMap& other) const = default;
};

// Band-free feature sequence (T x D) with an attached timeline.
struct TemporalSequence {
    Matrix features;
    TimelineSpec timeline;

    std::size_t steps() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    void validate() const;

    bool operator==(const TemporalSequence& other) const = default;
};

// Stride constants shared by the two encoder stand-ins. The fine stream
// advances 80 ms per step, the coarse banded stream 160 ms; one mel frame
// is 10 ms, so 8 mel frames = one fine step.
struct StrideConfig {
    int whisper_stride_ms = 80;
    int ced_stride_ms = 160;
    int step_mel = 8;
    int center_mel = 4;
    int mel_frame_ms = 10;

    void validate() const;
};

// Ground-truth event planted into generated scenes: a time-gaussian bump,
// confined to one frequency band, rank-1 along a unit-norm signature.
struct PlantedEvent {
    int band_index = 0;           // in [0, 4)
    double center_time = 0.0;     // mel frames
    double width = 4.0;           // mel frames
    double amplitude = 1.0;       // > 0
    std::vector<double> signature;

    void validate(std::size_t expected_dim) const;
};

// Geometry and texture of the synthetic coarse-stream generator.
struct CedSynthConfig {
    StrideConfig strides;
    int window_mel = 16;       // window size t_sz in mel frames
    int hop_mel = 16;          // hop between window starts
    int final_layer_id = 12;
    double base_scale = 0.25;  // amplitude of the smooth background field
};

struct CedLayers {
    BandedFeatureMap layer4;
    BandedFeatureMap layer8;
    BandedFeatureMap layer_final;
    TimelineSpec timeline;
};

// Synthetic stand-in for a frozen banded event encoder: three layer maps
// (shallow=4, middle=8, final) over a 160 ms grid. Each layer is a smooth
// seeded background plus the planted events; layers differ by independent
// seeded perturbations. Pure function of (seed, config).
CedLayers synth_ced_features(std::uint64_t seed, double duration_s, std::size_t dim,
                             const std::vector<PlantedEvent>& events,
                             const CedSynthConfig& cfg = {});

struct WhisperFeatures {
    TemporalSequence encoder;  // E_W, dim d_w
    TemporalSequence tokens;   // E_tok, dim d_llm, same timeline
};

// Synthetic stand-in for the frozen speech encoder plus token embeddings:
// T_w = floor(duration * 1000 / 80) steps, centers t[k] = 8k + 4 mel frames.
WhisperFeatures synth_whisper_features(std::uint64_t seed, double duration_s,
                                       std::size_t dim_w, std::size_t dim_llm,
                                       const StrideConfig& strides = {});

// Fills in missing signatures deterministically from (seed, index); events that
// already carry one keep it.
std::vector<PlantedEvent> assign_event_signatures(std::vector<PlantedEvent> events,
                                                  std::uint64_t seed, std::size_t dim);

}  // namespace eva
