#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "eva/feature_model.hpp"
#include "eva/rng.hpp"

using namespace eva;

namespace {

double band_slice_max_diff(const BandedFeatureMap& a, const BandedFeatureMap& b,
                           std::size_t band) {
    double worst = 0.0;
    for (std::size_t t = 0; t < a.steps; ++t)
        for (std::size_t d = 0; d < a.dim; ++d)
            worst = std::max(worst, std::abs(a.at(t, band, d) - b.at(t, band, d)));
    return worst;
}

}  // namespace

TEST_CASE("a 1.6 s clip yields ten coarse steps with full coverage") {
    const auto layers = synth_ced_features(1, 1.6, 8, {});
    REQUIRE(layers.layer_final.steps == 10);
    CHECK(layers.layer_final.bands == 4);
    CHECK(layers.layer4.layer_id == 4);
    CHECK(layers.layer8.layer_id == 8);
    CHECK(layers.layer_final.layer_id == 12);
    CHECK(layers.timeline.centers[0] == 7.5);
    CHECK(layers.timeline.centers[9] == 151.5);
    for (double c : layers.timeline.coverage) CHECK(c == 1.0);
    CHECK(layers.layer4.timeline == layers.timeline);
}

TEST_CASE("generation is a pure function of seed and config") {
    const std::vector<PlantedEvent> events =
        assign_event_signatures({{2, 71.5, 4.0, 1.5, {}}}, 5, 8);
    const auto a = synth_ced_features(5, 1.6, 8, events);
    const auto b = synth_ced_features(5, 1.6, 8, events);
    CHECK(a.layer4 == b.layer4);
    CHECK(a.layer8 == b.layer8);
    CHECK(a.layer_final == b.layer_final);

    const auto c = synth_ced_features(6, 1.6, 8, events);
    CHECK_FALSE(a.layer_final == c.layer_final);

    const auto wa = synth_whisper_features(5, 1.6, 8, 12);
    const auto wb = synth_whisper_features(5, 1.6, 8, 12);
    CHECK(wa.encoder == wb.encoder);
    CHECK(wa.tokens == wb.tokens);
}

TEST_CASE("a planted event touches only its own band, identically per layer") {
    const double amplitude = 2.0;
    const auto events = assign_event_signatures({{2, 71.5, 4.0, amplitude, {}}}, 9, 16);
    const auto base = synth_ced_features(9, 1.6, 16, {});
    const auto bumped = synth_ced_features(9, 1.6, 16, events);

    for (std::size_t f : {0u, 1u, 3u}) {
        CHECK(band_slice_max_diff(base.layer4, bumped.layer4, f) <= 1e-12);
        CHECK(band_slice_max_diff(base.layer8, bumped.layer8, f) <= 1e-12);
        CHECK(band_slice_max_diff(base.layer_final, bumped.layer_final, f) <= 1e-12);
    }

    // Step 4 is centered exactly on the event, so the bump there has full
    // amplitude along the unit signature.
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < 16; ++d) {
        const double diff = bumped.layer_final.at(4, 2, d) - base.layer_final.at(4, 2, d);
        norm_sq += diff * diff;
    }
    CHECK(std::sqrt(norm_sq) == doctest::Approx(amplitude).epsilon(1e-9));

    // All three layers receive the same additive bump.
    for (std::size_t t = 0; t < 10; ++t)
        for (std::size_t d = 0; d < 16; ++d) {
            const double bump = bumped.layer_final.at(t, 2, d) - base.layer_final.at(t, 2, d);
            CHECK(bumped.layer4.at(t, 2, d) - base.layer4.at(t, 2, d) ==
                  doctest::Approx(bump).epsilon(1e-12));
            CHECK(bumped.layer8.at(t, 2, d) - base.layer8.at(t, 2, d) ==
                  doctest::Approx(bump).epsilon(1e-12));
        }
}

TEST_CASE("event signatures are unit vectors fixed by seed and index") {
    const auto events =
        assign_event_signatures({{0, 10.0, 4.0, 1.0, {}}, {3, 50.0, 4.0, 1.0, {}}}, 7, 12);
    REQUIRE(events.size() == 2);
    for (const auto& ev : events) {
        double norm_sq = 0.0;
        for (double v : ev.signature) norm_sq += v * v;
        CHECK(std::sqrt(norm_sq) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto again =
        assign_event_signatures({{0, 10.0, 4.0, 1.0, {}}, {3, 50.0, 4.0, 1.0, {}}}, 7, 12);
    CHECK(events[0].signature == again[0].signature);
    CHECK(events[1].signature == again[1].signature);
    CHECK_FALSE(events[0].signature == events[1].signature);
}

TEST_CASE("fine-stream geometry") {
    const auto w = synth_whisper_features(3, 2.0, 8, 12);
    REQUIRE(w.encoder.steps() == 25);
    CHECK(w.encoder.dim() == 8);
    CHECK(w.tokens.dim() == 12);
    CHECK(w.tokens.steps() == 25);
    CHECK(w.encoder.timeline.centers.front() == 4.0);
    CHECK(w.encoder.timeline.centers.back() == 196.0);
    CHECK(w.tokens.timeline == w.encoder.timeline);
    for (double c : w.encoder.timeline.coverage) CHECK(c == 1.0);
    for (std::size_t k = 1; k < 25; ++k)
        CHECK(w.encoder.timeline.centers[k] - w.encoder.timeline.centers[k - 1] == 8.0);
}

TEST_CASE("the fine stream runs at twice the coarse rate") {
    Rng rng(88);
    for (int trial = 0; trial < 30; ++trial) {
        const double duration = rng.uniform(0.2, 20.0);
        const auto ced = synth_ced_features(1, duration, 4, {});
        const auto w = synth_whisper_features(1, duration, 4, 4);
        const std::size_t t_c = ced.layer_final.steps;
        const std::size_t t_w = w.encoder.steps();
        CHECK((t_w == 2 * t_c || t_w == 2 * t_c + 1));
    }
}

TEST_CASE("clips shorter than one analysis window are rejected") {
    CHECK_THROWS_AS(synth_ced_features(1, 0.1, 8, {}), std::invalid_argument);
    CHECK_THROWS_AS(synth_ced_features(1, -1.0, 8, {}), std::invalid_argument);
    CHECK_THROWS_AS(synth_whisper_features(1, 0.01, 8, 8), std::invalid_argument);
}

TEST_CASE("malformed events are rejected") {
    CHECK_THROWS_AS(synth_ced_features(1, 1.6, 8,
                                       assign_event_signatures({{7, 10.0, 4.0, 1.0, {}}}, 1, 8)),
                    std::invalid_argument);
    CHECK_THROWS_AS(synth_ced_features(1, 1.6, 8, {{1, 10.0, 4.0, 1.0, {}}}),
                    std::invalid_argument);  // missing signature
    CHECK_THROWS_AS(
        synth_ced_features(1, 1.6, 8, assign_event_signatures({{1, 10.0, 0.0, 1.0, {}}}, 1, 8)),
        std::invalid_argument);
}

TEST_CASE("timeline validation") {
    TimelineSpec tl;
    tl.centers = {0.0, 1.0};
    tl.coverage = {1.0, 1.5};
    CHECK_THROWS_AS(tl.validate(), std::invalid_argument);
    tl.coverage = {1.0};
    CHECK_THROWS_AS(tl.validate(), std::invalid_argument);
    tl.centers = {1.0, 0.0};
    tl.coverage = {1.0, 1.0};
    CHECK_FALSE(tl.monotone());
    tl.centers = {0.0, 0.0};
    CHECK(tl.monotone());
}
