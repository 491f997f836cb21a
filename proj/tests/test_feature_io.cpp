#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "eva/feature_io.hpp"
#include "eva/feature_model.hpp"
#include "eva/rng.hpp"

using namespace eva;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("eva_io_test_" + name);
}

BandedFeatureMap sample_banded(std::uint64_t seed) {
    Rng rng(seed);
    BandedFeatureMap map;
    map.layer_id = 8;
    map.steps = 5;
    map.bands = 4;
    map.dim = 3;
    map.data.resize(5 * 4 * 3);
    for (auto& v : map.data) v = rng.normal();
    for (std::size_t t = 0; t < 5; ++t) {
        map.timeline.centers.push_back(16.0 * static_cast<double>(t) + 7.5);
        map.timeline.coverage.push_back(t == 4 ? 0.5 : 1.0);
    }
    return map;
}

TemporalSequence sample_temporal(std::uint64_t seed) {
    Rng rng(seed);
    TemporalSequence seq;
    seq.features = Matrix(6, 4);
    for (auto& v : seq.features.data) v = rng.normal();
    for (std::size_t t = 0; t < 6; ++t) {
        seq.timeline.centers.push_back(8.0 * static_cast<double>(t) + 4.0);
        seq.timeline.coverage.push_back(1.0);
    }
    return seq;
}

std::vector<char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

void spit(const fs::path& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

IoErrorKind kind_of(const fs::path& path) {
    try {
        (void)read_features(path);
    } catch (const FeatureIoError& e) {
        return e.kind();
    }
    FAIL("expected a feature IO error");
    return IoErrorKind::io_failure;
}

}  // namespace

TEST_CASE("banded maps survive a write/read round trip at stored precision") {
    const auto path = temp_file("banded.evaf");
    const auto map = sample_banded(12);
    write_features(path, map);
    const auto back = read_banded(path);

    CHECK(back.layer_id == map.layer_id);
    CHECK(back.steps == map.steps);
    CHECK(back.bands == map.bands);
    CHECK(back.dim == map.dim);
    CHECK(back.timeline.centers == map.timeline.centers);
    for (std::size_t i = 0; i < map.data.size(); ++i)
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(map.data[i])));
    for (std::size_t t = 0; t < map.steps; ++t)
        CHECK(back.timeline.coverage[t] ==
              static_cast<double>(static_cast<float>(map.timeline.coverage[t])));
    fs::remove(path);
}

TEST_CASE("temporal sequences survive a round trip and rewrite byte-identically") {
    const auto path_a = temp_file("temporal_a.evaf");
    const auto path_b = temp_file("temporal_b.evaf");
    const auto seq = sample_temporal(21);
    write_features(path_a, seq);
    const auto back = read_temporal(path_a);
    CHECK(back.steps() == seq.steps());
    CHECK(back.dim() == seq.dim());
    CHECK(back.timeline.centers == seq.timeline.centers);

    write_features(path_b, back);
    CHECK(slurp(path_a) == slurp(path_b));
    fs::remove(path_a);
    fs::remove(path_b);
}

TEST_CASE("payload kind is checked by the typed readers") {
    const auto path = temp_file("kind.evaf");
    write_features(path, sample_banded(3));
    CHECK_THROWS_AS((void)read_temporal(path), FeatureIoError);
    const auto payload = read_features(path);
    CHECK(std::holds_alternative<BandedFeatureMap>(payload));

    write_features(path, sample_temporal(3));
    CHECK_THROWS_AS((void)read_banded(path), FeatureIoError);
    fs::remove(path);
}

TEST_CASE("corrupted files report the specific failure") {
    const auto good_path = temp_file("good.evaf");
    write_features(good_path, sample_temporal(33));
    const auto good = slurp(good_path);

    const auto bad_path = temp_file("bad.evaf");

    SUBCASE("wrong magic") {
        auto bytes = good;
        std::memcpy(bytes.data(), "XXXX", 4);
        spit(bad_path, bytes);
        CHECK(kind_of(bad_path) == IoErrorKind::bad_magic);
    }

    SUBCASE("unsupported version") {
        auto bytes = good;
        const std::uint32_t version = 2;
        std::memcpy(bytes.data() + 4, &version, 4);
        spit(bad_path, bytes);
        CHECK(kind_of(bad_path) == IoErrorKind::bad_version);
    }

    SUBCASE("nonsense header") {
        auto bytes = good;
        const std::uint32_t kind = 7;
        std::memcpy(bytes.data() + 8, &kind, 4);
        spit(bad_path, bytes);
        CHECK(kind_of(bad_path) == IoErrorKind::bad_header);
    }

    SUBCASE("truncated payload") {
        auto bytes = good;
        bytes.resize(bytes.size() - 5);
        spit(bad_path, bytes);
        CHECK(kind_of(bad_path) == IoErrorKind::truncated);
    }

    SUBCASE("non-monotone timeline") {
        auto bytes = good;
        // Header is 26 bytes; centers follow as f64. Swap in a decreasing one.
        const double bogus = 1e9;
        std::memcpy(bytes.data() + 26, &bogus, 8);
        spit(bad_path, bytes);
        CHECK(kind_of(bad_path) == IoErrorKind::bad_timeline);
    }

    SUBCASE("coverage out of range") {
        auto bytes = good;
        const std::size_t coverage_off = 26 + 6 * 8;
        const float bogus = 2.0f;
        std::memcpy(bytes.data() + coverage_off, &bogus, 4);
        spit(bad_path, bytes);
        CHECK(kind_of(bad_path) == IoErrorKind::bad_timeline);
    }

    SUBCASE("missing file") {
        CHECK(kind_of(temp_file("does_not_exist.evaf")) == IoErrorKind::io_failure);
    }

    fs::remove(good_path);
    fs::remove(bad_path);
}

TEST_CASE("a file without a timeline reads back with the default grid") {
    const auto path = temp_file("no_timeline.evaf");
    auto seq = sample_temporal(44);
    write_features(path, seq);
    auto bytes = slurp(path);

    // Drop the stored timeline: clear has_timeline and splice the block out.
    bytes[25] = 0;
    const std::size_t block = 6 * 8 + 6 * 4;
    bytes.erase(bytes.begin() + 26, bytes.begin() + 26 + static_cast<std::ptrdiff_t>(block));
    spit(path, bytes);

    const auto back = read_temporal(path);
    REQUIRE(back.steps() == 6);
    for (std::size_t t = 0; t < 6; ++t) {
        CHECK(back.timeline.centers[t] == static_cast<double>(t));
        CHECK(back.timeline.coverage[t] == 1.0);
    }
    fs::remove(path);
}
