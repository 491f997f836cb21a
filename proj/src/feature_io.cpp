#include "eva/feature_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

static_assert(std::endian::native == std::endian::little,
              "feature files are little-endian; add byte swapping for this platform");
static_assert(sizeof(float) == 4 && sizeof(double) == 8);

namespace eva {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'A', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindBanded = 0;
constexpr std::uint32_t kKindTemporal = 1;

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FeatureIoError(IoErrorKind::truncated, "feature file ends mid-field");
    return value;
}

void write_header(std::ostream& out, std::uint32_t kind, std::uint32_t steps,
                  std::uint32_t bands, std::uint32_t dim, std::uint8_t layer_id,
                  const TimelineSpec& timeline) {
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, kind);
    put(out, steps);
    put(out, bands);
    put(out, dim);
    put(out, layer_id);
    const std::uint8_t has_timeline = timeline.size() == steps && steps > 0 ? 1 : 0;
    put(out, has_timeline);
    if (has_timeline) {
        for (double c : timeline.centers) put(out, c);
        for (double c : timeline.coverage) put(out, static_cast<float>(c));
    }
}

void write_data(std::ostream& out, const std::vector<double>& data) {
    for (double x : data) put(out, static_cast<float>(x));
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FeatureIoError(IoErrorKind::io_failure, "cannot open for write: " + path.string());
    return out;
}

struct Header {
    std::uint32_t kind = 0;
    std::size_t steps = 0;
    std::size_t bands = 0;
    std::size_t dim = 0;
    std::uint8_t layer_id = 0;
    TimelineSpec timeline;
};

Header read_header(std::istream& in, const std::filesystem::path& path) {
    char magic[4];
    in.read(magic, 4);
    if (!in) throw FeatureIoError(IoErrorKind::truncated, "feature file shorter than its magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FeatureIoError(IoErrorKind::bad_magic, "not a feature file: " + path.string());
    }
    const auto version = take<std::uint32_t>(in);
    if (version != kVersion) {
        throw FeatureIoError(IoErrorKind::bad_version,
                             "unsupported feature file version " + std::to_string(version));
    }

    Header h;
    h.kind = take<std::uint32_t>(in);
    if (h.kind != kKindBanded && h.kind != kKindTemporal) {
        throw FeatureIoError(IoErrorKind::bad_header, "unknown payload kind");
    }
    h.steps = take<std::uint32_t>(in);
    h.bands = take<std::uint32_t>(in);
    h.dim = take<std::uint32_t>(in);
    if (h.bands == 0 || h.dim == 0) {
        throw FeatureIoError(IoErrorKind::bad_header, "zero band or feature dimension");
    }
    if (h.kind == kKindTemporal && h.bands != 1) {
        throw FeatureIoError(IoErrorKind::bad_header, "temporal payload must declare F=1");
    }
    h.layer_id = take<std::uint8_t>(in);

    const auto has_timeline = take<std::uint8_t>(in);
    if (has_timeline > 1) throw FeatureIoError(IoErrorKind::bad_header, "timeline flag must be 0/1");
    if (has_timeline) {
        h.timeline.centers.resize(h.steps);
        h.timeline.coverage.resize(h.steps);
        for (auto& c : h.timeline.centers) c = take<double>(in);
        for (auto& c : h.timeline.coverage) c = static_cast<double>(take<float>(in));
    } else {
        for (std::size_t t = 0; t < h.steps; ++t) h.timeline.centers.push_back(double(t));
        h.timeline.coverage.assign(h.steps, 1.0);
    }
    if (!h.timeline.monotone()) {
        throw FeatureIoError(IoErrorKind::bad_timeline, "timeline centers not monotone");
    }
    for (double c : h.timeline.coverage) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw FeatureIoError(IoErrorKind::bad_timeline, "coverage outside [0,1]");
        }
    }
    return h;
}

std::vector<double> read_data(std::istream& in, const Header& h) {
    const std::uint64_t per_step = std::uint64_t(h.bands) * h.dim;
    const std::uint64_t total = std::uint64_t(h.steps) * per_step;
    if (per_step != 0 && total / per_step != h.steps) {
        throw FeatureIoError(IoErrorKind::bad_header, "payload size overflows");
    }
    std::vector<double> data(total);
    for (auto& x : data) x = static_cast<double>(take<float>(in));
    return data;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FeatureIoError(IoErrorKind::io_failure, "cannot open for read: " + path.string());
    return in;
}

}  // namespace

void write_features(const std::filesystem::path& path, const BandedFeatureMap& map) {
    map.validate();
    auto out = open_for_write(path);
    write_header(out, kKindBanded, static_cast<std::uint32_t>(map.steps),
                 static_cast<std::uint32_t>(map.bands), static_cast<std::uint32_t>(map.dim),
                 map.layer_id, map.timeline);
    write_data(out, map.data);
    if (!out) throw FeatureIoError(IoErrorKind::io_failure, "write failed: " + path.string());
}

void write_features(const std::filesystem::path& path, const TemporalSequence& seq) {
    seq.validate();
    auto out = open_for_write(path);
    write_header(out, kKindTemporal, static_cast<std::uint32_t>(seq.steps()), 1,
                 static_cast<std::uint32_t>(seq.dim()), 0, seq.timeline);
    write_data(out, seq.features.data);
    if (!out) throw FeatureIoError(IoErrorKind::io_failure, "write failed: " + path.string());
}

FeaturePayload read_features(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    const Header h = read_header(in, path);
    std::vector<double> data = read_data(in, h);

    if (h.kind == kKindBanded) {
        BandedFeatureMap map;
        map.layer_id = h.layer_id;
        map.steps = h.steps;
        map.bands = h.bands;
        map.dim = h.dim;
        map.data = std::move(data);
        map.timeline = std::move(h.timeline);
        return map;
    }
    TemporalSequence seq;
    seq.features = Matrix(h.steps, h.dim);
    seq.features.data = std::move(data);
    seq.timeline = std::move(h.timeline);
    return seq;
}

BandedFeatureMap read_banded(const std::filesystem::path& path) {
    auto payload = read_features(path);
    if (auto* map = std::get_if<BandedFeatureMap>(&payload)) return std::move(*map);
    throw FeatureIoError(IoErrorKind::bad_header, "expected a banded payload: " + path.string());
}

TemporalSequence read_temporal(const std::filesystem::path& path) {
    auto payload = read_features(path);
    if (auto* seq = std::get_if<TemporalSequence>(&payload)) return std::move(*seq);
    throw FeatureIoError(IoErrorKind::bad_header, "expected a temporal payload: " + path.string());
}

}  // namespace eva
