#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "eva/feature_model.hpp"

namespace eva {

// Feature file, little-endian:
//   magic "EVAF" | u32 version=1 | u32 kind (0=banded, 1=temporal)
//   | u32 T | u32 F (1 if temporal) | u32 D | u8 layer_id (0 if n/a)
//   | u8 has_timeline | [T x f64 centers, T x f32 coverage]
//   | T*F*D x f32 data, index order (t, f, d)
// Values are stored in single precision (centers excepted); reading back
// yields exactly the f32-rounded values.

enum class IoErrorKind {
    bad_magic,
    bad_version,
    bad_header,
    truncated,
    bad_timeline,
    io_failure,
};

class FeatureIoError : public std::runtime_error {
public:
    FeatureIoError(IoErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    IoErrorKind kind() const { return kind_; }

private:
    IoErrorKind kind_;
};

using FeaturePayload = std::variant<BandedFeatureMap, TemporalSequence>;

void write_features(const std::filesystem::path& path, const BandedFeatureMap& map);
void write_features(const std::filesystem::path& path, const TemporalSequence& seq);

// Files without a stored timeline get a default one (centers 0..T-1,
// coverage 1) so every returned payload satisfies its invariants.
FeaturePayload read_features(const std::filesystem::path& path);

BandedFeatureMap read_banded(const std::filesystem::path& path);
TemporalSequence read_temporal(const std::filesystem::path& path);

}  // namespace eva
