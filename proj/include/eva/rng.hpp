#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace eva {

// Seeded RNG with hand-rolled value conversions. The std distributions are
// implementation-defined, and generated feature files must be byte-identical
// across reruns, so all draws go through the fixed conversions below.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Derives an independent substream, e.g. one per layer or per event.
    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix(seed, stream));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller; caches the spare draw.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925287 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::vector<double> normal_vector(std::size_t n, double scale = 1.0) {
        std::vector<double> out(n);
        for (auto& v : out) {
            v = scale * normal();
        }
        return out;
    }

    // Random direction, normalized to unit Euclidean length.
    std::vector<double> unit_vector(std::size_t n) {
        std::vector<double> v = normal_vector(n);
        double norm_sq = 0.0;
        for (double x : v) {
            norm_sq += x * x;
        }
        double norm = std::sqrt(norm_sq);
        if (norm == 0.0) {
            v[0] = 1.0;
            norm = 1.0;
        }
        for (double& x : v) {
            x /= norm;
        }
        return v;
    }

    // splitmix64 finalizer over (seed, stream).
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace eva
