#pragma once

// Deterministic random generation. The base generator is xoshiro256++ seeded
// through splitmix64, both fixed algorithms with published reference code, so
// a seed produces the same stream on every platform. Substreams come from
// derive_child(label): the child seed depends only on (parent seed, label),
// never on how far the parent stream has been consumed.

#include <array>
#include <cstdint>
#include <cmath>
#include <string>

#include "midlab/errors.hpp"

namespace midl {

class RngState {
public:
    explicit RngState(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& word : s_) word = splitmix64(x);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo < hi)) throw ValueError("uniform: need lo < hi");
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via the Marsaglia polar method; pairs are cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Independent substream keyed by label. Children with distinct labels get
    // unrelated seeds; the same label always yields the same child.
    RngState derive_child(const std::string& label) const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix_byte = [&h](unsigned char b) {
            h ^= b;
            h *= 1099511628211ULL;
        };
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(seed_ >> (8 * i)));
        for (char ch : label) mix_byte(static_cast<unsigned char>(ch));
        std::uint64_t x = h;
        return RngState(splitmix64(x));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace midl
