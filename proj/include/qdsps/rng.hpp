#pragma once

#include <cmath>
#include <cstdint>
#include <array>
#include <string_view>

namespace qdsps {

// splitmix64 finaliser; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// FNV-1a, for deriving a sub-seed from a scenario name.
constexpr std::uint64_t hash_name(std::string_view name)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// xoshiro256++ seeded through splitmix64. Cheap to seed, so streams can be
// keyed per pulse. Transforms are coded explicitly (std:: distributions are
// implementation-defined) to keep streams bit-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
    {
        for (auto& word : state_) {
            seed += 0x9e3779b97f4a7c15ULL;
            word = mix_seed(seed);
        }
    }

    std::uint64_t next()
    {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    // Knuth's multiplication method for small means; normal approximation
    // with continuity correction above 30.
    unsigned poisson(double mean)
    {
        if (mean <= 0.0) return 0;
        if (mean > 30.0) {
            const double x = std::floor(mean + std::sqrt(mean) * normal() + 0.5);
            return x < 0.0 ? 0u : static_cast<unsigned>(x);
        }
        const double limit = std::exp(-mean);
        unsigned k = 0;
        double p = uniform();
        while (p > limit) {
            ++k;
            p *= uniform();
        }
        return k;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace qdsps
