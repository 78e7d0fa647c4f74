#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <cmath>
#include <random>
#include <vector>

namespace miaaudit {

// splitmix64 finalizer, used to derive independent seed streams from one
// named seed without overlapping mt19937_64 states.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return splitmix64(base ^ splitmix64(salt));
}

// Deterministic random source. Every draw is an explicit conversion of raw
// mt19937_64 output; std::uniform_real_distribution and friends are
// implementation-defined and would break bit-reproducibility across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Standard normal, Box-Muller. Consumes two uniforms per pair.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        do {
            u = u01();
        } while (u == 0.0);
        const double r = std::sqrt(-2.0 * std::log(u));
        const double t = 2.0 * std::numbers::pi * u01();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    // Uniform integer in [0, n). Rejection sampling, bias-free.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t rem = (max % n + 1) % n;  // 2^64 mod n
        std::uint64_t x = gen_();
        while (rem != 0 && x > max - rem) x = gen_();
        return x % n;
    }

    std::uint64_t raw() { return gen_(); }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace miaaudit
