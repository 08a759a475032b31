#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace thermadiab::rng {

// splitmix64; used to derive independent per-task seeds from a master seed
// so results do not depend on execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// uniform in (0, 1]; hand-rolled so the stream is identical across standard
// library implementations
inline double uniform01(std::mt19937_64& engine) {
    return static_cast<double>((engine() >> 11) + 1) * 0x1.0p-53;
}

// Box-Muller standard normals with the spare value cached.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01(engine_);
        const double u2 = uniform01(engine_);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace thermadiab::rng
