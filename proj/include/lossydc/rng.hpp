#pragma once

#include <cstdint>
#include <random>

namespace lossydc {

// Deterministic uniform doubles on top of mt19937_64. The [0,1) mapping is
// spelled out (top 53 bits) instead of using std::uniform_real_distribution,
// whose output is implementation-defined; results are byte-identical across
// standard libraries.
class UniformRng {
  public:
    explicit UniformRng(std::uint64_t seed) : gen_(seed) {}

    double next() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double range(double lo, double hi) { return lo + (hi - lo) * next(); }
    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

// splitmix64 finalizer over (stream, index): stable sub-seeds so every
// (phi, trial) pair gets an independent, order-free random stream.
inline std::uint64_t mix_seed(std::uint64_t stream, std::uint64_t index) {
    std::uint64_t z = stream + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace lossydc
