#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace simtune {

/// Deterministic random source. Wraps std::mt19937_64 but performs all
/// bounded draws itself: the standard distributions are allowed to differ
/// between library implementations, and reproducibility across toolchains
/// matters more here than raw draw speed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform integer in [lo, hi], both inclusive. Rejection-sampled.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform real in [0, 1).
    double uniform_real() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * uniform_real();
    }

    bool bernoulli(double p) { return uniform_real() < p; }

    /// Fisher-Yates shuffle using uniform_int (std::shuffle's draw pattern is
    /// implementation-defined).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent stream derived from this one's state plus a tag.
    Rng fork(std::string_view tag);

  private:
    std::mt19937_64 gen_;
};

/// Stable seed derivation: FNV-1a over the tag, mixed with splitmix64.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace simtune
