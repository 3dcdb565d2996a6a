#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace spibb {

/// Deterministic cross-platform generator (splitmix64). Every distribution
/// below is implemented directly on the raw 64-bit stream so that sampled
/// artifacts are bit-identical across standard libraries and platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n), n > 0 (unbiased, rejection sampling).
    int uniform_int(int n);

    /// Dirichlet(1,...,1) vector of length k: normalized exponentials, each
    /// strictly positive.
    std::vector<double> dirichlet(int k);

    /// Index sampled from an unnormalized nonnegative weight vector.
    int categorical(std::span<const double> weights);

    /// k distinct values from {0,...,n-1} in ascending order.
    std::vector<int> sample_without_replacement(int n, int k);

  private:
    std::uint64_t state_;
};

/// Child seed for (stage, index) under a master seed. Counter-based: adding
/// stages or indices never perturbs other children's streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage, std::uint64_t index);

}  // namespace spibb
