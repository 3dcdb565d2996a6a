#include "spibb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spibb {

namespace {

// Fixed finalizer from splitmix64; also used to mix seed components.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::next_double() { return std::ldexp(static_cast<double>(next_u64() >> 11), -53); }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

int Rng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return static_cast<int>(v % bound);
}

std::vector<double> Rng::dirichlet(int k) {
    if (k <= 0) throw std::invalid_argument("Rng::dirichlet: k must be positive");
    std::vector<double> w(static_cast<size_t>(k));
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        double e = 0.0;
        while (e <= 0.0) e = -std::log1p(-next_double());  // Exp(1), rejecting the measure-zero 0
        w[static_cast<size_t>(i)] = e;
        total += e;
    }
    for (double& v : w) v /= total;
    return w;
}

int Rng::categorical(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("Rng::categorical: empty weights");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("Rng::categorical: negative weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("Rng::categorical: all-zero weights");
    double u = next_double() * total;
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    // Floating-point accumulation can leave u just past the last positive bin.
    for (size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return static_cast<int>(i);
    }
    return 0;
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw std::invalid_argument("Rng::sample_without_replacement: need 0 <= k <= n");
    std::vector<int> pool(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
    for (int i = 0; i < k; ++i) {
        int j = i + uniform_int(n - i);
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage, std::uint64_t index) {
    // Counter-based: each (stage, index) cell owns an independent stream head.
    return mix64(mix64(master ^ 0x5bf03635d2a84b4dULL) ^ mix64(stage * 0x9e3779b97f4a7c15ULL + index));
}

}  // namespace spibb
