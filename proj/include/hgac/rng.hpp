#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "hgac/common.hpp"

namespace hgac {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a stream tag.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream ^ 0x632be59bd9b4e019ULL));
}

/// Deterministic random stream. All draws are built from explicit 53-bit
/// uniforms so sequences do not depend on library distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

  uint64_t raw() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw ContractError("Rng::uniform_int: n must be positive");
    int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

  /// Samples an index from an (unnormalized is OK) nonnegative weight vector.
  int categorical(const std::vector<double>& weights) {
    if (weights.empty()) throw ContractError("Rng::categorical: empty weights");
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    double cum = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
      cum += weights[i];
      if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(p[i], p[j]);
    }
    return p;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace hgac
