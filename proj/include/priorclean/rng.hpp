#ifndef PRIORCLEAN_RNG_HPP_
#define PRIORCLEAN_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace priorclean {

// Seeded generator with platform-independent derived distributions.
// std::uniform_int_distribution and friends are implementation-defined, so
// every draw used for reproducible artifacts goes through this class.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  size_t uniform_index(size_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (no cached second value).
  double normal();

  // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<size_t> sample_without_replacement(size_t n, size_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 mixing of a seed with a stream tag; used to derive independent
// sub-seeds (per tree, per fold, per column) from one user seed.
uint64_t derive_seed(uint64_t seed, uint64_t stream);
uint64_t derive_seed(uint64_t seed, std::string_view tag);

}  // namespace priorclean

#endif  // PRIORCLEAN_RNG_HPP_
