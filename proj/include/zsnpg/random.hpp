#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace zsnpg {

// Deterministic RNG used everywhere. We avoid std:: distributions because
// their output is implementation-defined; identical seeds must give
// identical traces on every platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {
    // Warm up so nearby seeds decorrelate.
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Index into a probability vector by linear scan over the cumulative sum.
  int categorical(const Eigen::VectorXd& probs) {
    double u = uniform();
    double cum = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      cum += probs[i];
      if (u < cum) return i;
    }
    return n - 1;
  }

  // Raw-pointer variant for hot sampling loops.
  int categorical(const double* probs, int n) {
    double u = uniform();
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
      cum += probs[i];
      if (u < cum) return i;
    }
    return n - 1;
  }

  // Exp(1) draw, used for Dirichlet sampling in the game generators.
  double exponential();

 private:
  std::uint64_t state_;
};

// Named sub-stream derivation: one stream per (module, outer, inner) so
// components draw independently and traces are reproducible.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                          std::uint64_t outer = 0, std::uint64_t inner = 0);

}  // namespace zsnpg
