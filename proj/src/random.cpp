#include "zsnpg/random.hpp"

#include <cmath>

namespace zsnpg {

double RandomStream::exponential() {
  double u = uniform();
  if (u <= 0.0) u = 0x1.0p-53;
  return -std::log(u);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                          std::uint64_t outer, std::uint64_t inner) {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t s = master;
  s = mix(s + 0x9e3779b97f4a7c15ULL * (tag + 1));
  s = mix(s + 0x9e3779b97f4a7c15ULL * (outer + 1));
  s = mix(s + 0x9e3779b97f4a7c15ULL * (inner + 1));
  return s;
}

}  // namespace zsnpg
