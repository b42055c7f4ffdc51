#include "bnngp/rng.hpp"

namespace bnngp {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

RngSeed RngSeed::child(std::uint64_t index) const {
  return {mix64(mix64(seed) ^ (index * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL))};
}

}  // namespace bnngp
