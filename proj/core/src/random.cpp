#include "engage/random.hpp"

#include "engage/common.hpp"

namespace engage {

namespace {

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SplitMix64::next() noexcept {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix(state_);
}

double SplitMix64::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  // Largest multiple of bound representable; draws above it are rejected.
  const std::uint64_t limit = max() - (max() % bound + 1) % bound;
  std::uint64_t draw = next();
  while (draw > limit) draw = next();
  return draw % bound;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) noexcept {
  return mix(master ^ fnv1a64(stream)) ^ 0x2545f4914f6cdd1dULL;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index) noexcept {
  return mix(derive_seed(master, stream) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

}  // namespace engage
