#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace engage {

/// SplitMix64 (Steele, Lea & Flood 2014): a 64-bit Weyl-sequence state
/// (state += 0x9e3779b97f4a7c15) followed by a fixed output mix.
///
/// Every random draw in the library goes through this generator together with
/// the helpers below, so results are bit-identical across compilers and
/// standard libraries (std:: distributions are not).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;
  std::uint64_t operator()() noexcept { return next(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) noexcept;

  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

 private:
  std::uint64_t state_;
};

/// Derives an independent child seed for a named stream, e.g.
/// derive_seed(master, "cv/folds"). Child = mix(master ^ fnv1a64(stream)).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index) noexcept;

/// Fisher-Yates shuffle driven by SplitMix64::below.
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace engage
