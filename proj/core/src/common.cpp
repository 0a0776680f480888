#include "engage/common.hpp"

#include <array>

namespace engage {

std::string_view to_string(Metric metric) {
  return metric == Metric::kLikes ? "likes" : "comments";
}

Metric parse_metric(std::string_view text) {
  if (text == "likes") return Metric::kLikes;
  if (text == "comments") return Metric::kComments;
  throw ValidationError("unknown metric '" + std::string(text) + "' (expected likes|comments)");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr std::array<char, 16> kDigits{'0', '1', '2', '3', '4', '5', '6', '7',
                                                '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

}  // namespace engage
