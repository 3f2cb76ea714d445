#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace spatialqa {

// SplitMix64 stream keyed by a name, e.g. "seed/scene0000_00/rel_dist/3".
// Streams with different names are statistically independent, and a stream's
// output depends on nothing but its name, so generation order never matters.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  static Rng named(std::string_view name);

  std::uint64_t next();
  // Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[static_cast<std::size_t>(below(i))]);
    }
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample(std::size_t n, std::size_t k);

 private:
  std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view text);

}  // namespace spatialqa
