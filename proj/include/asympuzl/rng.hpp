#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace asympuzl {

// Deterministic randomness for puzzle generation. mt19937_64 has a
// standard-mandated output sequence; the bounded draws and shuffles below are
// implemented by hand so that generation is reproducible across standard
// library implementations (std::uniform_int_distribution and std::shuffle
// are not).
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Unbiased draw in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t value = engine_();
    while (value >= limit) {
      value = engine_();
    }
    return value % n;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle(perm);
    return perm;
  }

  // Uniform over the n!-1 non-identity permutations; requires n >= 2.
  std::vector<std::size_t> non_identity_permutation(std::size_t n) {
    while (true) {
      auto perm = permutation(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (perm[i] != i) {
          return perm;
        }
      }
    }
  }

private:
  std::mt19937_64 engine_;
};

} // namespace asympuzl
