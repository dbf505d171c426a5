#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "qdspin/units.hpp"

namespace qdspin {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11). Each output
/// block is a pure function of (counter, key), so sample i of stream s is
/// reproducible bit-exactly regardless of evaluation order or threading.
class Philox4x64 {
 public:
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr std::string_view algorithm = "philox4x64-10";

  static constexpr Block generate(Block ctr, Key key) {
    ctr = round(ctr, key);
    for (int r = 1; r < 10; ++r) {
      key[0] += 0x9E3779B97F4A7C15ULL;
      key[1] += 0xBB67AE8584CAA73BULL;
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                                std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }
  static constexpr Block round(const Block& c, const Key& k) {
    std::uint64_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
    mulhilo(0xD2E7470EE14C6C93ULL, c[0], hi0, lo0);
    mulhilo(0xCA5A826395121157ULL, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// A seeded stream of variates indexed by sample number. Stream ids split a
/// master seed into independent sub-streams (one per realization, shot or
/// replica).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

  Philox4x64::Block block(std::uint64_t index, std::uint64_t lane = 0) const {
    return Philox4x64::generate({index, lane, 0, 0}, key_);
  }

  /// Uniform in the open interval (0, 1).
  static double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(std::uint64_t index) const { return to_open_unit(block(index)[0]); }

  /// Standard normal via Box-Muller on the first two words of block `index`.
  double normal(std::uint64_t index) const {
    const auto b = block(index);
    const double u1 = to_open_unit(b[0]);
    const double u2 = to_open_unit(b[1]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(units::two_pi * u2);
  }

  /// Poisson variate with mean `lambda`: exact multiplication method below
  /// lambda = 30, rounded normal approximation above.
  double poisson(std::uint64_t index, double lambda) const {
    if (!(lambda > 0.0)) return 0.0;
    if (lambda >= 30.0) {
      const double v = std::round(lambda + std::sqrt(lambda) * normal(index));
      return v < 0.0 ? 0.0 : v;
    }
    const double limit = std::exp(-lambda);
    double prod = 1.0;
    std::uint64_t k = 0;
    std::uint64_t word = 0;
    Philox4x64::Block b = block(index, 1);
    for (;;) {
      if (word == 4) {
        b = block(index, 1 + k / 4);
        word = 0;
      }
      prod *= to_open_unit(b[word++]);
      if (prod <= limit) return static_cast<double>(k);
      ++k;
    }
  }

 private:
  Philox4x64::Key key_;
};

}  // namespace qdspin
