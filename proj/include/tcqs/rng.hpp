#pragma once

#include <cstdint>

#include "tcqs/normal.hpp"

namespace tcqs {

// Counter-based generator: draw i of a stream is mix64(key + (i+1)*gamma), the
// SplitMix64 finalizer applied to an affine counter. Any draw depends only on
// (key, index), so results are independent of thread schedule, and disjoint
// streams are made by deriving fresh keys rather than jumping state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  // Child key for stream `tag`; double mixing keeps child keys off the parent's
  // output sequence.
  static std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag) {
    return mix64(mix64(key ^ 0xd1b54a32d192ed03ULL) + (tag + 1) * kGamma);
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  // Uniform on the open interval (0,1): 53-bit mantissa shifted off zero.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // Standard normal via the library's own quantile function, which keeps
  // sequences identical across platforms and standard libraries.
  double next_normal() { return inverse_normal_cdf(next_uniform()); }

  // Student t with integer df as Z / sqrt(chi2_df / df).
  double next_student_t(int df) {
    const double z = next_normal();
    double chi2 = 0.0;
    for (int k = 0; k < df; ++k) {
      const double g = next_normal();
      chi2 += g * g;
    }
    return z / std::sqrt(chi2 / static_cast<double>(df));
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tcqs
