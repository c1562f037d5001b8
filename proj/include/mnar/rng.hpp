#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mnar {

/// Seeded random stream. (seed, stream_id) fully determines the draw
/// sequence; distinct stream ids give statistically independent streams, so
/// replicate workers never share generator state. Uniform/normal/Bernoulli
/// draws are implemented here rather than via std distributions to keep the
/// sequences identical across standard-library implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    // splitmix64 mix of (seed, stream) to decorrelate nearby ids
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    auto next = [&s]() {
      s += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    };
    std::seed_seq seq{static_cast<std::uint32_t>(next()),
                      static_cast<std::uint32_t>(next() >> 32),
                      static_cast<std::uint32_t>(next()),
                      static_cast<std::uint32_t>(next() >> 32)};
    gen_.seed(seq);
  }

  double uniform() {  // in [0, 1)
    return (gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {  // Box-Muller with cached spare
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// n indices drawn with replacement from {0, ..., n-1}.
  std::vector<int> resample_indices(int n) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i)
      idx[i] = static_cast<int>(uniform() * n) % n;
    return idx;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mnar
