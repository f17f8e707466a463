#pragma once

#include <cmath>
#include <cstdint>

namespace riseflock::rng {

// Counter-based generator. Every draw is a pure function of
// (seed, stream, counter), so runs are reproducible across platforms and
// streams can be consumed in parallel without shared state.
//
// Stream layout used by the simulator:
//   channel 0  initial agent positions      (one stream per agent)
//   channel 1  scenario model parameters    (one stream per agent)
//   channel 2  position-measurement noise   (one stream per agent)
//   channel 3  velocity-measurement noise   (one stream per agent)
//   channel 4  box-sampling chi estimation  (single stream, agent = 0)
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream ^ 0x5851F42D4C957F2Dull))) {}

  static std::uint64_t stream_id(std::uint32_t agent, std::uint32_t channel) {
    return (static_cast<std::uint64_t>(channel) << 32) | agent;
  }

  std::uint64_t next_u64() {
    return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ull);
  }

  /// Uniform on [0, 1), 53 bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double sigma) { return sigma * normal(); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

enum Channel : std::uint32_t {
  kInitialPosition = 0,
  kModelParams = 1,
  kMeasurementPosition = 2,
  kMeasurementVelocity = 3,
  kChiSampling = 4,
};

}  // namespace riseflock::rng
