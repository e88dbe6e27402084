#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace etpso {

// Seeded randomness source shared by every stochastic operator. All draws go
// through one engine so a run is a pure function of its seed.
class rng {
public:
  using engine_type = std::mt19937_64;

  explicit rng(std::uint64_t seed) : engine_{seed} {
  }

  // Uniform in [0, 1).
  double unit() {
    return std::uniform_real_distribution<double>{0.0, 1.0}(engine_);
  }

  double uniform(double lower, double upper) {
    return lower + (upper - lower) * unit();
  }

  // Uniform in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>{0, n - 1}(engine_);
  }

  std::int64_t integer(std::int64_t lower, std::int64_t upper) {
    return std::uniform_int_distribution<std::int64_t>{lower, upper}(engine_);
  }

  double normal(double mean, double sigma) {
    if (sigma == 0.0) {
      return mean;
    }
    return std::normal_distribution<double>{mean, sigma}(engine_);
  }

  engine_type& engine() noexcept {
    return engine_;
  }

private:
  engine_type engine_;
};

} // namespace etpso
