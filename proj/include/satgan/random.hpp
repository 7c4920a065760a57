#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "satgan/tensor.hpp"

namespace satgan {

/// splitmix64 finaliser; derives independent stream seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t hash_name(std::string_view name);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  real normal(real mean = 0.0f, real stddev = 1.0f);
  real uniform(real lo = 0.0f, real hi = 1.0f);
  int uniform_int(int lo, int hi);  // inclusive
  bool bernoulli(double p);
  std::uint64_t next_u64() { return engine_(); }

  Tensor normal_tensor(Shape shape, real mean, real stddev);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<real> normal_{0.0f, 1.0f};
};

}  // namespace satgan
