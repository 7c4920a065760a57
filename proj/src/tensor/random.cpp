#include "satgan/random.hpp"

#include <string_view>

namespace satgan {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_name(std::string_view name) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

real Rng::normal(real mean, real stddev) { return mean + stddev * normal_(engine_); }

real Rng::uniform(real lo, real hi) {
  // 24 random mantissa bits; avoids the platform-dependent real distributions.
  const real u = static_cast<real>(engine_() >> 40) * (1.0f / 16777216.0f);
  return lo + (hi - lo) * u;
}

int Rng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(engine_() % span);
}

bool Rng::bernoulli(double p) {
  const double u = static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
  return u < p;
}

Tensor Rng::normal_tensor(Shape shape, real mean, real stddev) {
  Tensor t(std::move(shape));
  for (real& v : t.mutable_data()) v = normal(mean, stddev);
  return t;
}

}  // namespace satgan
