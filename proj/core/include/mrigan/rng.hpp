#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mrigan {

// Deterministic random stream backed by std::mt19937_64 (identical integer
// output on every conforming platform). Real-valued draws are built on top of
// the raw 64-bit stream so no library distribution is involved.
class Rng {
public:
  explicit Rng(uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  uint64_t seed() const { return seed_; }
  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be > 0.
  uint64_t uniform_int(uint64_t n);
  // Standard normal via the polar (Marsaglia) method.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream, keyed by a path such as "dagan/g/enc0/conv/w".
  // The same (seed, name) pair always yields the same stream.
  Rng derive(const std::string& name) const;
  Rng derive(uint64_t salt) const;

private:
  std::mt19937_64 engine_;
  uint64_t seed_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 step, used for seed derivation and cell-id hashing.
uint64_t splitmix64(uint64_t x);
// FNV-1a hash of a string, used to key named parameter streams.
uint64_t fnv1a64(const std::string& s);

}  // namespace mrigan
