// Seeded random-number generation with implementation-pinned transforms.
//
// The std:: distribution objects are implementation-defined, which would break
// the byte-identical rerun contract between toolchains, so the variate
// transforms live here: Box-Muller normals, inversion exponentials, and
// Knuth / PTRS (Hoermann 1993) Poisson sampling on top of mt19937_64.

#pragma once

#include <cstdint>
#include <random>

namespace sagnac {

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent child generator for a numbered sub-stream.
  Rng derive(std::uint64_t stream) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();
  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos();

  double normal(double mean = 0.0, double sigma = 1.0);
  double exponential(double rate);
  std::int64_t poisson(double mean);

 private:
  std::int64_t poisson_knuth(double mean);
  std::int64_t poisson_ptrs(double mean);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// SplitMix64 finalizer; used for seed mixing.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace sagnac
