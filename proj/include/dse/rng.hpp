#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace dse {

/// Deterministic pseudo-random stream. All distributions are implemented
/// on top of the raw 64-bit engine output so that results depend only on
/// the seed and the call sequence, not on the standard library's
/// distribution internals. State round-trips through save()/restore() for
/// checkpointing.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed);

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform01();

  /// Uniform integer in [0, n). n must be > 0. Unbiased (rejection).
  uint64_t uniform_int(uint64_t n);

  /// Bernoulli draw: true with probability p.
  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via the polar method (no cached spare).
  double normal();

  /// Gamma(shape, 1) for shape >= 1, Marsaglia-Tsang squeeze.
  double gamma(double shape);

  std::string save() const;
  void restore(const std::string& state);

  uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent seeds.
uint64_t mix64(uint64_t x);

/// Derives a named sub-stream seed from a master seed. Adding new stream
/// names never perturbs existing ones.
uint64_t substream_seed(uint64_t master, std::string_view name);

}  // namespace dse
