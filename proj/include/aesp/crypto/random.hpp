#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <span>
#include <string>

namespace aesp::crypto {

/// Source of random bytes. Implementations must tolerate concurrent calls.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();
};

/// OS-backed CSPRNG (libsodium randombytes).
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// Reproducible stream for tests and experiments. Not cryptographically
/// secure; never use it for production key material.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mutex mu_;
  std::mt19937_64 engine_;
};

RandomSource& system_random();

/// Uniform double in [0, 1) with 53 bits of resolution.
double uniform_unit(RandomSource& rng);
/// Uniform integer in [0, bound); unbiased. bound must be > 0.
std::uint64_t uniform_below(RandomSource& rng, std::uint64_t bound);
/// Uniform integer in [lo, hi], inclusive on both ends.
std::int64_t uniform_int(RandomSource& rng, std::int64_t lo, std::int64_t hi);
/// Standard normal draw (Box-Muller).
double standard_normal(RandomSource& rng);

/// RFC 4122 version-4 UUID in lowercase 8-4-4-4-12 form.
std::string new_uuid(RandomSource& rng);

}  // namespace aesp::crypto
