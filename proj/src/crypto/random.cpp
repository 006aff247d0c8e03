#include "aesp/crypto/random.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <sodium.h>

#include "aesp/error.hpp"

namespace aesp::crypto {

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> buf{};
  fill(buf);
  std::uint64_t v = 0;
  for (auto b : buf) v = (v << 8) | b;
  return v;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (sodium_init() < 0) throw Error(Errc::invalid_argument, "libsodium init failed");
  randombytes_buf(out.data(), out.size());
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  std::lock_guard lock(mu_);
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = engine_();
    for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
      out[i] = static_cast<std::uint8_t>(word >> (56 - 8 * k));
    }
  }
}

RandomSource& system_random() {
  static SystemRandom instance;
  return instance;
}

double uniform_unit(RandomSource& rng) {
  return static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(RandomSource& rng, std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::invalid_argument, "uniform_below: bound is zero");
  // Rejection sampling over the largest multiple of bound.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  for (;;) {
    std::uint64_t v = rng.next_u64();
    if (v <= limit) return v % bound;
  }
}

std::int64_t uniform_int(RandomSource& rng, std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw Error(Errc::invalid_argument, "uniform_int: empty range");
  auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == UINT64_MAX) return static_cast<std::int64_t>(rng.next_u64());
  return lo + static_cast<std::int64_t>(uniform_below(rng, span + 1));
}

double standard_normal(RandomSource& rng) {
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string new_uuid(RandomSource& rng) {
  std::array<std::uint8_t, 16> b{};
  rng.fill(b);
  b[6] = static_cast<std::uint8_t>((b[6] & 0x0f) | 0x40);
  b[8] = static_cast<std::uint8_t>((b[8] & 0x3f) | 0x80);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(36);
  for (int i = 0; i < 16; ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
    out.push_back(hex[b[i] >> 4]);
    out.push_back(hex[b[i] & 0x0f]);
  }
  return out;
}

}  // namespace aesp::crypto
