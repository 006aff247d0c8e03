#include "aesp/crypto/secure.hpp"

#include <sodium.h>

namespace aesp::crypto {

void secure_wipe(std::span<std::uint8_t> buffer) noexcept {
  if (!buffer.empty()) sodium_memzero(buffer.data(), buffer.size());
}

SecretBytes::SecretBytes(SecretBytes&& other) noexcept
    : data_(std::move(other.data_)) {
  other.data_.clear();
}

SecretBytes& SecretBytes::operator=(SecretBytes&& other) noexcept {
  if (this != &other) {
    wipe();
    data_ = std::move(other.data_);
    other.data_.clear();
  }
  return *this;
}

SecretBytes::~SecretBytes() { wipe(); }

void SecretBytes::wipe() noexcept { secure_wipe(data_); }

}  // namespace aesp::crypto
