#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace aesp::crypto {

/// Owning buffer for key material. The contents are overwritten with zeros
/// (through a store the optimizer may not elide) when the buffer is wiped,
/// reassigned from, or destroyed. Copying is disabled so a secret has exactly
/// one owner; share it through a shared_ptr<const SecretBytes>.
class SecretBytes {
 public:
  SecretBytes() = default;
  explicit SecretBytes(std::size_t size) : data_(size, 0) {}
  explicit SecretBytes(std::span<const std::uint8_t> bytes)
      : data_(bytes.begin(), bytes.end()) {}

  SecretBytes(const SecretBytes&) = delete;
  SecretBytes& operator=(const SecretBytes&) = delete;
  SecretBytes(SecretBytes&& other) noexcept;
  SecretBytes& operator=(SecretBytes&& other) noexcept;
  ~SecretBytes();

  void wipe() noexcept;

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::uint8_t* data() noexcept { return data_.data(); }
  const std::uint8_t* data() const noexcept { return data_.data(); }
  std::span<std::uint8_t> span() noexcept { return data_; }
  std::span<const std::uint8_t> span() const noexcept { return data_; }

 private:
  std::vector<std::uint8_t> data_;
};

/// Overwrites `buffer` with zeros; never optimized away.
void secure_wipe(std::span<std::uint8_t> buffer) noexcept;

}  // namespace aesp::crypto
