#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aesp::storage {

/// Key/value persistence. Keys use the "aesp:" namespace; values are
/// canonical JSON text. Implementations give read-your-writes within one
/// instance and are safe for concurrent callers.
class StorageAdapter {
 public:
  virtual ~StorageAdapter() = default;
  virtual std::optional<std::string> get(std::string_view key) = 0;
  /// Returns once the value is durable for this adapter.
  virtual void set(std::string_view key, std::string_view value) = 0;
  virtual void erase(std::string_view key) = 0;
  /// Sorted keys starting with prefix.
  virtual std::vector<std::string> keys(std::string_view prefix) = 0;
};

class MemoryStorage final : public StorageAdapter {
 public:
  std::optional<std::string> get(std::string_view key) override;
  void set(std::string_view key, std::string_view value) override;
  void erase(std::string_view key) override;
  std::vector<std::string> keys(std::string_view prefix) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::string, std::less<>> data_;
};

/// One file per key under dir. Key bytes outside [A-Za-z0-9._-] are
/// %XX-escaped in the file name. Writes go through a temp file + rename.
/// Throws Error(storage_failure) on I/O errors.
class FileStorage final : public StorageAdapter {
 public:
  explicit FileStorage(std::filesystem::path dir);

  std::optional<std::string> get(std::string_view key) override;
  void set(std::string_view key, std::string_view value) override;
  void erase(std::string_view key) override;
  std::vector<std::string> keys(std::string_view prefix) override;

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path path_for(std::string_view key) const;

  std::mutex mu_;
  std::filesystem::path dir_;
};

/// FileStorage at $AESP_STORAGE_DIR when set, otherwise MemoryStorage.
std::shared_ptr<StorageAdapter> storage_from_env();

}  // namespace aesp::storage
