#include "aesp/storage/storage.hpp"

#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "aesp/error.hpp"

namespace aesp::storage {

namespace fs = std::filesystem;

namespace {

bool plain(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
         c == '_' || c == '-';
}

std::string escape_key(std::string_view key) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (char c : key) {
    if (plain(c)) {
      out.push_back(c);
    } else {
      auto b = static_cast<unsigned char>(c);
      out.push_back('%');
      out.push_back(kHex[b >> 4]);
      out.push_back(kHex[b & 0xf]);
    }
  }
  // "." and ".." are not usable file names
  if (out == "." || out == "..") out = "%2E" + out.substr(1);
  return out;
}

std::optional<std::string> unescape_key(const std::string& name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] != '%') {
      out.push_back(name[i]);
      continue;
    }
    if (i + 2 >= name.size()) return std::nullopt;
    int v = 0;
    for (int k = 1; k <= 2; ++k) {
      char c = name[i + k];
      int d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'A' && c <= 'F') ? c - 'A' + 10 : -1;
      if (d < 0) return std::nullopt;
      v = v * 16 + d;
    }
    out.push_back(static_cast<char>(v));
    i += 2;
  }
  return out;
}

}  // namespace

std::optional<std::string> MemoryStorage::get(std::string_view key) {
  std::lock_guard lock(mu_);
  auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

void MemoryStorage::set(std::string_view key, std::string_view value) {
  std::lock_guard lock(mu_);
  data_.insert_or_assign(std::string(key), std::string(value));
}

void MemoryStorage::erase(std::string_view key) {
  std::lock_guard lock(mu_);
  if (auto it = data_.find(key); it != data_.end()) data_.erase(it);
}

std::vector<std::string> MemoryStorage::keys(std::string_view prefix) {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (auto it = data_.lower_bound(prefix); it != data_.end() && it->first.starts_with(prefix); ++it) {
    out.push_back(it->first);
  }
  return out;
}

FileStorage::FileStorage(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(Errc::storage_failure, "cannot create " + dir_.string() + ": " + ec.message());
}

fs::path FileStorage::path_for(std::string_view key) const { return dir_ / escape_key(key); }

std::optional<std::string> FileStorage::get(std::string_view key) {
  std::lock_guard lock(mu_);
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void FileStorage::set(std::string_view key, std::string_view value) {
  std::lock_guard lock(mu_);
  auto target = path_for(key);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(value.data(), static_cast<std::streamsize>(value.size()));
    out.flush();
    if (!out) throw Error(Errc::storage_failure, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(Errc::storage_failure, "rename failed: " + ec.message());
}

void FileStorage::erase(std::string_view key) {
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::remove(path_for(key), ec);
  if (ec) throw Error(Errc::storage_failure, "remove failed: " + ec.message());
}

std::vector<std::string> FileStorage::keys(std::string_view prefix) {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (!entry.is_regular_file()) continue;
    auto name = entry.path().filename().string();
    if (name.ends_with(".tmp")) continue;
    auto key = unescape_key(name);
    if (key && key->starts_with(prefix)) out.push_back(*key);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::shared_ptr<StorageAdapter> storage_from_env() {
  if (const char* dir = std::getenv("AESP_STORAGE_DIR"); dir && *dir) {
    return std::make_shared<FileStorage>(dir);
  }
  return std::make_shared<MemoryStorage>();
}

}  // namespace aesp::storage
