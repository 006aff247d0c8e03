#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "aesp/constants.hpp"
#include "aesp/crypto/canonical_json.hpp"
#include "aesp/crypto/random.hpp"
#include "aesp/crypto/symmetric.hpp"

namespace aesp::privacy {

struct ContextTag {
  std::string tag_id;
  std::string agent_id;
  std::string policy_id;
  std::optional<std::string> commitment_id;
  std::string ephemeral_address;
  Json metadata = Json::object();
  std::int64_t created_at = 0;
  /// base64 of nonce || AES-GCM(canonical_json(fields)) with AAD = tag_id.
  std::string ciphertext;

  /// The plaintext fields (everything except ciphertext).
  Json fields() const;
  /// What leaves the device: tag_id + ciphertext only.
  Json archived_json() const;
};

/// Owner audit key: symmetric key under the "audit:tags:v1" context.
crypto::SymmetricKey derive_audit_key(const crypto::IdentityRoot& root);

/// Errors: authentication_failed (wrong key or tampering).
Json open_tag(const crypto::SymmetricKey& audit_key, const Json& archived);

/// Archive destination. append gets one batch of archived tags.
class ArchiveSink {
 public:
  virtual ~ArchiveSink() = default;
  virtual void append(const std::vector<Json>& batch, std::int64_t now) = 0;
};

class MemoryArchiveSink final : public ArchiveSink {
 public:
  void append(const std::vector<Json>& batch, std::int64_t now) override;
  std::vector<std::vector<Json>> batches() const;
  std::vector<std::int64_t> times() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::vector<Json>> batches_;
  std::vector<std::int64_t> times_;
};

/// One JSON-lines file per UTC day ("archive-YYYY-MM-DD.jsonl"), one line
/// per batch: {"archived_at":..., "tags":[...]}.
class FileArchiveSink final : public ArchiveSink {
 public:
  explicit FileArchiveSink(std::filesystem::path dir);
  void append(const std::vector<Json>& batch, std::int64_t now) override;
  /// Every archived tag across all files, in file then line order.
  std::vector<Json> read_all() const;

  static std::string file_name_for(std::int64_t now_ms);

 private:
  mutable std::mutex mu_;
  std::filesystem::path dir_;
};

enum class ArchiveStrategy { immediate, time_window, count_threshold };

struct ArchiveOptions {
  ArchiveStrategy strategy = ArchiveStrategy::immediate;
  std::int64_t window_ms = constants::kAuditTimeWindowMs;
  std::size_t threshold = constants::kAuditBatchThreshold;
};

struct TagInput {
  std::string agent_id;
  std::string policy_id;
  std::optional<std::string> commitment_id;
  std::string ephemeral_address;
  Json metadata = Json::object();
};

/// Creates encrypted tags and pushes them to the sink per strategy.
class ContextTagManager {
 public:
  ContextTagManager(const crypto::IdentityRoot& root, ArchiveSink& sink, ArchiveOptions options = {},
                    crypto::RandomSource& rng = crypto::system_random());

  ContextTag create_tag(const TagInput& input, std::int64_t now);
  /// time_window: flushes when now >= first pending + window. Returns the
  /// number of tags archived.
  std::size_t sweep(std::int64_t now);
  /// Archives whatever is pending regardless of strategy.
  std::size_t flush(std::int64_t now);

  std::size_t pending_count() const;
  std::size_t archived_count() const;
  /// All tags created so far (local store).
  std::vector<ContextTag> local_tags() const;

 private:
  std::size_t flush_locked(std::int64_t now);

  crypto::SymmetricKey key_;
  ArchiveSink& sink_;
  ArchiveOptions options_;
  crypto::RandomSource& rng_;
  mutable std::mutex mu_;
  std::vector<ContextTag> local_;
  std::vector<Json> pending_;
  std::optional<std::int64_t> first_pending_at_;
  std::size_t archived_ = 0;
};

}  // namespace aesp::privacy
