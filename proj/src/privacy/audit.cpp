#include "aesp/privacy/audit.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "aesp/crypto/bytes.hpp"
#include "aesp/error.hpp"

namespace aesp::privacy {

namespace {

crypto::Bytes to_bytes(std::string_view s) { return crypto::Bytes(s.begin(), s.end()); }

}  // namespace

Json ContextTag::fields() const {
  return Json{{"tag_id", tag_id},
              {"agent_id", agent_id},
              {"policy_id", policy_id},
              {"commitment_id", commitment_id ? Json(*commitment_id) : Json()},
              {"ephemeral_address", ephemeral_address},
              {"metadata", metadata},
              {"created_at", created_at}};
}

Json ContextTag::archived_json() const { return Json{{"tag_id", tag_id}, {"ciphertext", ciphertext}}; }

crypto::SymmetricKey derive_audit_key(const crypto::IdentityRoot& root) {
  return crypto::derive_symmetric_key(root, constants::kAuditKeyContext);
}

Json open_tag(const crypto::SymmetricKey& audit_key, const Json& archived) {
  try {
    auto tag_id = archived.at("tag_id").get<std::string>();
    auto sealed = crypto::from_base64(archived.at("ciphertext").get<std::string>());
    auto plain = crypto::aead_open(audit_key, sealed, to_bytes(tag_id));
    auto doc = parse_json(std::string(plain.begin(), plain.end()));
    if (doc.value("tag_id", std::string()) != tag_id) {
      throw Error(Errc::authentication_failed, "tag id does not match sealed contents");
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed archived tag: ") + e.what());
  }
}

void MemoryArchiveSink::append(const std::vector<Json>& batch, std::int64_t now) {
  std::lock_guard lock(mu_);
  batches_.push_back(batch);
  times_.push_back(now);
}

std::vector<std::vector<Json>> MemoryArchiveSink::batches() const {
  std::lock_guard lock(mu_);
  return batches_;
}

std::vector<std::int64_t> MemoryArchiveSink::times() const {
  std::lock_guard lock(mu_);
  return times_;
}

FileArchiveSink::FileArchiveSink(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(Errc::storage_failure, "cannot create " + dir_.string() + ": " + ec.message());
}

std::string FileArchiveSink::file_name_for(std::int64_t now_ms) {
  using namespace std::chrono;
  auto day = floor<days>(sys_time<milliseconds>(milliseconds(now_ms)));
  year_month_day ymd(day);
  char buf[40];
  std::snprintf(buf, sizeof buf, "archive-%04d-%02u-%02u.jsonl", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

void FileArchiveSink::append(const std::vector<Json>& batch, std::int64_t now) {
  std::lock_guard lock(mu_);
  std::ofstream out(dir_ / file_name_for(now), std::ios::app | std::ios::binary);
  out << canonical_json(Json{{"archived_at", now}, {"tags", batch}}) << '\n';
  out.flush();
  if (!out) throw Error(Errc::storage_failure, "archive write failed in " + dir_.string());
}

std::vector<Json> FileArchiveSink::read_all() const {
  std::lock_guard lock(mu_);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Json> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto doc = parse_json(line);
      for (const auto& t : doc.at("tags")) out.push_back(t);
    }
  }
  return out;
}

ContextTagManager::ContextTagManager(const crypto::IdentityRoot& root, ArchiveSink& sink,
                                     ArchiveOptions options, crypto::RandomSource& rng)
    : key_(derive_audit_key(root)), sink_(sink), options_(options), rng_(rng) {
  if (options_.strategy == ArchiveStrategy::count_threshold && options_.threshold == 0) {
    throw Error(Errc::invalid_argument, "archive threshold must be positive");
  }
}

ContextTag ContextTagManager::create_tag(const TagInput& input, std::int64_t now) {
  ContextTag tag;
  tag.tag_id = crypto::new_uuid(rng_);
  tag.agent_id = input.agent_id;
  tag.policy_id = input.policy_id;
  tag.commitment_id = input.commitment_id;
  tag.ephemeral_address = input.ephemeral_address;
  tag.metadata = input.metadata.is_null() ? Json::object() : input.metadata;
  tag.created_at = now;
  auto body = canonical_json(tag.fields());
  tag.ciphertext = crypto::to_base64(crypto::aead_seal(key_, to_bytes(body), to_bytes(tag.tag_id), rng_));

  std::lock_guard lock(mu_);
  local_.push_back(tag);
  if (options_.strategy == ArchiveStrategy::time_window && pending_.empty()) first_pending_at_ = now;
  pending_.push_back(tag.archived_json());
  switch (options_.strategy) {
    case ArchiveStrategy::immediate:
      flush_locked(now);
      break;
    case ArchiveStrategy::count_threshold:
      if (pending_.size() >= options_.threshold) flush_locked(now);
      break;
    case ArchiveStrategy::time_window:
      if (now >= *first_pending_at_ + options_.window_ms) flush_locked(now);
      break;
  }
  return tag;
}

std::size_t ContextTagManager::flush_locked(std::int64_t now) {
  if (pending_.empty()) return 0;
  sink_.append(pending_, now);
  auto n = pending_.size();
  archived_ += n;
  pending_.clear();
  first_pending_at_.reset();
  return n;
}

std::size_t ContextTagManager::sweep(std::int64_t now) {
  std::lock_guard lock(mu_);
  if (options_.strategy == ArchiveStrategy::time_window && first_pending_at_ &&
      now >= *first_pending_at_ + options_.window_ms) {
    return flush_locked(now);
  }
  return 0;
}

std::size_t ContextTagManager::flush(std::int64_t now) {
  std::lock_guard lock(mu_);
  return flush_locked(now);
}

std::size_t ContextTagManager::pending_count() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

std::size_t ContextTagManager::archived_count() const {
  std::lock_guard lock(mu_);
  return archived_;
}

std::vector<ContextTag> ContextTagManager::local_tags() const {
  std::lock_guard lock(mu_);
  return local_;
}

}  // namespace aesp::privacy
