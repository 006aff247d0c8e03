#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/crypto/random.hpp"
#include "aesp/error.hpp"
#include "aesp/policy/policy.hpp"
#include "aesp/storage/storage.hpp"

namespace aesp::review {

enum class Urgency { low, normal, high, critical };
enum class ReviewStatus { pending, approved, rejected, modified, expired, cancelled };
enum class ReviewTier { review, biometric };
enum class ReviewVerdict { approve, reject, modify };
enum class ReviewEventType {
  request_created,
  request_approved,
  request_rejected,
  request_modified,
  request_expired,
  request_cancelled,
};

inline constexpr ReviewVerdict kAllVerdicts[] = {ReviewVerdict::approve, ReviewVerdict::reject,
                                                 ReviewVerdict::modify};
inline constexpr ReviewTier kAllTiers[] = {ReviewTier::review, ReviewTier::biometric};

std::string_view to_string(Urgency u) noexcept;
std::string_view to_string(ReviewStatus s) noexcept;
std::string_view to_string(ReviewTier t) noexcept;
std::string_view to_string(ReviewVerdict v) noexcept;
std::string_view to_string(ReviewEventType t) noexcept;
Urgency urgency_from_string(std::string_view s);
ReviewStatus review_status_from_string(std::string_view s);
ReviewTier review_tier_from_string(std::string_view s);
ReviewVerdict review_verdict_from_string(std::string_view s);

inline bool is_terminal(ReviewStatus s) noexcept { return s != ReviewStatus::pending; }

struct ReviewRequest {
  std::string id;
  policy::ActionRequest action;
  std::string agent_id;
  std::vector<std::string> violation_reasons;
  Urgency urgency = Urgency::normal;
  std::int64_t created_at = 0;
  std::int64_t deadline = 0;
  ReviewStatus status = ReviewStatus::pending;
  ReviewTier required_tier = ReviewTier::review;

  Json to_json() const;
  static ReviewRequest from_json(const Json& j);
};

struct ReviewResponse {
  std::string request_id;
  ReviewVerdict verdict = ReviewVerdict::approve;
  std::optional<policy::ActionRequest> modified_action;
  bool biometric_confirmed = false;
  std::string responder;
  std::int64_t timestamp = 0;

  Json to_json() const;
  /// request_id may be absent (taken from the URL by the HTTP layer).
  static ReviewResponse from_json(const Json& j);
};

struct ReviewEvent {
  ReviewEventType type = ReviewEventType::request_created;
  std::string request_id;
  std::int64_t timestamp = 0;
  Json payload;

  Json to_json() const;
};

/// Resolves with the human's response, or throws Error(agent_frozen) /
/// Error(review_expired) when the request ends without one.
using ReviewHandle = std::shared_future<ReviewResponse>;

struct ReviewTicket {
  std::string id;
  ReviewHandle handle;
};

struct SubmitOptions {
  Urgency urgency = Urgency::normal;
  ReviewTier tier = ReviewTier::review;
  std::optional<std::int64_t> deadline_ms;  // absolute; default now + 30 min
};

using Listener = std::function<void(const ReviewEvent&)>;

/// Human review queue. Expiry only happens in expire_sweep(); nothing runs
/// in the background. Listeners are called synchronously, in emission
/// order, and must not call back into mutating methods.
class ReviewQueue {
 public:
  explicit ReviewQueue(std::shared_ptr<storage::StorageAdapter> storage =
                           std::make_shared<storage::MemoryStorage>(),
                       crypto::RandomSource& rng = crypto::system_random());

  ReviewQueue(const ReviewQueue&) = delete;
  ReviewQueue& operator=(const ReviewQueue&) = delete;

  /// Errors: agent_frozen.
  ReviewTicket submit(const policy::ActionRequest& action, std::vector<std::string> violation_reasons,
                      std::int64_t now, const SubmitOptions& options = {});

  /// Errors: unknown_request, already_resolved, past_deadline,
  /// tier_violation, invalid_argument (modify without modified_action).
  void respond(const std::string& request_id, ReviewResponse response, std::int64_t now);

  /// Idempotent. freeze cancels every pending request of the agent.
  void freeze(const std::string& agent_id, std::int64_t now = 0);
  void unfreeze(const std::string& agent_id);
  bool is_frozen(const std::string& agent_id) const;
  std::vector<std::string> frozen_agents() const;

  std::uint64_t subscribe(Listener listener);
  void unsubscribe(std::uint64_t token);

  /// Expires every pending request with deadline <= now.
  std::size_t expire_sweep(std::int64_t now);

  /// Pending requests in service order: urgency desc, created_at asc,
  /// then submission order.
  std::vector<ReviewRequest> pending() const;
  std::vector<ReviewRequest> all() const;
  std::optional<ReviewRequest> find(const std::string& id) const;
  std::optional<ReviewResponse> response_for(const std::string& id) const;

 private:
  struct Entry {
    ReviewRequest request;
    std::uint64_t seq = 0;
    std::optional<ReviewResponse> response;
    std::shared_ptr<std::promise<ReviewResponse>> promise;
    ReviewHandle handle;
  };
  struct Completion {
    std::shared_ptr<std::promise<ReviewResponse>> promise;
    std::optional<ReviewResponse> value;
    Errc error = Errc::invalid_argument;
    std::string message;
  };

  void persist(const Entry& e);
  void load();
  /// Must be called with state_mu_ held; hands the lock over to the
  /// dispatch lock so events go out in transition order.
  void dispatch(std::unique_lock<std::mutex>& state_lock, std::vector<ReviewEvent> events,
                std::vector<Completion> completions);

  std::shared_ptr<storage::StorageAdapter> storage_;
  crypto::RandomSource& rng_;
  mutable std::mutex state_mu_;
  std::mutex dispatch_mu_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> frozen_;
  std::uint64_t next_seq_ = 0;
  std::map<std::uint64_t, Listener> listeners_;
  std::uint64_t next_token_ = 1;
};

}  // namespace aesp::review
