#include "aesp/review/review.hpp"

#include <algorithm>
#include <array>

#include "aesp/constants.hpp"
#include "aesp/error.hpp"

namespace aesp::review {

namespace {

constexpr std::string_view kFreezePrefix = "aesp:freeze:";
constexpr std::string_view kReviewPrefix = "aesp:review:";

template <typename E, std::size_t N>
E from_names(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& names,
             const char* what) {
  for (const auto& [e, name] : names) {
    if (name == s) return e;
  }
  throw Error(Errc::parse_error, std::string("unknown ") + what + ": " + std::string(s));
}

const std::array<std::pair<Urgency, std::string_view>, 4> kUrgencyNames{{
    {Urgency::low, "low"}, {Urgency::normal, "normal"}, {Urgency::high, "high"},
    {Urgency::critical, "critical"}}};
const std::array<std::pair<ReviewStatus, std::string_view>, 6> kStatusNames{{
    {ReviewStatus::pending, "pending"},   {ReviewStatus::approved, "approved"},
    {ReviewStatus::rejected, "rejected"}, {ReviewStatus::modified, "modified"},
    {ReviewStatus::expired, "expired"},   {ReviewStatus::cancelled, "cancelled"}}};
const std::array<std::pair<ReviewTier, std::string_view>, 2> kTierNames{{
    {ReviewTier::review, "review"}, {ReviewTier::biometric, "biometric"}}};
const std::array<std::pair<ReviewVerdict, std::string_view>, 3> kVerdictNames{{
    {ReviewVerdict::approve, "approve"}, {ReviewVerdict::reject, "reject"},
    {ReviewVerdict::modify, "modify"}}};

template <typename E, std::size_t N>
std::string_view name_of(E e, const std::array<std::pair<E, std::string_view>, N>& names) {
  for (const auto& [v, name] : names) {
    if (v == e) return name;
  }
  return "unknown";
}

ReviewStatus status_for(ReviewVerdict v) {
  switch (v) {
    case ReviewVerdict::approve: return ReviewStatus::approved;
    case ReviewVerdict::reject: return ReviewStatus::rejected;
    case ReviewVerdict::modify: return ReviewStatus::modified;
  }
  return ReviewStatus::rejected;
}

ReviewEventType event_for(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::pending: return ReviewEventType::request_created;
    case ReviewStatus::approved: return ReviewEventType::request_approved;
    case ReviewStatus::rejected: return ReviewEventType::request_rejected;
    case ReviewStatus::modified: return ReviewEventType::request_modified;
    case ReviewStatus::expired: return ReviewEventType::request_expired;
    case ReviewStatus::cancelled: return ReviewEventType::request_cancelled;
  }
  return ReviewEventType::request_cancelled;
}

bool before(const ReviewRequest& a, std::uint64_t sa, const ReviewRequest& b, std::uint64_t sb) {
  if (a.urgency != b.urgency) return a.urgency > b.urgency;
  if (a.created_at != b.created_at) return a.created_at < b.created_at;
  return sa < sb;
}

}  // namespace

std::string_view to_string(Urgency u) noexcept { return name_of(u, kUrgencyNames); }
std::string_view to_string(ReviewStatus s) noexcept { return name_of(s, kStatusNames); }
std::string_view to_string(ReviewTier t) noexcept { return name_of(t, kTierNames); }
std::string_view to_string(ReviewVerdict v) noexcept { return name_of(v, kVerdictNames); }

std::string_view to_string(ReviewEventType t) noexcept {
  switch (t) {
    case ReviewEventType::request_created: return "request_created";
    case ReviewEventType::request_approved: return "request_approved";
    case ReviewEventType::request_rejected: return "request_rejected";
    case ReviewEventType::request_modified: return "request_modified";
    case ReviewEventType::request_expired: return "request_expired";
    case ReviewEventType::request_cancelled: return "request_cancelled";
  }
  return "unknown";
}

Urgency urgency_from_string(std::string_view s) { return from_names(s, kUrgencyNames, "urgency"); }
ReviewStatus review_status_from_string(std::string_view s) {
  return from_names(s, kStatusNames, "review status");
}
ReviewTier review_tier_from_string(std::string_view s) { return from_names(s, kTierNames, "tier"); }
ReviewVerdict review_verdict_from_string(std::string_view s) {
  return from_names(s, kVerdictNames, "verdict");
}

Json ReviewRequest::to_json() const {
  return Json{{"id", id},
              {"action", action.to_json()},
              {"agent_id", agent_id},
              {"violation_reasons", violation_reasons},
              {"urgency", to_string(urgency)},
              {"created_at", created_at},
              {"deadline", deadline},
              {"status", to_string(status)},
              {"required_tier", to_string(required_tier)}};
}

ReviewRequest ReviewRequest::from_json(const Json& j) {
  try {
    ReviewRequest r;
    r.id = j.at("id").get<std::string>();
    r.action = policy::ActionRequest::from_json(j.at("action"));
    r.agent_id = j.at("agent_id").get<std::string>();
    r.violation_reasons = j.at("violation_reasons").get<std::vector<std::string>>();
    r.urgency = urgency_from_string(j.at("urgency").get<std::string>());
    r.created_at = j.at("created_at").get<std::int64_t>();
    r.deadline = j.at("deadline").get<std::int64_t>();
    r.status = review_status_from_string(j.at("status").get<std::string>());
    r.required_tier = review_tier_from_string(j.at("required_tier").get<std::string>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed review request: ") + e.what());
  }
}

Json ReviewResponse::to_json() const {
  return Json{{"request_id", request_id},
              {"verdict", to_string(verdict)},
              {"modified_action", modified_action ? modified_action->to_json() : Json()},
              {"biometric_confirmed", biometric_confirmed},
              {"responder", responder},
              {"timestamp", timestamp}};
}

ReviewResponse ReviewResponse::from_json(const Json& j) {
  try {
    ReviewResponse r;
    r.request_id = j.value("request_id", std::string());
    r.verdict = review_verdict_from_string(j.at("verdict").get<std::string>());
    if (auto it = j.find("modified_action"); it != j.end() && !it->is_null()) {
      r.modified_action = policy::ActionRequest::from_json(*it);
    }
    r.biometric_confirmed = j.value("biometric_confirmed", false);
    r.responder = j.value("responder", std::string());
    r.timestamp = j.value("timestamp", std::int64_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed review response: ") + e.what());
  }
}

Json ReviewEvent::to_json() const {
  return Json{{"type", to_string(type)},
              {"request_id", request_id},
              {"timestamp", timestamp},
              {"payload", payload}};
}

ReviewQueue::ReviewQueue(std::shared_ptr<storage::StorageAdapter> storage, crypto::RandomSource& rng)
    : storage_(std::move(storage)), rng_(rng) {
  if (!storage_) throw Error(Errc::invalid_argument, "review queue needs a storage adapter");
  load();
}

void ReviewQueue::load() {
  for (const auto& key : storage_->keys(kFreezePrefix)) {
    frozen_.insert(key.substr(kFreezePrefix.size()));
  }
  std::vector<ReviewRequest> loaded;
  for (const auto& key : storage_->keys(kReviewPrefix)) {
    if (auto v = storage_->get(key)) {
      auto doc = parse_json(*v);
      loaded.push_back(ReviewRequest::from_json(doc.at("request")));
    }
  }
  std::sort(loaded.begin(), loaded.end(), [](const auto& a, const auto& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
  });
  for (auto& r : loaded) {
    Entry e;
    e.seq = next_seq_++;
    e.promise = std::make_shared<std::promise<ReviewResponse>>();
    e.handle = e.promise->get_future().share();
    if (auto v = storage_->get(std::string(kReviewPrefix) + r.id)) {
      auto doc = parse_json(*v);
      if (auto it = doc.find("response"); it != doc.end() && !it->is_null()) {
        e.response = ReviewResponse::from_json(*it);
      }
    }
    auto id = r.id;
    e.request = std::move(r);
    entries_.emplace(id, std::move(e));
  }
}

void ReviewQueue::persist(const Entry& e) {
  Json doc{{"request", e.request.to_json()},
           {"response", e.response ? e.response->to_json() : Json()}};
  storage_->set(std::string(kReviewPrefix) + e.request.id, canonical_json(doc));
}

void ReviewQueue::dispatch(std::unique_lock<std::mutex>& state_lock, std::vector<ReviewEvent> events,
                           std::vector<Completion> completions) {
  std::vector<Listener> listeners;
  listeners.reserve(listeners_.size());
  for (const auto& [token, l] : listeners_) listeners.push_back(l);
  std::unique_lock dispatch_lock(dispatch_mu_);
  state_lock.unlock();
  for (const auto& ev : events) {
    for (const auto& l : listeners) l(ev);
  }
  dispatch_lock.unlock();
  for (auto& c : completions) {
    if (c.value) {
      c.promise->set_value(*c.value);
    } else {
      c.promise->set_exception(std::make_exception_ptr(Error(c.error, c.message)));
    }
  }
}

ReviewTicket ReviewQueue::submit(const policy::ActionRequest& action,
                                 std::vector<std::string> violation_reasons, std::int64_t now,
                                 const SubmitOptions& options) {
  std::unique_lock lock(state_mu_);
  if (frozen_.count(action.agent_id)) {
    throw Error(Errc::agent_frozen, "agent " + action.agent_id + " is frozen");
  }
  Entry e;
  e.request.id = crypto::new_uuid(rng_);
  e.request.action = action;
  e.request.agent_id = action.agent_id;
  e.request.violation_reasons = std::move(violation_reasons);
  e.request.urgency = options.urgency;
  e.request.created_at = now;
  e.request.deadline = options.deadline_ms.value_or(now + constants::kReviewDeadlineMs);
  e.request.required_tier = options.tier;
  if (e.request.deadline <= now) {
    throw Error(Errc::invalid_argument, "review deadline must be after creation");
  }
  e.seq = next_seq_++;
  e.promise = std::make_shared<std::promise<ReviewResponse>>();
  e.handle = e.promise->get_future().share();
  persist(e);

  ReviewTicket ticket{e.request.id, e.handle};
  ReviewEvent ev{ReviewEventType::request_created, e.request.id, now, e.request.to_json()};
  entries_.emplace(e.request.id, std::move(e));
  dispatch(lock, {std::move(ev)}, {});
  return ticket;
}

void ReviewQueue::respond(const std::string& request_id, ReviewResponse response, std::int64_t now) {
  std::unique_lock lock(state_mu_);
  auto it = entries_.find(request_id);
  if (it == entries_.end()) throw Error(Errc::unknown_request, "no review " + request_id);
  auto& e = it->second;
  if (e.request.status != ReviewStatus::pending) {
    throw Error(Errc::already_resolved,
                "review " + request_id + " is " + std::string(to_string(e.request.status)));
  }
  if (now >= e.request.deadline) {
    throw Error(Errc::past_deadline, "review " + request_id + " passed its deadline");
  }
  if (response.verdict == ReviewVerdict::modify) {
    if (!response.modified_action) {
      throw Error(Errc::invalid_argument, "modify needs a modified_action");
    }
    if (response.modified_action->agent_id != e.request.agent_id) {
      throw Error(Errc::invalid_argument, "modified action belongs to another agent");
    }
  }
  // modify also authorizes an action, so it needs the same confirmation
  if (e.request.required_tier == ReviewTier::biometric && response.verdict != ReviewVerdict::reject &&
      !response.biometric_confirmed) {
    throw Error(Errc::tier_violation, "review " + request_id + " requires biometric confirmation");
  }
  response.request_id = request_id;
  if (response.timestamp == 0) response.timestamp = now;
  e.request.status = status_for(response.verdict);
  e.response = response;
  persist(e);

  ReviewEvent ev{event_for(e.request.status), request_id, now, response.to_json()};
  Completion c{e.promise, response, {}, {}};
  dispatch(lock, {std::move(ev)}, {std::move(c)});
}

void ReviewQueue::freeze(const std::string& agent_id, std::int64_t now) {
  std::unique_lock lock(state_mu_);
  if (!frozen_.count(agent_id)) {
    storage_->set(std::string(kFreezePrefix) + agent_id,
                  canonical_json(Json{{"agent_id", agent_id}, {"frozen", true}}));
    frozen_.insert(agent_id);
  }
  std::vector<Entry*> victims;
  for (auto& [id, e] : entries_) {
    if (e.request.agent_id == agent_id && e.request.status == ReviewStatus::pending) {
      victims.push_back(&e);
    }
  }
  std::sort(victims.begin(), victims.end(),
            [](const Entry* a, const Entry* b) { return before(a->request, a->seq, b->request, b->seq); });
  std::vector<ReviewEvent> events;
  std::vector<Completion> completions;
  for (auto* e : victims) {
    e->request.status = ReviewStatus::cancelled;
    persist(*e);
    events.push_back({ReviewEventType::request_cancelled, e->request.id, now,
                      Json{{"reason", to_string(Errc::agent_frozen)}, {"agent_id", agent_id}}});
    completions.push_back({e->promise, std::nullopt, Errc::agent_frozen,
                           "agent " + agent_id + " was frozen while review was pending"});
  }
  dispatch(lock, std::move(events), std::move(completions));
}

void ReviewQueue::unfreeze(const std::string& agent_id) {
  std::lock_guard lock(state_mu_);
  if (frozen_.erase(agent_id)) storage_->erase(std::string(kFreezePrefix) + agent_id);
}

bool ReviewQueue::is_frozen(const std::string& agent_id) const {
  std::lock_guard lock(state_mu_);
  return frozen_.count(agent_id) > 0;
}

std::vector<std::string> ReviewQueue::frozen_agents() const {
  std::lock_guard lock(state_mu_);
  return {frozen_.begin(), frozen_.end()};
}

std::uint64_t ReviewQueue::subscribe(Listener listener) {
  std::lock_guard lock(state_mu_);
  auto token = next_token_++;
  listeners_.emplace(token, std::move(listener));
  return token;
}

void ReviewQueue::unsubscribe(std::uint64_t token) {
  std::lock_guard lock(state_mu_);
  listeners_.erase(token);
}

std::size_t ReviewQueue::expire_sweep(std::int64_t now) {
  std::unique_lock lock(state_mu_);
  std::vector<Entry*> victims;
  for (auto& [id, e] : entries_) {
    if (e.request.status == ReviewStatus::pending && e.request.deadline <= now) victims.push_back(&e);
  }
  std::sort(victims.begin(), victims.end(), [](const Entry* a, const Entry* b) {
    return a->request.deadline != b->request.deadline ? a->request.deadline < b->request.deadline
                                                      : a->seq < b->seq;
  });
  std::vector<ReviewEvent> events;
  std::vector<Completion> completions;
  for (auto* e : victims) {
    e->request.status = ReviewStatus::expired;
    persist(*e);
    events.push_back({ReviewEventType::request_expired, e->request.id, now,
                      Json{{"deadline", e->request.deadline}}});
    completions.push_back({e->promise, std::nullopt, Errc::review_expired,
                           "review " + e->request.id + " expired without a response"});
  }
  auto count = victims.size();
  dispatch(lock, std::move(events), std::move(completions));
  return count;
}

std::vector<ReviewRequest> ReviewQueue::pending() const {
  std::lock_guard lock(state_mu_);
  std::vector<const Entry*> items;
  for (const auto& [id, e] : entries_) {
    if (e.request.status == ReviewStatus::pending) items.push_back(&e);
  }
  std::sort(items.begin(), items.end(),
            [](const Entry* a, const Entry* b) { return before(a->request, a->seq, b->request, b->seq); });
  std::vector<ReviewRequest> out;
  out.reserve(items.size());
  for (const auto* e : items) out.push_back(e->request);
  return out;
}

std::vector<ReviewRequest> ReviewQueue::all() const {
  std::lock_guard lock(state_mu_);
  std::vector<const Entry*> items;
  for (const auto& [id, e] : entries_) items.push_back(&e);
  std::sort(items.begin(), items.end(), [](const Entry* a, const Entry* b) { return a->seq < b->seq; });
  std::vector<ReviewRequest> out;
  for (const auto* e : items) out.push_back(e->request);
  return out;
}

std::optional<ReviewRequest> ReviewQueue::find(const std::string& id) const {
  std::lock_guard lock(state_mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.request;
}

std::optional<ReviewResponse> ReviewQueue::response_for(const std::string& id) const {
  std::lock_guard lock(state_mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.response;
}

}  // namespace aesp::review
