#include "aesp/gateway/gateway.hpp"

#include <algorithm>

#include "aesp/error.hpp"
#include "aesp/gateway/authorization.hpp"

namespace aesp::gateway {

namespace {

std::atomic<std::uint64_t> g_executed{0}, g_by_policy{0}, g_by_review{0}, g_violations{0};

std::vector<std::string> violation_reasons(const policy::PolicyDecision& d) {
  std::vector<std::string> out;
  for (const auto& e : d.evaluations) {
    for (auto c : e.failed_checks) out.push_back(e.policy_id + ":" + std::string(policy::to_string(c)));
  }
  if (out.empty()) out.emplace_back("no_active_policy");
  return out;
}

Json optional_limit(const std::vector<policy::Policy>& ps,
                    std::optional<std::int64_t> policy::PolicyConditions::*field) {
  std::optional<std::int64_t> best;
  for (const auto& p : ps) {
    const auto& v = p.conditions.*field;
    if (v && (!best || *v < *best)) best = v;
  }
  return best ? Json(*best) : Json(nullptr);
}

}  // namespace

std::string_view to_string(AuthorizeStatus s) noexcept {
  switch (s) {
    case AuthorizeStatus::executed: return "executed";
    case AuthorizeStatus::rejected: return "rejected";
    case AuthorizeStatus::frozen: return "frozen";
    case AuthorizeStatus::expired: return "expired";
  }
  return "?";
}

Json AuthorizeOutcome::to_json() const {
  Json j{{"status", to_string(status)},
         {"decision_id", decision_id},
         {"action", action.to_json()},
         {"decision", decision.to_json()},
         {"review_request_ids", review_request_ids},
         {"reason", reason}};
  j["review"] = review ? review->to_json() : Json(nullptr);
  j["signature"] = signature ? Json{{"curve", crypto::to_string(signature->curve)},
                                    {"hex", crypto::to_hex(signature->bytes)}}
                             : Json(nullptr);
  j["ephemeral_address"] = ephemeral_address ? Json(*ephemeral_address) : Json(nullptr);
  j["tag_id"] = tag_id ? Json(*tag_id) : Json(nullptr);
  return j;
}

Json PolicyChangeOutcome::to_json() const {
  return Json{{"accepted", accepted}, {"report", report.to_json()}, {"reason", reason}};
}

SovereigntyStats global_sovereignty_stats() {
  return {g_executed.load(), g_by_policy.load(), g_by_review.load(), g_violations.load()};
}

Gateway::Gateway(crypto::IdentityRoot root, std::shared_ptr<storage::StorageAdapter> storage,
                 GatewayOptions options, crypto::RandomSource& rng, std::shared_ptr<privacy::ArchiveSink> sink)
    : root_(std::move(root)),
      options_(options),
      rng_(rng),
      sink_(std::move(sink)),
      reviews_(std::move(storage), rng),
      tags_(root_, *sink_, options.archive, rng) {
  if (!root_.valid()) throw Error(Errc::invalid_argument, "gateway needs an identity root");
}

void Gateway::register_agent(const std::string& agent_id, std::vector<policy::Policy> policies) {
  if (agent_id.empty()) throw Error(Errc::invalid_argument, "empty agent id");
  for (const auto& p : policies) {
    if (p.agent_id != agent_id) {
      throw Error(Errc::invalid_argument, "policy " + p.id + " belongs to " + p.agent_id);
    }
  }
  std::lock_guard lock(agents_mu_);
  agents_[agent_id].policies = std::move(policies);
}

bool Gateway::has_agent(const std::string& agent_id) const {
  std::lock_guard lock(agents_mu_);
  return agents_.count(agent_id) > 0;
}

std::vector<std::string> Gateway::agent_ids() const {
  std::lock_guard lock(agents_mu_);
  std::vector<std::string> out;
  for (const auto& [id, a] : agents_) out.push_back(id);
  return out;
}

Gateway::Agent& Gateway::agent(const std::string& agent_id) {
  auto it = agents_.find(agent_id);
  if (it == agents_.end()) throw Error(Errc::unknown_agent, "unknown agent " + agent_id);
  return it->second;
}

const Gateway::Agent& Gateway::agent(const std::string& agent_id) const {
  auto it = agents_.find(agent_id);
  if (it == agents_.end()) throw Error(Errc::unknown_agent, "unknown agent " + agent_id);
  return it->second;
}

std::vector<policy::Policy> Gateway::policies(const std::string& agent_id) const {
  std::lock_guard lock(agents_mu_);
  return agent(agent_id).policies;
}

policy::EvaluateOptions Gateway::eval_options() const {
  policy::EvaluateOptions o;
  o.tz_offset_minutes = options_.tz_offset_minutes;
  return o;
}

AuthorizeOutcome Gateway::authorize(const policy::ActionRequest& action, privacy::PrivacyLevel level,
                                    std::int64_t now) {
  AuthorizeOutcome out;
  out.decision_id = crypto::new_uuid(rng_);
  return run(action, level, now, false, std::move(out));
}

AuthorizeOutcome Gateway::run(const policy::ActionRequest& action, privacy::PrivacyLevel level,
                              std::int64_t now, bool reentry, AuthorizeOutcome out) {
  out.action = action;
  std::vector<policy::Policy> pols;
  std::mutex* agent_mu = nullptr;
  {
    std::lock_guard lock(agents_mu_);
    auto& a = agent(action.agent_id);
    pols = a.policies;
    agent_mu = a.mu.get();
  }
  if (reviews_.is_frozen(action.agent_id)) {
    out.status = AuthorizeStatus::frozen;
    out.reason = "agent frozen";
    return out;
  }

  {
    // evaluate and record under the agent lock so two requests cannot both
    // spend the same headroom
    std::lock_guard lock(*agent_mu);
    out.decision = policy::evaluate(action, pols, ledger_, now, eval_options());
    if (out.decision.verdict == policy::Verdict::approved) {
      execute(out, level, now);
      return out;
    }
  }

  review::ReviewTicket ticket;
  try {
    review::SubmitOptions so;
    so.urgency = options_.urgency;
    so.deadline_ms = now + options_.review_deadline_ms;
    ticket = reviews_.submit(action, violation_reasons(out.decision), now, so);
  } catch (const Error& e) {
    if (e.code() != Errc::agent_frozen) throw;
    out.status = AuthorizeStatus::frozen;
    out.reason = "agent frozen";
    return out;
  }
  out.review_request_ids.push_back(ticket.id);

  review::ReviewResponse response;
  try {
    response = ticket.handle.get();
  } catch (const Error& e) {
    if (e.code() == Errc::agent_frozen) {
      out.status = AuthorizeStatus::frozen;
      out.reason = "agent frozen while awaiting review";
      return out;
    }
    if (e.code() == Errc::review_expired) {
      out.status = AuthorizeStatus::expired;
      out.reason = "review deadline passed";
      return out;
    }
    throw;
  }
  out.review = response;

  switch (response.verdict) {
    case review::ReviewVerdict::reject:
      out.status = AuthorizeStatus::rejected;
      out.reason = "rejected by reviewer";
      return out;
    case review::ReviewVerdict::modify:
      if (reentry) {
        out.status = AuthorizeStatus::rejected;
        out.reason = "second modify; a modified action is re-gated only once";
        return out;
      }
      // the modified action goes through the gate again; no bypass
      return run(*response.modified_action, level, now, true, std::move(out));
    case review::ReviewVerdict::approve: break;
  }

  std::lock_guard lock(*agent_mu);
  if (reviews_.is_frozen(action.agent_id)) {
    out.status = AuthorizeStatus::frozen;
    out.reason = "agent frozen before execution";
    return out;
  }
  execute(out, level, now);
  return out;
}

void Gateway::execute(AuthorizeOutcome& out, privacy::PrivacyLevel level, std::int64_t now) {
  const auto& a = out.action;
  const bool by_policy = out.decision.verdict == policy::Verdict::approved;
  const bool by_review = out.review && out.review->verdict == review::ReviewVerdict::approve;
  ++executed_;
  ++g_executed;
  if (by_policy) {
    ++by_policy_;
    ++g_by_policy;
  } else if (by_review) {
    ++by_review_;
    ++g_by_review;
  } else {
    ++violations_;
    ++g_violations;
    throw Error(Errc::invalid_argument, "refusing to execute without approval");
  }

  auto derived = privacy::derive_address(root_, level, a.agent_id, privacy::Direction::outbound, a.chain,
                                         out.decision_id);
  out.ephemeral_address = derived.address;
  out.signature = sign_authorization(root_, a, out.decision_id);
  ledger_.record_spend(a.agent_id, a.amount, now);

  std::string policy_id;
  if (out.decision.matched_policy_id) {
    policy_id = *out.decision.matched_policy_id;
    ledger_.mark_first_payment(a.agent_id, policy_id);
  } else {
    // a human-approved payment counts as the first payment under every
    // active policy that asked for one
    std::lock_guard lock(agents_mu_);
    for (const auto& p : agent(a.agent_id).policies) {
      if (p.active_at(now)) ledger_.mark_first_payment(a.agent_id, p.id);
    }
    policy_id = "review:" + (out.review_request_ids.empty() ? std::string() : out.review_request_ids.back());
  }

  privacy::TagInput tag;
  tag.agent_id = a.agent_id;
  tag.policy_id = policy_id;
  tag.ephemeral_address = derived.address;
  tag.metadata = Json{{"decision_id", out.decision_id},
                      {"amount", a.amount},
                      {"chain", a.chain},
                      {"method", a.method},
                      {"privacy_level", privacy::to_string(level)}};
  out.tag_id = tags_.create_tag(tag, now).tag_id;
  out.status = AuthorizeStatus::executed;
  out.reason = by_policy ? "within policy" : "approved by reviewer";
}

PolicyChangeOutcome Gateway::apply_policy_change(const policy::Policy& current, const policy::Policy& updated,
                                                 const std::optional<review::ReviewResponse>& human) {
  PolicyChangeOutcome out;
  out.report = policy::classify_change(current, updated);
  const bool approved = human && human->verdict == review::ReviewVerdict::approve;
  switch (out.report.required_approval) {
    case policy::ApprovalLevel::none:
      out.accepted = true;
      break;
    case policy::ApprovalLevel::review:
      out.accepted = approved;
      if (!approved) out.reason = "change needs an approving review";
      break;
    case policy::ApprovalLevel::biometric:
      out.accepted = approved && human->biometric_confirmed;
      if (!out.accepted) out.reason = "tier violation: change needs biometric approval";
      break;
  }
  if (!out.accepted) return out;

  std::lock_guard lock(agents_mu_);
  auto& a = agent(updated.agent_id);
  auto it = std::find_if(a.policies.begin(), a.policies.end(),
                         [&](const policy::Policy& p) { return p.id == updated.id; });
  if (it != a.policies.end()) *it = updated;
  else a.policies.push_back(updated);
  return out;
}

PolicyChangeOutcome Gateway::propose_policy_change(const policy::Policy& current,
                                                   const policy::Policy& updated, std::int64_t now) {
  auto report = policy::classify_change(current, updated);
  if (report.required_approval == policy::ApprovalLevel::none) {
    return apply_policy_change(current, updated, std::nullopt);
  }
  if (!has_agent(updated.agent_id)) throw Error(Errc::unknown_agent, "unknown agent " + updated.agent_id);

  // the review queue carries actions; a policy change rides as a zero-value one
  policy::ActionRequest change;
  change.id = "policy-change:" + updated.id;
  change.agent_id = updated.agent_id;
  change.method = "policy_change";
  change.timestamp = now;
  std::vector<std::string> reasons;
  for (const auto& c : report.changes) {
    reasons.push_back("change:" + std::string(policy::to_string(c.type)) + " " + c.detail);
  }

  PolicyChangeOutcome out;
  out.report = report;
  review::SubmitOptions so;
  so.urgency = options_.urgency;
  so.deadline_ms = now + options_.review_deadline_ms;
  so.tier = report.required_approval == policy::ApprovalLevel::biometric ? review::ReviewTier::biometric
                                                                          : review::ReviewTier::review;
  review::ReviewResponse response;
  try {
    response = reviews_.submit(change, std::move(reasons), now, so).handle.get();
  } catch (const Error& e) {
    if (e.code() != Errc::agent_frozen && e.code() != Errc::review_expired) throw;
    out.reason = e.code() == Errc::agent_frozen ? "agent frozen" : "review deadline passed";
    return out;
  }
  if (response.verdict == review::ReviewVerdict::modify) {
    out.reason = "a policy change cannot be modified in review";
    return out;
  }
  return apply_policy_change(current, updated, response);
}

void Gateway::freeze(const std::string& agent_id, std::int64_t now) {
  if (!has_agent(agent_id)) throw Error(Errc::unknown_agent, "unknown agent " + agent_id);
  reviews_.freeze(agent_id, now);
}

void Gateway::unfreeze(const std::string& agent_id) {
  if (!has_agent(agent_id)) throw Error(Errc::unknown_agent, "unknown agent " + agent_id);
  reviews_.unfreeze(agent_id);
}

bool Gateway::is_frozen(const std::string& agent_id) const { return reviews_.is_frozen(agent_id); }

Json Gateway::budget_json(const std::string& agent_id, std::int64_t now) const {
  auto pols = policies(agent_id);
  auto t = ledger_.rolling_totals(agent_id, now);
  using C = policy::PolicyConditions;
  return Json{{"agent_id", agent_id},
              {"at", now},
              {"day", t.day},
              {"week", t.week},
              {"month", t.month},
              {"limits",
               {{"day", optional_limit(pols, &C::max_amount_per_day)},
                {"week", optional_limit(pols, &C::max_amount_per_week)},
                {"month", optional_limit(pols, &C::max_amount_per_month)}}}};
}

Json Gateway::agent_json(const std::string& agent_id, std::int64_t now) const {
  return Json{{"agent_id", agent_id}, {"frozen", is_frozen(agent_id)}, {"budget", budget_json(agent_id, now)}};
}

std::size_t Gateway::expire_sweep(std::int64_t now) { return reviews_.expire_sweep(now); }

SovereigntyStats Gateway::sovereignty() const {
  return {executed_.load(), by_policy_.load(), by_review_.load(), violations_.load()};
}

}  // namespace aesp::gateway
