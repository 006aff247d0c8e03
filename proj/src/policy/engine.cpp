#include "aesp/policy/engine.hpp"

#include <algorithm>
#include <cctype>

namespace aesp::policy {

namespace {

constexpr std::int64_t kMinuteMs = 60'000;
constexpr std::int64_t kMinutesPerDay = 1440;

bool contains_address(const std::vector<std::string>& list, std::string_view to) {
  return std::any_of(list.begin(), list.end(),
                     [&](const std::string& a) { return same_address(a, to); });
}

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

bool within_budget(const PolicyConditions& c, const BudgetTotals& t, std::int64_t amount) {
  if (c.max_amount_per_day && t.day + amount > *c.max_amount_per_day) return false;
  if (c.max_amount_per_week && t.week + amount > *c.max_amount_per_week) return false;
  if (c.max_amount_per_month && t.month + amount > *c.max_amount_per_month) return false;
  return true;
}

bool has_budget_limit(const PolicyConditions& c) {
  return c.max_amount_per_day || c.max_amount_per_week || c.max_amount_per_month;
}

}  // namespace

std::string_view to_string(Verdict v) noexcept {
  return v == Verdict::approved ? "approved" : "review_required";
}

bool same_address(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  if (a.size() == 42 && a.substr(0, 2) == "0x" && b.substr(0, 2) == "0x") {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(a[i])) !=
          std::tolower(static_cast<unsigned char>(b[i]))) {
        return false;
      }
    }
    return true;
  }
  return a == b;
}

bool is_within_time_window(std::int64_t t_ms, const TimeWindow& window, int tz_offset_minutes) {
  std::int64_t minutes = t_ms / kMinuteMs;
  if (t_ms % kMinuteMs < 0) --minutes;  // floor for pre-epoch times
  std::int64_t local = ((minutes + tz_offset_minutes) % kMinutesPerDay + kMinutesPerDay) %
                       kMinutesPerDay;
  if (window.start_minute <= window.end_minute) {
    return local >= window.start_minute && local <= window.end_minute;
  }
  return local >= window.start_minute || local <= window.end_minute;
}

std::vector<Check> failing_checks(const ActionRequest& r, const Policy& p,
                                  const BudgetLedger& ledger, std::int64_t now,
                                  const EvaluateOptions& opt) {
  const auto& c = p.conditions;
  std::vector<Check> failed;
  auto check = [&](Check id, auto&& passes) {
    if (enabled(opt.checks, id) && !passes()) failed.push_back(id);
  };
  check(Check::amount, [&] { return !c.max_amount_per_tx || r.amount <= *c.max_amount_per_tx; });
  check(Check::time_window, [&] {
    return !c.time_window || is_within_time_window(r.timestamp, *c.time_window, opt.tz_offset_minutes);
  });
  check(Check::address, [&] {
    return c.allow_list_addresses.empty() || contains_address(c.allow_list_addresses, r.to);
  });
  check(Check::chain, [&] { return c.allow_list_chains.empty() || contains(c.allow_list_chains, r.chain); });
  check(Check::method, [&] { return c.allow_list_methods.empty() || contains(c.allow_list_methods, r.method); });
  check(Check::first_payment, [&] {
    return !c.require_review_first_pay || ledger.has_prior_payment(r.agent_id, p.id);
  });
  check(Check::min_balance, [&] {
    return c.min_balance_after <= 0 || r.current_balance - r.amount >= c.min_balance_after;
  });
  check(Check::budget, [&] {
    return !has_budget_limit(c) || within_budget(c, ledger.rolling_totals(r.agent_id, now), r.amount);
  });
  return failed;
}

PolicyDecision evaluate(const ActionRequest& request, const std::vector<Policy>& policies,
                        const BudgetLedger& ledger, std::int64_t now,
                        const EvaluateOptions& options) {
  PolicyDecision decision;
  for (const auto& p : policies) {
    if (p.agent_id != request.agent_id || !p.active_at(now)) continue;
    PolicyEvaluation eval{p.id, failing_checks(request, p, ledger, now, options)};
    bool passed = eval.failed_checks.empty();
    decision.evaluations.push_back(std::move(eval));
    if (passed) {
      decision.verdict = Verdict::approved;
      decision.matched_policy_id = p.id;
      break;
    }
  }
  return decision;
}

std::optional<Check> PolicyDecision::first_failed_check() const {
  std::optional<Check> first;
  for (const auto& e : evaluations) {
    for (auto c : e.failed_checks) {
      if (!first || static_cast<int>(c) < static_cast<int>(*first)) first = c;
    }
  }
  return first;
}

bool PolicyDecision::failed(Check c) const {
  return std::any_of(evaluations.begin(), evaluations.end(), [&](const PolicyEvaluation& e) {
    return std::find(e.failed_checks.begin(), e.failed_checks.end(), c) != e.failed_checks.end();
  });
}

Json PolicyDecision::to_json() const {
  Json evals = Json::array();
  for (const auto& e : evaluations) {
    Json checks = Json::array();
    for (auto c : e.failed_checks) checks.push_back(static_cast<int>(c));
    evals.push_back({{"policy_id", e.policy_id}, {"failed_checks", checks}});
  }
  return Json{{"verdict", to_string(verdict)},
              {"matched_policy_id", matched_policy_id ? Json(*matched_policy_id) : Json(nullptr)},
              {"evaluations", evals}};
}

}  // namespace aesp::policy
