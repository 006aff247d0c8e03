#include "aesp/policy/change.hpp"

#include <algorithm>

#include "aesp/error.hpp"

namespace aesp::policy {

namespace {

// An absent cap is unlimited, so removing one counts as raising it.
bool cap_raised(const std::optional<std::int64_t>& old_cap,
                const std::optional<std::int64_t>& new_cap) {
  if (!old_cap) return false;
  if (!new_cap) return true;
  return *new_cap > *old_cap;
}

std::string describe_cap(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : std::string("unlimited");
}

}  // namespace

std::string_view to_string(ChangeType t) noexcept {
  switch (t) {
    case ChangeType::budget_increase: return "budget_increase";
    case ChangeType::scope_escalation: return "scope_escalation";
    case ChangeType::addr_remove_all: return "addr_remove_all";
    case ChangeType::addr_add: return "addr_add";
    case ChangeType::time_window_remove: return "time_window_remove";
    case ChangeType::min_balance_lower: return "min_balance_lower";
    case ChangeType::first_pay_disable: return "first_pay_disable";
    case ChangeType::expiration_extend: return "expiration_extend";
  }
  return "unknown";
}

std::string_view to_string(ApprovalLevel a) noexcept {
  switch (a) {
    case ApprovalLevel::none: return "none";
    case ApprovalLevel::review: return "review";
    case ApprovalLevel::biometric: return "biometric";
  }
  return "unknown";
}

ApprovalLevel approval_for(ChangeType t) noexcept {
  switch (t) {
    case ChangeType::budget_increase:
    case ChangeType::scope_escalation:
    case ChangeType::addr_remove_all:
      return ApprovalLevel::biometric;
    default:
      return ApprovalLevel::review;
  }
}

bool PolicyChangeReport::has(ChangeType t) const {
  return std::any_of(changes.begin(), changes.end(),
                     [&](const PolicyChange& c) { return c.type == t; });
}

Json PolicyChangeReport::to_json() const {
  Json arr = Json::array();
  for (const auto& c : changes) arr.push_back({{"type", to_string(c.type)}, {"detail", c.detail}});
  return Json{{"changes", arr}, {"required_approval", to_string(required_approval)}};
}

PolicyChangeReport classify_change(const Policy& o, const Policy& n) {
  if (o.id != n.id) throw Error(Errc::id_mismatch, "policy ids differ: " + o.id + " vs " + n.id);
  PolicyChangeReport report;
  auto add = [&](ChangeType t, std::string detail) {
    report.changes.push_back({t, std::move(detail)});
    report.required_approval = std::max(report.required_approval, approval_for(t));
  };
  const auto& oc = o.conditions;
  const auto& nc = n.conditions;

  struct Cap {
    const char* name;
    const std::optional<std::int64_t>& old_v;
    const std::optional<std::int64_t>& new_v;
  };
  const Cap caps[] = {{"max_amount_per_tx", oc.max_amount_per_tx, nc.max_amount_per_tx},
                      {"max_amount_per_day", oc.max_amount_per_day, nc.max_amount_per_day},
                      {"max_amount_per_week", oc.max_amount_per_week, nc.max_amount_per_week},
                      {"max_amount_per_month", oc.max_amount_per_month, nc.max_amount_per_month}};
  std::string raised;
  for (const auto& cap : caps) {
    if (cap_raised(cap.old_v, cap.new_v)) {
      if (!raised.empty()) raised += ", ";
      raised += std::string(cap.name) + " " + describe_cap(cap.old_v) + " -> " +
                describe_cap(cap.new_v);
    }
  }
  if (!raised.empty()) add(ChangeType::budget_increase, raised);

  if (rank(n.scope) > rank(o.scope)) {
    add(ChangeType::scope_escalation,
        std::string(to_string(o.scope)) + " -> " + std::string(to_string(n.scope)));
  }

  if (!oc.allow_list_addresses.empty() && nc.allow_list_addresses.empty()) {
    add(ChangeType::addr_remove_all, "address allowlist cleared");
  } else if (!nc.allow_list_addresses.empty()) {
    std::string added;
    for (const auto& a : nc.allow_list_addresses) {
      bool known = std::any_of(oc.allow_list_addresses.begin(), oc.allow_list_addresses.end(),
                               [&](const std::string& b) { return a == b; });
      if (!known) added += (added.empty() ? "" : ", ") + a;
    }
    if (!added.empty()) add(ChangeType::addr_add, added);
  }

  if (oc.time_window && !nc.time_window) add(ChangeType::time_window_remove, "time window removed");
  if (nc.min_balance_after < oc.min_balance_after) {
    add(ChangeType::min_balance_lower,
        std::to_string(oc.min_balance_after) + " -> " + std::to_string(nc.min_balance_after));
  }
  if (oc.require_review_first_pay && !nc.require_review_first_pay) {
    add(ChangeType::first_pay_disable, "first-payment review disabled");
  }
  if (n.expires_at > o.expires_at) {
    add(ChangeType::expiration_extend,
        std::to_string(o.expires_at) + " -> " + std::to_string(n.expires_at));
  }
  return report;
}

}  // namespace aesp::policy
