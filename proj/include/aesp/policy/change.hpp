#pragma once

#include <string>
#include <vector>

#include "aesp/policy/policy.hpp"

namespace aesp::policy {

enum class ChangeType {
  budget_increase,
  scope_escalation,
  addr_remove_all,
  addr_add,
  time_window_remove,
  min_balance_lower,
  first_pay_disable,
  expiration_extend,
};

enum class ApprovalLevel { none = 0, review = 1, biometric = 2 };

std::string_view to_string(ChangeType t) noexcept;
std::string_view to_string(ApprovalLevel a) noexcept;
ApprovalLevel approval_for(ChangeType t) noexcept;

struct PolicyChange {
  ChangeType type;
  std::string detail;
};

struct PolicyChangeReport {
  std::vector<PolicyChange> changes;
  ApprovalLevel required_approval = ApprovalLevel::none;

  bool has(ChangeType t) const;
  Json to_json() const;
};

/// Throws Error(id_mismatch) when the two versions have different ids.
PolicyChangeReport classify_change(const Policy& old_policy, const Policy& new_policy);

}  // namespace aesp::policy
