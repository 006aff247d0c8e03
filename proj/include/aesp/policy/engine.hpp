#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aesp/policy/budget_ledger.hpp"
#include "aesp/policy/policy.hpp"

namespace aesp::policy {

enum class Verdict { approved, review_required };
std::string_view to_string(Verdict v) noexcept;

struct PolicyEvaluation {
  std::string policy_id;
  std::vector<Check> failed_checks;  // in check order
};

struct PolicyDecision {
  Verdict verdict = Verdict::review_required;
  std::optional<std::string> matched_policy_id;
  /// One entry per active policy that was evaluated, in evaluation order.
  std::vector<PolicyEvaluation> evaluations;

  /// Lowest-numbered failing check across all evaluations, if any.
  std::optional<Check> first_failed_check() const;
  bool failed(Check c) const;
  Json to_json() const;
};

struct EvaluateOptions {
  int tz_offset_minutes = 0;
  CheckMask checks = kAllChecks;
};

/// The eight-check gate with OR semantics across active policies. Every
/// check runs for every evaluated policy so that all failures are reported;
/// evaluation stops at the first policy with no failures.
PolicyDecision evaluate(const ActionRequest& request, const std::vector<Policy>& policies,
                        const BudgetLedger& ledger, std::int64_t now,
                        const EvaluateOptions& options = {});

/// Failing checks of a single policy (no activity filter).
std::vector<Check> failing_checks(const ActionRequest& request, const Policy& policy,
                                  const BudgetLedger& ledger, std::int64_t now,
                                  const EvaluateOptions& options = {});

/// Inclusive on both ends; start > end wraps past midnight.
bool is_within_time_window(std::int64_t t_ms, const TimeWindow& window,
                           int tz_offset_minutes = 0);

/// Address comparison used by the allowlist check: exact, except that
/// 0x-prefixed EVM addresses compare case-insensitively.
bool same_address(std::string_view a, std::string_view b);

}  // namespace aesp::policy
