#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "aesp/crypto/canonical_json.hpp"

namespace aesp::policy {

struct SpendRecord {
  std::int64_t timestamp = 0;
  std::int64_t amount = 0;
};

struct BudgetTotals {
  std::int64_t day = 0;
  std::int64_t week = 0;
  std::int64_t month = 0;

  bool operator==(const BudgetTotals&) const = default;
};

/// Append-only spend history plus first-payment markers. Internally
/// synchronized; callers that need decide-then-record atomicity must hold
/// their own per-agent lock around evaluate + record_spend.
class BudgetLedger {
 public:
  BudgetLedger() = default;
  BudgetLedger(const BudgetLedger& other);
  BudgetLedger& operator=(const BudgetLedger& other);

  /// Throws Error(invalid_argument) for negative amounts.
  void record_spend(const std::string& agent_id, std::int64_t amount, std::int64_t timestamp);

  /// day: (now - 24h, now]; week: (now - 7d, now]; month: same UTC calendar
  /// month as now, up to and including now.
  BudgetTotals rolling_totals(const std::string& agent_id, std::int64_t now) const;

  void mark_first_payment(const std::string& agent_id, const std::string& policy_id);
  bool has_prior_payment(const std::string& agent_id, const std::string& policy_id) const;

  std::vector<SpendRecord> records(const std::string& agent_id) const;

  Json to_json() const;
  static BudgetLedger from_json(const Json& j);

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::vector<SpendRecord>> spends_;
  std::set<std::pair<std::string, std::string>> first_payments_;
};

/// Start of the UTC calendar month containing t (ms).
std::int64_t utc_month_start(std::int64_t t_ms);

}  // namespace aesp::policy
