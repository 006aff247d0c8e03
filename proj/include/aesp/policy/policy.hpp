#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/crypto/bytes.hpp"
#include "aesp/crypto/canonical_json.hpp"

namespace aesp::policy {

enum class Scope { auto_payment, negotiation, commitment, full };

int rank(Scope scope) noexcept;
std::string_view to_string(Scope scope) noexcept;
Scope scope_from_string(std::string_view name);

/// Operating hours, minute resolution. start > end wraps past midnight.
struct TimeWindow {
  int start_minute = 0;  // 0..1439
  int end_minute = 0;

  /// Parses "HH:MM" pairs; throws Error(invalid_argument) on bad input.
  static TimeWindow parse(std::string_view start, std::string_view end);
  std::string start_text() const;
  std::string end_text() const;

  bool operator==(const TimeWindow&) const = default;
};

struct PolicyConditions {
  std::optional<std::int64_t> max_amount_per_tx;
  std::optional<std::int64_t> max_amount_per_day;
  std::optional<std::int64_t> max_amount_per_week;
  std::optional<std::int64_t> max_amount_per_month;
  std::vector<std::string> allow_list_addresses;
  std::vector<std::string> allow_list_chains;
  std::vector<std::string> allow_list_methods;
  std::optional<TimeWindow> time_window;
  std::int64_t min_balance_after = 0;
  bool require_review_first_pay = false;

  bool operator==(const PolicyConditions&) const = default;
};

struct Policy {
  std::string id;
  std::string agent_id;
  crypto::Bytes owner_xid;
  Scope scope = Scope::auto_payment;
  PolicyConditions conditions;
  std::int64_t created_at = 0;
  std::int64_t expires_at = 0;

  /// Half-open: created_at <= now < expires_at.
  bool active_at(std::int64_t now_ms) const noexcept {
    return created_at <= now_ms && now_ms < expires_at;
  }

  Json to_json() const;
  static Policy from_json(const Json& j);
  bool operator==(const Policy&) const = default;
};

struct ActionRequest {
  std::string id;
  std::string agent_id;
  std::int64_t amount = 0;  // micro-units
  std::string to;
  std::string chain;
  std::string method;
  std::int64_t timestamp = 0;
  std::int64_t current_balance = 0;

  Json to_json() const;
  static ActionRequest from_json(const Json& j);
};

/// Stable check identifiers, used in reports and ablation masks.
enum class Check : int {
  amount = 1,
  time_window = 2,
  address = 3,
  chain = 4,
  method = 5,
  first_payment = 6,
  min_balance = 7,
  budget = 8,
};

inline constexpr int kCheckCount = 8;
std::string_view to_string(Check check) noexcept;

/// Bitmask over checks; bit (id - 1) set means the check runs.
using CheckMask = std::uint32_t;
inline constexpr CheckMask kAllChecks = 0xffu;
constexpr CheckMask without(CheckMask mask, Check c) {
  return mask & ~(1u << (static_cast<int>(c) - 1));
}
constexpr bool enabled(CheckMask mask, Check c) {
  return (mask >> (static_cast<int>(c) - 1)) & 1u;
}

}  // namespace aesp::policy
