#include <doctest.h>

#include <ctime>
#include <functional>

#include "aesp/crypto/random.hpp"
#include "aesp/error.hpp"
#include "aesp/policy/change.hpp"
#include "aesp/policy/engine.hpp"

using namespace aesp;
using namespace aesp::policy;

namespace {

constexpr std::int64_t U = 1'000'000;  // one unit in micro-units
constexpr std::int64_t kHour = 3'600'000;
constexpr std::int64_t kDay = 24 * kHour;
// 2026-03-15T10:00:00Z
constexpr std::int64_t kNow = 1773568800000;

Policy reference_policy(const std::string& agent = "agent-1", const std::string& id = "p1") {
  Policy p;
  p.id = id;
  p.agent_id = agent;
  p.scope = Scope::auto_payment;
  p.created_at = 0;
  p.expires_at = kNow + 365 * kDay;
  auto& c = p.conditions;
  c.max_amount_per_tx = 100 * U;
  c.max_amount_per_day = 500 * U;
  c.max_amount_per_week = 2000 * U;
  c.max_amount_per_month = 5000 * U;
  c.allow_list_addresses = {"0xAb5801a7D398351b8bE11C439e05C5B3259aeC9B", "vendor-b"};
  c.allow_list_chains = {"base"};
  c.allow_list_methods = {"transfer"};
  c.time_window = TimeWindow::parse("09:00", "21:00");
  c.min_balance_after = 10 * U;
  c.require_review_first_pay = true;
  return p;
}

ActionRequest good_request(std::int64_t amount = 50 * U) {
  return ActionRequest{"r1", "agent-1", amount, "vendor-b", "base", "transfer", kNow, 1000 * U};
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected aesp::Error");
  return Errc::invalid_argument;
}

// --- Independent oracle -----------------------------------------------------

bool oracle_in_window(std::int64_t t_ms, int start, int end) {
  std::time_t secs = static_cast<std::time_t>(t_ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  int m = tm.tm_hour * 60 + tm.tm_min;
  if (start <= end) return start <= m && m <= end;
  return m >= start || m <= end;
}

bool oracle_same_month(std::int64_t a_ms, std::int64_t b_ms) {
  std::time_t a = static_cast<std::time_t>(a_ms / 1000), b = static_cast<std::time_t>(b_ms / 1000);
  std::tm ta{}, tb{};
  gmtime_r(&a, &ta);
  gmtime_r(&b, &tb);
  return ta.tm_year == tb.tm_year && ta.tm_mon == tb.tm_mon;
}

struct OracleSpend {
  std::int64_t ts, amount;
};

bool oracle_policy_passes(const ActionRequest& r, const Policy& p,
                          const std::vector<OracleSpend>& history, bool prior, std::int64_t now) {
  const auto& c = p.conditions;
  if (c.max_amount_per_tx.has_value() && r.amount > c.max_amount_per_tx.value()) return false;
  if (c.time_window.has_value() &&
      !oracle_in_window(r.timestamp, c.time_window->start_minute, c.time_window->end_minute)) {
    return false;
  }
  if (!c.allow_list_addresses.empty()) {
    bool found = false;
    for (const auto& a : c.allow_list_addresses) found = found || a == r.to;
    if (!found) return false;
  }
  if (!c.allow_list_chains.empty()) {
    bool found = false;
    for (const auto& a : c.allow_list_chains) found = found || a == r.chain;
    if (!found) return false;
  }
  if (!c.allow_list_methods.empty()) {
    bool found = false;
    for (const auto& a : c.allow_list_methods) found = found || a == r.method;
    if (!found) return false;
  }
  if (c.require_review_first_pay && !prior) return false;
  if (c.min_balance_after > 0 && r.current_balance - r.amount < c.min_balance_after) return false;
  std::int64_t day = 0, week = 0, month = 0;
  for (const auto& s : history) {
    if (s.ts > now) continue;
    if (now - s.ts < kDay) day += s.amount;
    if (now - s.ts < 7 * kDay) week += s.amount;
    if (oracle_same_month(s.ts, now)) month += s.amount;
  }
  if (c.max_amount_per_day && day + r.amount > *c.max_amount_per_day) return false;
  if (c.max_amount_per_week && week + r.amount > *c.max_amount_per_week) return false;
  if (c.max_amount_per_month && month + r.amount > *c.max_amount_per_month) return false;
  return true;
}

}  // namespace

TEST_CASE("reference policy approves a conforming request after first payment") {
  BudgetLedger ledger;
  auto p = reference_policy();
  auto d0 = evaluate(good_request(), {p}, ledger, kNow);
  CHECK(d0.verdict == Verdict::review_required);
  REQUIRE(d0.evaluations.size() == 1);
  CHECK(d0.evaluations[0].failed_checks == std::vector<Check>{Check::first_payment});

  ledger.mark_first_payment("agent-1", "p1");
  auto d1 = evaluate(good_request(), {p}, ledger, kNow);
  CHECK(d1.verdict == Verdict::approved);
  CHECK(d1.matched_policy_id == "p1");
  CHECK(d1.evaluations[0].failed_checks.empty());
}

TEST_CASE("amount over per-tx cap") {
  BudgetLedger ledger;
  ledger.mark_first_payment("agent-1", "p1");
  auto d = evaluate(good_request(150 * U), {reference_policy()}, ledger, kNow);
  CHECK(d.verdict == Verdict::review_required);
  CHECK(d.failed(Check::amount));
  CHECK(d.first_failed_check() == Check::amount);
}

TEST_CASE("all failing checks are recorded") {
  BudgetLedger ledger;
  ActionRequest r{"r", "agent-1", 995 * U, "mallory", "solana", "approve",
                  kNow - 9 * kHour /* 01:00 */, 1000 * U};
  auto d = evaluate(r, {reference_policy()}, ledger, kNow);
  CHECK(d.evaluations[0].failed_checks.size() == 8);
}

TEST_CASE("vacuous policy approves anything") {
  Policy p;
  p.id = "open";
  p.agent_id = "agent-1";
  p.expires_at = kNow + 1;
  BudgetLedger ledger;
  ActionRequest r{"r", "agent-1", 1'000'000'000 * U, "x", "y", "z", kNow, 0};
  CHECK(evaluate(r, {p}, ledger, kNow).verdict == Verdict::approved);
}

TEST_CASE("OR semantics picks the first passing policy") {
  BudgetLedger ledger;
  auto a = reference_policy("agent-1", "pa");
  a.conditions.allow_list_addresses = {"someone-else"};
  a.conditions.require_review_first_pay = false;
  auto b = reference_policy("agent-1", "pb");
  b.conditions.require_review_first_pay = false;
  auto d = evaluate(good_request(), {a, b}, ledger, kNow);
  CHECK(d.verdict == Verdict::approved);
  CHECK(d.matched_policy_id == "pb");
  REQUIRE(d.evaluations.size() == 2);
  CHECK(d.evaluations[0].failed_checks == std::vector<Check>{Check::address});
}

TEST_CASE("inactive and foreign policies are skipped") {
  BudgetLedger ledger;
  auto p = reference_policy();
  p.conditions = {};
  p.created_at = kNow + 1;
  CHECK(evaluate(good_request(), {p}, ledger, kNow).evaluations.empty());
  p.created_at = 0;
  p.expires_at = kNow;  // half-open: expired exactly at now
  CHECK(evaluate(good_request(), {p}, ledger, kNow).verdict == Verdict::review_required);
  p.expires_at = kNow + 1;
  p.agent_id = "someone";
  CHECK(evaluate(good_request(), {p}, ledger, kNow).verdict == Verdict::review_required);
}

TEST_CASE("time windows") {
  auto day = TimeWindow::parse("09:00", "21:00");
  std::int64_t midnight = kNow - 10 * kHour;
  CHECK(is_within_time_window(midnight + 10 * kHour, day));
  CHECK(is_within_time_window(midnight + 21 * kHour, day));
  CHECK(is_within_time_window(midnight + 9 * kHour, day));
  CHECK_FALSE(is_within_time_window(midnight + 21 * kHour + 60'000, day));
  CHECK(is_within_time_window(midnight + 21 * kHour + 59'999, day));  // minute resolution
  auto night = TimeWindow::parse("22:00", "02:00");
  CHECK(is_within_time_window(midnight + 23 * kHour, night));
  CHECK(is_within_time_window(midnight + 1 * kHour, night));
  CHECK_FALSE(is_within_time_window(midnight + 12 * kHour, night));
  // 10:00Z is 12:00 at UTC+2, outside 09:00-11:00 local.
  CHECK_FALSE(is_within_time_window(kNow, TimeWindow::parse("09:00", "11:00"), 120));
  CHECK(is_within_time_window(kNow, TimeWindow::parse("11:00", "13:00"), 120));
  CHECK(code_of([] { TimeWindow::parse("24:00", "01:00"); }) == Errc::invalid_argument);
  CHECK(code_of([] { TimeWindow::parse("9:00", "10:00"); }) == Errc::invalid_argument);
}

TEST_CASE("rolling totals") {
  BudgetLedger ledger;
  CHECK(ledger.rolling_totals("a", kNow) == BudgetTotals{0, 0, 0});
  ledger.record_spend("a", 5, kNow - 25 * kHour);
  auto t = ledger.rolling_totals("a", kNow);
  CHECK(t.day == 0);
  CHECK(t.week == 5);
  ledger.record_spend("a", 7, kNow - kDay);  // exactly 24h ago: outside (now-24h, now]
  CHECK(ledger.rolling_totals("a", kNow).day == 0);
  ledger.record_spend("a", 11, kNow);
  CHECK(ledger.rolling_totals("a", kNow).day == 11);
  CHECK(code_of([&] { ledger.record_spend("a", -1, kNow); }) == Errc::invalid_argument);
}

TEST_CASE("calendar month resets against a gmtime oracle") {
  // 2026-01-31T23:00Z and 2026-02-01T01:00Z.
  const std::int64_t jan31 = 1769900400000;
  const std::int64_t feb1 = jan31 + 2 * kHour;
  CHECK(oracle_same_month(jan31, jan31 + 59 * 60'000));
  CHECK_FALSE(oracle_same_month(jan31, feb1));
  BudgetLedger ledger;
  ledger.record_spend("a", 100, jan31);
  auto t = ledger.rolling_totals("a", feb1);
  CHECK(t.day == 100);
  CHECK(t.month == 0);
  CHECK(ledger.rolling_totals("a", jan31 + 30 * 60'000).month == 100);

  crypto::SeededRandom rng(11);
  for (int i = 0; i < 20000; ++i) {
    std::int64_t a = crypto::uniform_int(rng, 0, 4102444800000);
    std::int64_t b = a + crypto::uniform_int(rng, 0, 40 * kDay);
    bool ours = policy::utc_month_start(a) == policy::utc_month_start(b);
    CHECK(ours == oracle_same_month(a, b));
  }
}

TEST_CASE("evaluate agrees with the naive oracle on 1e4 random cases") {
  crypto::SeededRandom rng(2026);
  using crypto::uniform_below;
  using crypto::uniform_int;
  const std::vector<std::string> addrs = {"a1", "a2", "a3", "a4"};
  const std::vector<std::string> chains = {"base", "ethereum", "solana"};
  const std::vector<std::string> methods = {"transfer", "approve", "swap"};
  auto pick_subset = [&](const std::vector<std::string>& pool) {
    std::vector<std::string> out;
    if (uniform_below(rng, 3) == 0) return out;
    for (const auto& v : pool) {
      if (uniform_below(rng, 2) == 1) out.push_back(v);
    }
    return out;
  };
  auto maybe_cap = [&](std::int64_t lo, std::int64_t hi) -> std::optional<std::int64_t> {
    if (uniform_below(rng, 3) == 0) return std::nullopt;
    return uniform_int(rng, lo, hi);
  };

  int approvals = 0;
  for (int i = 0; i < 10000; ++i) {
    Policy p;
    p.id = "p" + std::to_string(i);
    p.agent_id = "agent";
    p.created_at = 0;
    p.expires_at = INT64_MAX;
    auto& c = p.conditions;
    c.max_amount_per_tx = maybe_cap(0, 200);
    c.max_amount_per_day = maybe_cap(0, 600);
    c.max_amount_per_week = maybe_cap(0, 1500);
    c.max_amount_per_month = maybe_cap(0, 3000);
    c.allow_list_addresses = pick_subset(addrs);
    c.allow_list_chains = pick_subset(chains);
    c.allow_list_methods = pick_subset(methods);
    if (uniform_below(rng, 2) == 1) {
      c.time_window = TimeWindow{static_cast<int>(uniform_below(rng, 1440)),
                                 static_cast<int>(uniform_below(rng, 1440))};
    }
    c.min_balance_after = uniform_below(rng, 2) == 1 ? uniform_int(rng, 1, 300) : 0;
    c.require_review_first_pay = uniform_below(rng, 3) == 0;

    std::int64_t now = uniform_int(rng, 1700000000000, 1800000000000);
    ActionRequest r{"r", "agent", uniform_int(rng, 0, 250), addrs[uniform_below(rng, 4)],
                    chains[uniform_below(rng, 3)], methods[uniform_below(rng, 3)],
                    now - uniform_int(rng, 0, kDay), uniform_int(rng, 0, 600)};
    BudgetLedger ledger;
    std::vector<OracleSpend> history;
    auto n = uniform_below(rng, 6);
    for (std::uint64_t k = 0; k < n; ++k) {
      OracleSpend s{now - uniform_int(rng, -kHour, 40 * kDay), uniform_int(rng, 0, 300)};
      history.push_back(s);
      ledger.record_spend("agent", s.amount, s.ts);
    }
    bool prior = uniform_below(rng, 2) == 1;
    if (prior) ledger.mark_first_payment("agent", p.id);

    bool expected = oracle_policy_passes(r, p, history, prior, now);
    auto d = evaluate(r, {p}, ledger, now);
    CHECK((d.verdict == Verdict::approved) == expected);
    approvals += expected ? 1 : 0;
  }
  // Guard against a degenerate generator that never exercises approval.
  CHECK(approvals > 100);
}

TEST_CASE("relaxing a condition never revokes an approval") {
  BudgetLedger ledger;
  ledger.mark_first_payment("agent-1", "p1");
  auto p = reference_policy();
  REQUIRE(evaluate(good_request(), {p}, ledger, kNow).verdict == Verdict::approved);
  auto relaxed = p;
  relaxed.conditions.max_amount_per_tx = 1000 * U;
  relaxed.conditions.allow_list_chains.push_back("solana");
  relaxed.conditions.time_window = TimeWindow::parse("00:00", "23:59");
  CHECK(evaluate(good_request(), {relaxed}, ledger, kNow).verdict == Verdict::approved);
  // Permutation keeps the verdict.
  auto other = reference_policy("agent-1", "p2");
  CHECK(evaluate(good_request(), {other, p}, ledger, kNow).verdict ==
        evaluate(good_request(), {p, other}, ledger, kNow).verdict);
}

TEST_CASE("check masks disable individual checks") {
  BudgetLedger ledger;
  auto d = evaluate(good_request(), {reference_policy()}, ledger, kNow,
                    {0, without(kAllChecks, Check::first_payment)});
  CHECK(d.verdict == Verdict::approved);
}

TEST_CASE("EVM allowlist entries compare case-insensitively") {
  BudgetLedger ledger;
  ledger.mark_first_payment("agent-1", "p1");
  auto r = good_request();
  r.to = "0xab5801a7d398351b8be11c439e05c5b3259aec9b";
  CHECK(evaluate(r, {reference_policy()}, ledger, kNow).verdict == Verdict::approved);
}

TEST_CASE("policy JSON round trip") {
  auto p = reference_policy();
  p.owner_xid = {1, 2, 3};
  CHECK(Policy::from_json(parse_json(canonical_json(p.to_json()))) == p);
  p.conditions.max_amount_per_day.reset();
  p.conditions.time_window.reset();
  CHECK(Policy::from_json(p.to_json()) == p);
}

TEST_CASE("classify_change: each table row in isolation") {
  auto base = reference_policy();
  struct Row {
    ChangeType type;
    ApprovalLevel level;
    std::function<void(Policy&)> mutate;
  };
  std::vector<Row> rows = {
      {ChangeType::budget_increase, ApprovalLevel::biometric,
       [](Policy& p) { p.conditions.max_amount_per_tx = 200 * U; }},
      {ChangeType::scope_escalation, ApprovalLevel::biometric,
       [](Policy& p) { p.scope = Scope::negotiation; }},
      {ChangeType::addr_remove_all, ApprovalLevel::biometric,
       [](Policy& p) { p.conditions.allow_list_addresses.clear(); }},
      {ChangeType::addr_add, ApprovalLevel::review,
       [](Policy& p) { p.conditions.allow_list_addresses.push_back("vendor-c"); }},
      {ChangeType::time_window_remove, ApprovalLevel::review,
       [](Policy& p) { p.conditions.time_window.reset(); }},
      {ChangeType::min_balance_lower, ApprovalLevel::review,
       [](Policy& p) { p.conditions.min_balance_after = 5 * U; }},
      {ChangeType::first_pay_disable, ApprovalLevel::review,
       [](Policy& p) { p.conditions.require_review_first_pay = false; }},
      {ChangeType::expiration_extend, ApprovalLevel::review,
       [](Policy& p) { p.expires_at += kDay; }},
  };
  for (const auto& row : rows) {
    auto changed = base;
    row.mutate(changed);
    auto report = classify_change(base, changed);
    CAPTURE(to_string(row.type));
    REQUIRE(report.changes.size() == 1);
    CHECK(report.changes[0].type == row.type);
    CHECK(report.required_approval == row.level);
  }
}

TEST_CASE("classify_change: combinations and edge cases") {
  auto base = reference_policy();
  CHECK(classify_change(base, base).changes.empty());
  CHECK(classify_change(base, base).required_approval == ApprovalLevel::none);

  auto two = base;
  two.conditions.allow_list_addresses.push_back("vendor-c");
  two.expires_at += kDay;
  auto r2 = classify_change(base, two);
  CHECK(r2.changes.size() == 2);
  CHECK(r2.required_approval == ApprovalLevel::review);

  auto esc = base;
  esc.scope = Scope::full;
  esc.conditions.allow_list_addresses.push_back("vendor-c");
  CHECK(classify_change(base, esc).required_approval == ApprovalLevel::biometric);

  auto removed_cap = base;
  removed_cap.conditions.max_amount_per_week.reset();
  CHECK(classify_change(base, removed_cap).has(ChangeType::budget_increase));

  Policy no_cap = base;
  no_cap.conditions.max_amount_per_month.reset();
  CHECK_FALSE(classify_change(no_cap, base).has(ChangeType::budget_increase));  // tightening

  auto lowered = base;
  lowered.conditions.max_amount_per_tx = 50 * U;
  lowered.scope = Scope::auto_payment;
  CHECK(classify_change(base, lowered).changes.empty());

  auto other = base;
  other.id = "p9";
  CHECK(code_of([&] { classify_change(base, other); }) == Errc::id_mismatch);
}
