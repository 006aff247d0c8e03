#include "aesp/policy/budget_ledger.hpp"

#include <chrono>
#include <mutex>

#include "aesp/error.hpp"

namespace aesp::policy {

namespace {
constexpr std::int64_t kDayMs = 86'400'000;
constexpr std::int64_t kWeekMs = 7 * kDayMs;
}  // namespace

std::int64_t utc_month_start(std::int64_t t_ms) {
  using namespace std::chrono;
  auto tp = sys_time<milliseconds>(milliseconds(t_ms));
  year_month_day ymd(floor<days>(tp));
  sys_days first = ymd.year() / ymd.month() / day(1);
  return duration_cast<milliseconds>(first.time_since_epoch()).count();
}

BudgetLedger::BudgetLedger(const BudgetLedger& other) {
  std::shared_lock lock(other.mu_);
  spends_ = other.spends_;
  first_payments_ = other.first_payments_;
}

BudgetLedger& BudgetLedger::operator=(const BudgetLedger& other) {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    spends_ = other.spends_;
    first_payments_ = other.first_payments_;
  }
  return *this;
}

void BudgetLedger::record_spend(const std::string& agent_id, std::int64_t amount,
                                std::int64_t timestamp) {
  if (amount < 0) throw Error(Errc::invalid_argument, "spend amount must be non-negative");
  std::unique_lock lock(mu_);
  spends_[agent_id].push_back({timestamp, amount});
}

BudgetTotals BudgetLedger::rolling_totals(const std::string& agent_id, std::int64_t now) const {
  std::shared_lock lock(mu_);
  BudgetTotals totals;
  auto it = spends_.find(agent_id);
  if (it == spends_.end()) return totals;
  const std::int64_t month_start = utc_month_start(now);
  for (const auto& r : it->second) {
    if (r.timestamp > now) continue;
    if (r.timestamp > now - kDayMs) totals.day += r.amount;
    if (r.timestamp > now - kWeekMs) totals.week += r.amount;
    if (r.timestamp >= month_start) totals.month += r.amount;
  }
  return totals;
}

void BudgetLedger::mark_first_payment(const std::string& agent_id, const std::string& policy_id) {
  std::unique_lock lock(mu_);
  first_payments_.emplace(agent_id, policy_id);
}

bool BudgetLedger::has_prior_payment(const std::string& agent_id,
                                     const std::string& policy_id) const {
  std::shared_lock lock(mu_);
  return first_payments_.count({agent_id, policy_id}) > 0;
}

std::vector<SpendRecord> BudgetLedger::records(const std::string& agent_id) const {
  std::shared_lock lock(mu_);
  auto it = spends_.find(agent_id);
  return it == spends_.end() ? std::vector<SpendRecord>{} : it->second;
}

Json BudgetLedger::to_json() const {
  std::shared_lock lock(mu_);
  Json spends = Json::object();
  for (const auto& [agent, recs] : spends_) {
    Json arr = Json::array();
    for (const auto& r : recs) arr.push_back({{"timestamp", r.timestamp}, {"amount", r.amount}});
    spends[agent] = arr;
  }
  Json firsts = Json::array();
  for (const auto& [agent, policy] : first_payments_) {
    firsts.push_back({{"agent_id", agent}, {"policy_id", policy}});
  }
  return Json{{"spends", spends}, {"first_payments", firsts}};
}

BudgetLedger BudgetLedger::from_json(const Json& j) {
  BudgetLedger ledger;
  try {
    for (const auto& [agent, recs] : j.at("spends").items()) {
      for (const auto& r : recs) {
        ledger.record_spend(agent, r.at("amount").get<std::int64_t>(),
                            r.at("timestamp").get<std::int64_t>());
      }
    }
    for (const auto& f : j.at("first_payments")) {
      ledger.mark_first_payment(f.at("agent_id").get<std::string>(),
                                f.at("policy_id").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed ledger: ") + e.what());
  }
  return ledger;
}

}  // namespace aesp::policy
