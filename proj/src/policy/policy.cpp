#include "aesp/policy/policy.hpp"

#include <cstdio>

#include "aesp/constants.hpp"
#include "aesp/error.hpp"

namespace aesp::policy {

namespace {

int parse_hhmm(std::string_view text) {
  if (text.size() != 5 || text[2] != ':') {
    throw Error(Errc::invalid_argument, "time must be HH:MM: " + std::string(text));
  }
  auto digit = [&](std::size_t i) {
    char c = text[i];
    if (c < '0' || c > '9') throw Error(Errc::invalid_argument, "time must be HH:MM");
    return c - '0';
  };
  int hh = digit(0) * 10 + digit(1);
  int mm = digit(3) * 10 + digit(4);
  if (hh > 23 || mm > 59) throw Error(Errc::invalid_argument, "time out of range");
  return hh * 60 + mm;
}

std::string format_hhmm(int minute) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute / 60, minute % 60);
  return buf;
}

Json optional_amount(const std::optional<std::int64_t>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<std::int64_t> read_amount(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  auto v = it->get<std::int64_t>();
  if (v < 0) throw Error(Errc::invalid_argument, std::string(key) + " must be non-negative");
  return v;
}

std::vector<std::string> read_list(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->get<std::vector<std::string>>();
}

template <typename F>
auto guarded(const char* what, F&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

int rank(Scope scope) noexcept {
  switch (scope) {
    case Scope::auto_payment: return constants::kRankAutoPayment;
    case Scope::negotiation: return constants::kRankNegotiation;
    case Scope::commitment: return constants::kRankCommitment;
    case Scope::full: return constants::kRankFull;
  }
  return 0;
}

std::string_view to_string(Scope scope) noexcept {
  switch (scope) {
    case Scope::auto_payment: return "auto_payment";
    case Scope::negotiation: return "negotiation";
    case Scope::commitment: return "commitment";
    case Scope::full: return "full";
  }
  return "unknown";
}

Scope scope_from_string(std::string_view name) {
  if (name == "auto_payment") return Scope::auto_payment;
  if (name == "negotiation") return Scope::negotiation;
  if (name == "commitment") return Scope::commitment;
  if (name == "full") return Scope::full;
  throw Error(Errc::invalid_argument, "unknown scope: " + std::string(name));
}

TimeWindow TimeWindow::parse(std::string_view start, std::string_view end) {
  return TimeWindow{parse_hhmm(start), parse_hhmm(end)};
}

std::string TimeWindow::start_text() const { return format_hhmm(start_minute); }
std::string TimeWindow::end_text() const { return format_hhmm(end_minute); }

std::string_view to_string(Check check) noexcept {
  switch (check) {
    case Check::amount: return "amount";
    case Check::time_window: return "time_window";
    case Check::address: return "address";
    case Check::chain: return "chain";
    case Check::method: return "method";
    case Check::first_payment: return "first_payment";
    case Check::min_balance: return "min_balance";
    case Check::budget: return "budget";
  }
  return "unknown";
}

Json Policy::to_json() const {
  const auto& c = conditions;
  Json cond{{"max_amount_per_tx", optional_amount(c.max_amount_per_tx)},
            {"max_amount_per_day", optional_amount(c.max_amount_per_day)},
            {"max_amount_per_week", optional_amount(c.max_amount_per_week)},
            {"max_amount_per_month", optional_amount(c.max_amount_per_month)},
            {"allow_list_addresses", c.allow_list_addresses},
            {"allow_list_chains", c.allow_list_chains},
            {"allow_list_methods", c.allow_list_methods},
            {"time_window", c.time_window ? Json{{"start", c.time_window->start_text()},
                                                 {"end", c.time_window->end_text()}}
                                          : Json(nullptr)},
            {"min_balance_after", c.min_balance_after},
            {"require_review_first_pay", c.require_review_first_pay}};
  return Json{{"id", id},
              {"agent_id", agent_id},
              {"owner_xid", crypto::to_hex(owner_xid)},
              {"scope", to_string(scope)},
              {"conditions", cond},
              {"created_at", created_at},
              {"expires_at", expires_at}};
}

Policy Policy::from_json(const Json& j) {
  return guarded("policy", [&] {
    Policy p;
    p.id = j.at("id").get<std::string>();
    p.agent_id = j.at("agent_id").get<std::string>();
    p.owner_xid = crypto::from_hex(j.value("owner_xid", std::string()));
    p.scope = scope_from_string(j.at("scope").get<std::string>());
    p.created_at = j.at("created_at").get<std::int64_t>();
    p.expires_at = j.at("expires_at").get<std::int64_t>();
    const Json& c = j.at("conditions");
    auto& k = p.conditions;
    k.max_amount_per_tx = read_amount(c, "max_amount_per_tx");
    k.max_amount_per_day = read_amount(c, "max_amount_per_day");
    k.max_amount_per_week = read_amount(c, "max_amount_per_week");
    k.max_amount_per_month = read_amount(c, "max_amount_per_month");
    k.allow_list_addresses = read_list(c, "allow_list_addresses");
    k.allow_list_chains = read_list(c, "allow_list_chains");
    k.allow_list_methods = read_list(c, "allow_list_methods");
    if (auto tw = c.find("time_window"); tw != c.end() && !tw->is_null()) {
      k.time_window = TimeWindow::parse(tw->at("start").get<std::string>(),
                                        tw->at("end").get<std::string>());
    }
    k.min_balance_after = c.value("min_balance_after", std::int64_t{0});
    if (k.min_balance_after < 0) {
      throw Error(Errc::invalid_argument, "min_balance_after must be non-negative");
    }
    k.require_review_first_pay = c.value("require_review_first_pay", false);
    return p;
  });
}

Json ActionRequest::to_json() const {
  return Json{{"id", id},         {"agent_id", agent_id},   {"amount", amount},
              {"to", to},         {"chain", chain},         {"method", method},
              {"timestamp", timestamp}, {"current_balance", current_balance}};
}

ActionRequest ActionRequest::from_json(const Json& j) {
  return guarded("action request", [&] {
    ActionRequest r;
    r.id = j.value("id", std::string());
    r.agent_id = j.at("agent_id").get<std::string>();
    r.amount = j.at("amount").get<std::int64_t>();
    r.to = j.value("to", std::string());
    r.chain = j.value("chain", std::string());
    r.method = j.value("method", std::string());
    r.timestamp = j.at("timestamp").get<std::int64_t>();
    r.current_balance = j.value("current_balance", std::int64_t{0});
    if (r.amount < 0 || r.current_balance < 0) {
      throw Error(Errc::invalid_argument, "amount and balance must be non-negative");
    }
    return r;
  });
}

}  // namespace aesp::policy
