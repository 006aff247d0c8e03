#include "aesp/eval/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "aesp/constants.hpp"
#include "aesp/crypto/hash.hpp"
#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/random.hpp"
#include "aesp/error.hpp"
#include "aesp/policy/engine.hpp"

namespace aesp::eval {

namespace {

using policy::Check;
constexpr std::int64_t U = constants::kMicrosPerUnit;
constexpr std::int64_t kMinute = 60'000;
constexpr std::int64_t kHour = 60 * kMinute;
constexpr std::int64_t kDay = 24 * kHour;

std::string padded(std::size_t v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

std::string random_address(crypto::RandomSource& rng) {
  std::array<std::uint8_t, 20> raw{};
  rng.fill(raw);
  return crypto::to_checksum_address(raw);
}

template <typename T>
const T& pick(crypto::RandomSource& rng, const std::vector<T>& items) {
  return items[crypto::uniform_below(rng, items.size())];
}

// ms timestamp on day `d` at a minute inside 09:00..20:59
std::int64_t in_window(crypto::RandomSource& rng, std::int64_t start, int days, int last_minute = 1259) {
  auto d = crypto::uniform_int(rng, 0, days - 1);
  auto minute = crypto::uniform_int(rng, 9 * 60, last_minute);
  return start + d * kDay + minute * kMinute + crypto::uniform_int(rng, 0, kMinute - 1);
}

std::int64_t out_of_window(crypto::RandomSource& rng, std::int64_t start, int days) {
  auto d = crypto::uniform_int(rng, 0, days - 1);
  // 21:01..23:59 and 00:00..08:59; 21:00 itself is inside (inclusive end)
  auto k = crypto::uniform_int(rng, 0, 179 + 540 - 1);
  auto minute = k < 179 ? 21 * 60 + 1 + k : k - 179;
  return start + d * kDay + minute * kMinute + crypto::uniform_int(rng, 0, kMinute - 1);
}

std::int64_t lognormal_amount(crypto::RandomSource& rng) {
  double units = std::exp(std::log(5.0) + crypto::standard_normal(rng));
  auto micros = static_cast<std::int64_t>(std::llround(units * static_cast<double>(U)));
  return std::clamp<std::int64_t>(micros, U / 100, 100 * U);
}

bool fits_budget(const policy::PolicyConditions& c, const policy::BudgetTotals& t, std::int64_t amount) {
  auto ok = [&](const std::optional<std::int64_t>& lim, std::int64_t total) {
    return !lim || total + amount <= *lim;
  };
  return ok(c.max_amount_per_day, t.day) && ok(c.max_amount_per_week, t.week) &&
         ok(c.max_amount_per_month, t.month);
}

std::vector<std::string> outside(const std::vector<std::string>& pool,
                                 const std::vector<std::string>& allowed) {
  std::vector<std::string> out;
  for (const auto& p : pool) {
    if (std::find(allowed.begin(), allowed.end(), p) == allowed.end()) out.push_back(p);
  }
  if (out.empty()) throw Error(Errc::invalid_argument, "no value outside the allowlist");
  return out;
}

const std::vector<std::string> kOtherChains = {"bsc", "avalanche", "fantom", "tron", "celo"};
const std::vector<std::string> kOtherMethods = {"approve_unlimited", "delegatecall", "set_owner",
                                                "bridge_out", "withdraw_all"};

}  // namespace

std::string_view to_string(Label l) noexcept {
  switch (l) {
    case Label::attack_single: return "attack_single";
    case Label::attack_aggregate: return "attack_aggregate";
    case Label::legitimate: return "legitimate";
  }
  return "?";
}

Label label_from_string(std::string_view s) {
  if (s == "attack_single") return Label::attack_single;
  if (s == "attack_aggregate") return Label::attack_aggregate;
  if (s == "legitimate") return Label::legitimate;
  throw Error(Errc::invalid_argument, "unknown label " + std::string(s));
}

policy::Policy reference_policy() {
  policy::Policy p;
  p.id = "reference";
  p.scope = policy::Scope::auto_payment;
  p.created_at = 0;
  p.expires_at = 4102444800000;  // 2100-01-01
  auto& c = p.conditions;
  c.max_amount_per_tx = 100 * U;
  c.max_amount_per_day = 500 * U;
  c.max_amount_per_week = 2000 * U;
  c.max_amount_per_month = 5000 * U;
  c.time_window = policy::TimeWindow::parse("09:00", "21:00");
  c.min_balance_after = 10 * U;
  c.require_review_first_pay = true;
  for (int i = 0; i < 10; ++i) {
    auto h = crypto::keccak256("merchant-" + std::to_string(i));
    c.allow_list_addresses.push_back(
        crypto::to_checksum_address(crypto::ByteView(h).subspan(12)));
  }
  c.allow_list_chains = {"ethereum", "base", "polygon"};
  c.allow_list_methods = {"transfer", "pay_invoice", "subscribe", "swap"};
  return p;
}

std::map<Check, std::size_t> stratum_sizes(std::uint64_t seed, std::size_t total) {
  crypto::SeededRandom rng(seed ^ 0x5354524154554dULL);
  std::vector<int> order = {1, 2, 3, 4, 5, 6, 7, 8};
  for (std::size_t i = order.size() - 1; i >= 1; --i) {
    std::swap(order[i], order[crypto::uniform_below(rng, i + 1)]);
  }
  std::map<Check, std::size_t> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out[static_cast<Check>(order[i])] = total / 8 + (i < total % 8 ? 1 : 0);
  }
  return out;
}

policy::Policy Corpus::policy_for(const std::string& agent_id) const {
  auto p = reference;
  p.id = reference.id + ":" + agent_id;
  p.agent_id = agent_id;
  return p;
}

policy::BudgetLedger Corpus::seeded_ledger() const {
  policy::BudgetLedger ledger;
  for (const auto& a : agents) {
    for (const auto& s : a.history) ledger.record_spend(a.agent_id, s.amount, s.timestamp);
    if (a.prior_payment) ledger.mark_first_payment(a.agent_id, policy_for(a.agent_id).id);
  }
  return ledger;
}

std::size_t Corpus::count(Label l) const {
  return static_cast<std::size_t>(std::count_if(requests.begin(), requests.end(),
                                                [&](const CorpusRequest& r) { return r.label == l; }));
}

Json Corpus::to_json() const {
  Json agents_j = Json::array();
  for (const auto& a : agents) {
    Json hist = Json::array();
    for (const auto& s : a.history) hist.push_back({{"timestamp", s.timestamp}, {"amount", s.amount}});
    agents_j.push_back({{"agent_id", a.agent_id}, {"prior_payment", a.prior_payment}, {"history", hist}});
  }
  Json reqs = Json::array();
  for (const auto& r : requests) {
    Json j{{"request", r.request.to_json()}, {"label", to_string(r.label)}};
    j["stratum"] = r.stratum ? Json(static_cast<int>(*r.stratum)) : Json(nullptr);
    reqs.push_back(std::move(j));
  }
  return Json{{"seed", seed}, {"reference", reference.to_json()}, {"agents", agents_j}, {"requests", reqs}};
}

Corpus Corpus::from_json(const Json& j) {
  try {
    Corpus c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.reference = policy::Policy::from_json(j.at("reference"));
    for (const auto& a : j.at("agents")) {
      AgentSetup s;
      s.agent_id = a.at("agent_id").get<std::string>();
      s.prior_payment = a.at("prior_payment").get<bool>();
      for (const auto& h : a.at("history")) {
        s.history.push_back({h.at("timestamp").get<std::int64_t>(), h.at("amount").get<std::int64_t>()});
      }
      c.agents.push_back(std::move(s));
    }
    for (const auto& r : j.at("requests")) {
      CorpusRequest cr;
      cr.request = policy::ActionRequest::from_json(r.at("request"));
      cr.label = label_from_string(r.at("label").get<std::string>());
      if (r.contains("stratum") && !r.at("stratum").is_null()) {
        int s = r.at("stratum").get<int>();
        if (s < 1 || s > policy::kCheckCount) throw Error(Errc::parse_error, "bad stratum");
        cr.stratum = static_cast<Check>(s);
      }
      c.requests.push_back(std::move(cr));
    }
    return c;
  } catch (const Json::exception& e) {
    throw Error(Errc::parse_error, std::string("corpus: ") + e.what());
  }
}

Corpus generate_corpus(std::uint64_t seed, const policy::Policy& reference, const CorpusShape& shape) {
  if (shape.days < 2) throw Error(Errc::invalid_argument, "corpus needs at least two days");
  crypto::SeededRandom rng(seed);
  Corpus corpus;
  corpus.seed = seed;
  corpus.reference = reference;
  corpus.reference.agent_id.clear();
  const auto& c = reference.conditions;
  if (c.allow_list_addresses.empty() || c.allow_list_chains.empty() || c.allow_list_methods.empty()) {
    throw Error(Errc::invalid_argument, "reference policy needs non-empty allowlists");
  }
  const std::int64_t per_tx = c.max_amount_per_tx.value_or(100 * U);
  const std::int64_t per_day = c.max_amount_per_day.value_or(500 * U);
  const std::int64_t floor_bal = c.min_balance_after;

  auto compliant = [&](const std::string& agent, const std::string& id, std::int64_t amount,
                       std::int64_t ts) {
    policy::ActionRequest r;
    r.id = id;
    r.agent_id = agent;
    r.amount = amount;
    r.to = pick(rng, c.allow_list_addresses);
    r.chain = pick(rng, c.allow_list_chains);
    r.method = pick(rng, c.allow_list_methods);
    r.timestamp = ts;
    r.current_balance = amount + floor_bal + crypto::uniform_int(rng, 0, 1000 * U);
    return r;
  };

  // legitimate: established agents, in-policy amounts, generated in time order
  // per agent so the budget headroom can be respected
  for (std::size_t a = 0; a < shape.legit_agents; ++a) {
    AgentSetup setup{"legit-" + std::to_string(a), true, {}};
    std::vector<std::int64_t> times;
    for (std::size_t k = 0; k < shape.legit_per_agent; ++k) {
      times.push_back(in_window(rng, shape.start_ms, shape.days));
    }
    std::sort(times.begin(), times.end());
    policy::BudgetLedger local;
    for (std::size_t k = 0; k < times.size(); ++k) {
      auto totals = local.rolling_totals(setup.agent_id, times[k]);
      std::int64_t amount = lognormal_amount(rng);
      for (int tries = 0; tries < 32 && !fits_budget(c, totals, amount); ++tries) {
        amount = lognormal_amount(rng);
      }
      if (!fits_budget(c, totals, amount)) amount = U / 100;
      local.record_spend(setup.agent_id, amount, times[k]);
      corpus.requests.push_back({compliant(setup.agent_id, setup.agent_id + ":" + padded(k, 3), amount, times[k]),
                                 Label::legitimate, std::nullopt});
    }
    corpus.agents.push_back(std::move(setup));
  }

  // single-condition attacks, one isolated agent each
  auto sizes = stratum_sizes(seed, shape.single_attacks);
  std::size_t n = 0;
  for (const auto& [stratum, size] : sizes) {
    for (std::size_t k = 0; k < size; ++k, ++n) {
      AgentSetup setup{"solo-" + padded(n, 4), stratum != Check::first_payment, {}};
      std::int64_t amount = std::min(lognormal_amount(rng), per_tx);
      std::int64_t ts = in_window(rng, shape.start_ms + kDay, shape.days - 1);
      if (stratum == Check::amount) amount = crypto::uniform_int(rng, per_tx + 1, 10 * per_tx);
      if (stratum == Check::time_window) ts = out_of_window(rng, shape.start_ms + kDay, shape.days - 1);
      if (stratum == Check::budget) amount = crypto::uniform_int(rng, per_tx / 5, per_tx);
      auto r = compliant(setup.agent_id, setup.agent_id + ":0", amount, ts);
      switch (stratum) {
        case Check::address: {
          std::string to;
          do {
            to = random_address(rng);
          } while (std::any_of(c.allow_list_addresses.begin(), c.allow_list_addresses.end(),
                               [&](const std::string& x) { return policy::same_address(x, to); }));
          r.to = to;
          break;
        }
        case Check::chain: r.chain = pick(rng, outside(kOtherChains, c.allow_list_chains)); break;
        case Check::method:
          r.method = pick(rng, outside(kOtherMethods, c.allow_list_methods));
          break;
        case Check::min_balance:
          r.current_balance = amount + crypto::uniform_int(rng, 0, std::max<std::int64_t>(floor_bal - 1, 0));
          break;
        case Check::budget: {
          // earlier spends in the same 24 h leave less than `amount` of headroom
          std::int64_t prior = per_day - amount + crypto::uniform_int(rng, 1, per_tx / 2);
          for (int i = 1; i <= 5; ++i) {
            std::int64_t part = prior / 5 + (i <= prior % 5 ? 1 : 0);
            setup.history.push_back({ts - i * 3 * kHour, part});
          }
          break;
        }
        default: break;
      }
      corpus.requests.push_back({r, Label::attack_single, stratum});
      corpus.agents.push_back(std::move(setup));
    }
  }

  // aggregate attacks: bursts of near-limit requests that each pass alone
  const std::int64_t burst_amount = per_tx - U;
  for (std::size_t b = 0; b < shape.bursts; ++b) {
    AgentSetup setup{"burst-" + padded(b, 2), true, {}};
    std::int64_t t0 = in_window(rng, shape.start_ms + kDay, shape.days - 1, 1250);
    std::int64_t prior = crypto::uniform_int(rng, 10 * U, 200 * U);
    setup.history.push_back({t0 - 2 * kHour, prior});
    for (std::size_t k = 0; k < shape.burst_length; ++k) {
      auto r = compliant(setup.agent_id, setup.agent_id + ":" + std::to_string(k), burst_amount,
                         t0 + static_cast<std::int64_t>(k) * 2000);
      r.current_balance = 10'000 * U;
      corpus.requests.push_back({r, Label::attack_aggregate, std::nullopt});
    }
    corpus.agents.push_back(std::move(setup));
  }

  std::sort(corpus.requests.begin(), corpus.requests.end(), [](const auto& x, const auto& y) {
    if (x.request.timestamp != y.request.timestamp) return x.request.timestamp < y.request.timestamp;
    return x.request.id < y.request.id;
  });
  std::sort(corpus.agents.begin(), corpus.agents.end(),
            [](const auto& x, const auto& y) { return x.agent_id < y.agent_id; });
  return corpus;
}

}  // namespace aesp::eval
