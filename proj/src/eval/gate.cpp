#include "aesp/eval/gate.hpp"

#include <cstdio>
#include <unordered_map>

#include "aesp/error.hpp"

namespace aesp::eval {

namespace {

using policy::Check;

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
  return buf;
}

policy::CheckMask mask_of(std::initializer_list<Check> checks) {
  policy::CheckMask m = 0;
  for (auto c : checks) m |= 1u << (static_cast<int>(c) - 1);
  return m;
}

bool near_limit(const policy::PolicyConditions& c, const policy::BudgetTotals& t, std::int64_t amount,
                double threshold) {
  auto close = [&](const std::optional<std::int64_t>& lim, std::int64_t total) {
    return lim && *lim > 0 &&
           static_cast<double>(total + amount) >= threshold * static_cast<double>(*lim);
  };
  return close(c.max_amount_per_day, t.day) || close(c.max_amount_per_week, t.week) ||
         close(c.max_amount_per_month, t.month);
}

Json counts_by_check(const std::map<Check, std::size_t>& m) {
  Json j = Json::object();
  for (const auto& [c, n] : m) j[std::string(policy::to_string(c))] = n;
  return j;
}

}  // namespace

std::string_view to_string(GateId g) noexcept {
  switch (g) {
    case GateId::B0: return "B0";
    case GateId::B1: return "B1";
    case GateId::B2: return "B2";
    case GateId::B3: return "B3";
    case GateId::FULL: return "FULL";
  }
  return "?";
}

GateId gate_from_string(std::string_view s) {
  for (auto g : {GateId::B0, GateId::B1, GateId::B2, GateId::B3, GateId::FULL}) {
    if (s == to_string(g)) return g;
  }
  throw Error(Errc::invalid_argument, "unknown gate config " + std::string(s));
}

std::string_view to_string(HumanPolicy h) noexcept {
  switch (h) {
    case HumanPolicy::approve_all: return "approve_all";
    case HumanPolicy::reject_all: return "reject_all";
    case HumanPolicy::optimal: return "optimal";
  }
  return "?";
}

HumanPolicy human_from_string(std::string_view s) {
  for (auto h : {HumanPolicy::approve_all, HumanPolicy::reject_all, HumanPolicy::optimal}) {
    if (s == to_string(h)) return h;
  }
  throw Error(Errc::invalid_argument, "unknown human policy " + std::string(s));
}

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::auto_approved: return "auto_approved";
    case Outcome::auto_blocked: return "auto_blocked";
    case Outcome::escalated_approved: return "escalated_approved";
    case Outcome::escalated_rejected: return "escalated_rejected";
  }
  return "?";
}

GateConfig GateConfig::standard(GateId id) {
  GateConfig g;
  g.id = id;
  switch (id) {
    case GateId::B0: g.enabled_checks = 0; break;
    case GateId::B1: g.enabled_checks = mask_of({Check::amount}); break;
    case GateId::B2: g.enabled_checks = mask_of({Check::amount, Check::time_window}); break;
    case GateId::B3: g.enabled_checks = policy::kAllChecks; break;
    case GateId::FULL:
      g.enabled_checks = policy::kAllChecks;
      g.escalation_enabled = true;
      g.proximity_threshold = 0.8;
      break;
  }
  return g;
}

Json GateConfig::to_json() const {
  Json checks = Json::array();
  Json esc = Json::array();
  for (int i = 1; i <= policy::kCheckCount; ++i) {
    if (policy::enabled(enabled_checks, static_cast<Check>(i))) checks.push_back(i);
    if (policy::enabled(escalate_checks, static_cast<Check>(i))) esc.push_back(i);
  }
  return Json{{"id", to_string(id)},
              {"enabled_checks", checks},
              {"escalation_enabled", escalation_enabled},
              {"escalate_checks", esc},
              {"proximity_threshold", proximity_threshold}};
}

void OutcomeCounts::add(Outcome o) {
  ++total;
  switch (o) {
    case Outcome::auto_approved: ++auto_approved; break;
    case Outcome::auto_blocked: ++auto_blocked; break;
    case Outcome::escalated_approved: ++escalated_approved; break;
    case Outcome::escalated_rejected: ++escalated_rejected; break;
  }
}

Json OutcomeCounts::to_json() const {
  return Json{{"total", total},
              {"auto_approved", auto_approved},
              {"auto_blocked", auto_blocked},
              {"escalated_approved", escalated_approved},
              {"escalated_rejected", escalated_rejected}};
}

double SecurityReport::auto_blocked_rate() const { return ratio(attacks.auto_blocked, attacks.total); }
double SecurityReport::escalation_load_rate() const { return ratio(attacks.escalated(), attacks.total); }
double SecurityReport::passed_rate() const { return ratio(attacks.auto_approved, attacks.total); }
double SecurityReport::false_positive_rate() const {
  return ratio(legitimate.total - legitimate.auto_approved, legitimate.total);
}
double SecurityReport::effective_block_rate() const {
  return ratio(attacks.auto_blocked + attacks.escalated_rejected, attacks.total);
}
double SecurityReport::review_load_rate() const {
  return ratio(attacks.escalated() + legitimate.escalated(), attacks.total + legitimate.total);
}

Json SecurityReport::to_json() const {
  Json strata = Json::object();
  for (const auto& [c, n] : per_stratum) strata[std::to_string(static_cast<int>(c))] = n.to_json();
  return Json{{"config", config.to_json()},
              {"human", to_string(human)},
              {"corpus_seed", corpus_seed},
              {"attacks", attacks.to_json()},
              {"legitimate", legitimate.to_json()},
              {"per_stratum", strata},
              {"aggregate", aggregate.to_json()},
              {"per_check_attribution", counts_by_check(per_check_attribution)},
              {"rates",
               {{"auto_blocked", auto_blocked_rate()},
                {"escalation_load", escalation_load_rate()},
                {"passed", passed_rate()},
                {"false_positive", false_positive_rate()},
                {"effective_block", effective_block_rate()},
                {"review_load", review_load_rate()}}}};
}

std::string SecurityReport::to_markdown() const {
  std::string out = "### Gate " + std::string(to_string(config.id)) + " (human: " +
                    std::string(to_string(human)) + ")\n\n";
  out += "| metric | value |\n|---|---|\n";
  out += "| attacks auto-blocked | " + std::to_string(attacks.auto_blocked) + "/" +
         std::to_string(attacks.total) + " (" + pct(auto_blocked_rate()) + ") |\n";
  out += "| attacks escalated | " + std::to_string(attacks.escalated()) + " (" +
         pct(escalation_load_rate()) + ") |\n";
  out += "| attacks passed | " + std::to_string(attacks.auto_approved) + " (" + pct(passed_rate()) +
         ") |\n";
  out += "| attacks stopped after review | " + pct(effective_block_rate()) + " |\n";
  out += "| false positive rate | " + pct(false_positive_rate()) + " |\n\n";
  out += "| stratum | total | auto-blocked | escalated | passed |\n|---|---|---|---|---|\n";
  auto row = [&](const std::string& name, const OutcomeCounts& n) {
    out += "| " + name + " | " + std::to_string(n.total) + " | " + std::to_string(n.auto_blocked) +
           " | " + std::to_string(n.escalated()) + " | " + std::to_string(n.auto_approved) + " |\n";
  };
  for (const auto& [c, n] : per_stratum) {
    row(std::to_string(static_cast<int>(c)) + " " + std::string(policy::to_string(c)), n);
  }
  row("aggregate", aggregate);
  row("legitimate", legitimate);
  out += "\n| first failing check | blocked |\n|---|---|\n";
  for (const auto& [c, n] : per_check_attribution) {
    out += "| " + std::string(policy::to_string(c)) + " | " + std::to_string(n) + " |\n";
  }
  return out;
}

SecurityReport run_gate(const GateConfig& config, const Corpus& corpus, HumanPolicy human) {
  SecurityReport report;
  report.config = config;
  report.human = human;
  report.corpus_seed = corpus.seed;

  auto ledger = corpus.seeded_ledger();
  std::unordered_map<std::string, std::vector<policy::Policy>> policies;
  for (const auto& a : corpus.agents) policies[a.agent_id] = {corpus.policy_for(a.agent_id)};

  policy::EvaluateOptions opts;
  opts.checks = config.enabled_checks;
  report.outcomes.reserve(corpus.requests.size());

  for (const auto& item : corpus.requests) {
    const auto& r = item.request;
    auto it = policies.find(r.agent_id);
    if (it == policies.end()) {
      it = policies.emplace(r.agent_id, std::vector{corpus.policy_for(r.agent_id)}).first;
    }
    const auto& pol = it->second.front();
    auto decision = policy::evaluate(r, it->second, ledger, r.timestamp, opts);

    bool escalate = false;
    bool blocked = false;
    if (decision.verdict == policy::Verdict::approved) {
      escalate = config.escalation_enabled && config.proximity_threshold > 0.0 &&
                 policy::enabled(config.enabled_checks, Check::budget) &&
                 near_limit(pol.conditions, ledger.rolling_totals(r.agent_id, r.timestamp), r.amount,
                            config.proximity_threshold);
    } else {
      bool reviewable = config.escalation_enabled && !decision.evaluations.empty();
      if (reviewable) {
        for (auto c : decision.evaluations.front().failed_checks) {
          if (!policy::enabled(config.escalate_checks, c)) reviewable = false;
        }
      }
      escalate = reviewable;
      blocked = !reviewable;
    }

    Outcome outcome = Outcome::auto_approved;
    if (blocked) {
      outcome = Outcome::auto_blocked;
      if (auto first = decision.first_failed_check()) ++report.per_check_attribution[*first];
    } else if (escalate) {
      bool approve = human == HumanPolicy::approve_all ||
                     (human == HumanPolicy::optimal && !item.is_attack());
      outcome = approve ? Outcome::escalated_approved : Outcome::escalated_rejected;
    }

    if (outcome == Outcome::auto_approved || outcome == Outcome::escalated_approved) {
      ledger.record_spend(r.agent_id, r.amount, r.timestamp);
      ledger.mark_first_payment(r.agent_id, pol.id);
    }

    report.outcomes.push_back(outcome);
    switch (item.label) {
      case Label::legitimate: report.legitimate.add(outcome); break;
      case Label::attack_aggregate:
        report.attacks.add(outcome);
        report.aggregate.add(outcome);
        break;
      case Label::attack_single:
        report.attacks.add(outcome);
        if (item.stratum) report.per_stratum[*item.stratum].add(outcome);
        break;
    }
  }
  return report;
}

double AblationReport::delta_sum() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.delta;
  return s;
}

Json AblationReport::to_json() const {
  Json rows_j = Json::array();
  for (const auto& r : rows) {
    Json strata = Json::object();
    for (const auto& [c, d] : r.stratum_delta) strata[std::to_string(static_cast<int>(c))] = d;
    rows_j.push_back({{"removed", static_cast<int>(r.removed)},
                      {"check", policy::to_string(r.removed)},
                      {"auto_blocked_rate", r.rate},
                      {"delta", r.delta},
                      {"stratum_delta", strata},
                      {"aggregate_delta", r.aggregate_delta}});
  }
  return Json{{"full_rate", full_rate}, {"rows", rows_j}, {"delta_sum", delta_sum()}};
}

std::string AblationReport::to_markdown() const {
  std::string out = "### Ablation (B3 minus one check), B3 auto-block " + pct(full_rate) + "\n\n";
  out += "| removed | auto-blocked | delta | own stratum delta | aggregate delta |\n|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    auto own = r.stratum_delta.count(r.removed) ? r.stratum_delta.at(r.removed) : 0;
    out += "| " + std::to_string(static_cast<int>(r.removed)) + " " +
           std::string(policy::to_string(r.removed)) + " | " + pct(r.rate) + " | " + pct(r.delta) +
           " | " + std::to_string(own) + " | " + std::to_string(r.aggregate_delta) + " |\n";
  }
  out += "\nsum of deltas: " + pct(delta_sum()) + "\n";
  return out;
}

AblationReport run_ablation(const Corpus& corpus) {
  AblationReport out;
  auto full = run_gate(GateConfig::standard(GateId::B3), corpus);
  out.full_rate = full.auto_blocked_rate();
  for (int i = 1; i <= policy::kCheckCount; ++i) {
    auto c = static_cast<Check>(i);
    auto cfg = GateConfig::standard(GateId::B3);
    cfg.enabled_checks = policy::without(cfg.enabled_checks, c);
    auto ablated = run_gate(cfg, corpus);
    AblationRow row;
    row.removed = c;
    row.rate = ablated.auto_blocked_rate();
    row.delta = out.full_rate - row.rate;
    for (const auto& [s, n] : full.per_stratum) {
      auto other = ablated.per_stratum.count(s) ? ablated.per_stratum.at(s).auto_blocked : 0;
      row.stratum_delta[s] = static_cast<std::ptrdiff_t>(n.auto_blocked) - static_cast<std::ptrdiff_t>(other);
    }
    row.aggregate_delta = static_cast<std::ptrdiff_t>(full.aggregate.auto_blocked) -
                          static_cast<std::ptrdiff_t>(ablated.aggregate.auto_blocked);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace aesp::eval
