#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/crypto/canonical_json.hpp"
#include "aesp/policy/budget_ledger.hpp"
#include "aesp/policy/policy.hpp"

namespace aesp::eval {

enum class Label { attack_single, attack_aggregate, legitimate };
std::string_view to_string(Label l) noexcept;
Label label_from_string(std::string_view s);

struct CorpusRequest {
  policy::ActionRequest request;
  Label label = Label::legitimate;
  std::optional<policy::Check> stratum;  // attack_single only

  bool is_attack() const noexcept { return label != Label::legitimate; }
};

/// Ledger state an agent starts the replay with.
struct AgentSetup {
  std::string agent_id;
  bool prior_payment = false;
  std::vector<policy::SpendRecord> history;
};

struct Corpus {
  std::uint64_t seed = 0;
  policy::Policy reference;  // agent_id empty; instantiated per agent
  std::vector<AgentSetup> agents;
  std::vector<CorpusRequest> requests;  // replay order (timestamp, then id)

  /// The reference policy bound to one agent. Every agent gets its own copy
  /// so that budgets and first-payment markers never leak between them.
  policy::Policy policy_for(const std::string& agent_id) const;
  /// Fresh ledger holding every agent's seeded history and markers.
  policy::BudgetLedger seeded_ledger() const;

  std::size_t count(Label l) const;

  Json to_json() const;
  static Corpus from_json(const Json& j);
};

struct CorpusShape {
  std::size_t single_attacks = 950;
  std::size_t bursts = 10;
  std::size_t burst_length = 5;
  std::size_t legit_agents = 5;
  std::size_t legit_per_agent = 100;
  std::int64_t start_ms = 1767571200000;  // 2026-01-05T00:00Z
  int days = 20;
};

/// 100/500/2000/5000 units, 09:00-21:00 UTC, min balance 10, first payment
/// reviewed, 10 addresses, 3 chains, 4 methods.
policy::Policy reference_policy();

/// Deterministic in (seed, reference, shape). Attack strata are split as
/// evenly as possible; which strata get the smaller share is seeded.
Corpus generate_corpus(std::uint64_t seed, const policy::Policy& reference = reference_policy(),
                       const CorpusShape& shape = {});

/// Stratum sizes for `total` single attacks over 8 checks.
std::map<policy::Check, std::size_t> stratum_sizes(std::uint64_t seed, std::size_t total);

}  // namespace aesp::eval
