#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/eval/corpus.hpp"
#include "aesp/policy/engine.hpp"

namespace aesp::eval {

enum class GateId { B0, B1, B2, B3, FULL };
std::string_view to_string(GateId g) noexcept;
GateId gate_from_string(std::string_view s);

enum class HumanPolicy { approve_all, reject_all, optimal };
std::string_view to_string(HumanPolicy h) noexcept;
HumanPolicy human_from_string(std::string_view s);

struct GateConfig {
  GateId id = GateId::FULL;
  policy::CheckMask enabled_checks = policy::kAllChecks;
  bool escalation_enabled = false;
  /// Checks whose failures go to review instead of being dropped. A request
  /// escalates only if every failing check is in this set. Empty for FULL:
  /// every check failure auto-blocks there.
  policy::CheckMask escalate_checks = 0;
  /// With escalation on, a request that passes every check but would bring a
  /// rolling budget total to at least this fraction of its limit goes to
  /// review. 0 disables the rule.
  double proximity_threshold = 0.0;

  static GateConfig standard(GateId id);
  Json to_json() const;
};

enum class Outcome { auto_approved, auto_blocked, escalated_approved, escalated_rejected };
std::string_view to_string(Outcome o) noexcept;

struct OutcomeCounts {
  std::size_t total = 0;
  std::size_t auto_approved = 0;
  std::size_t auto_blocked = 0;
  std::size_t escalated_approved = 0;
  std::size_t escalated_rejected = 0;

  std::size_t escalated() const noexcept { return escalated_approved + escalated_rejected; }
  void add(Outcome o);
  Json to_json() const;
};

struct SecurityReport {
  GateConfig config;
  HumanPolicy human = HumanPolicy::optimal;
  std::uint64_t corpus_seed = 0;

  OutcomeCounts attacks;
  OutcomeCounts legitimate;
  std::map<policy::Check, OutcomeCounts> per_stratum;
  OutcomeCounts aggregate;
  /// First failing check of every auto-blocked request, attacks and
  /// legitimate alike.
  std::map<policy::Check, std::size_t> per_check_attribution;
  std::vector<Outcome> outcomes;  // parallel to corpus.requests

  double auto_blocked_rate() const;     // attacks auto-blocked / attacks
  double escalation_load_rate() const;  // attacks escalated / attacks
  double passed_rate() const;           // attacks auto-approved / attacks
  double false_positive_rate() const;   // legitimate not auto-approved / legitimate
  /// Attacks that never executed once the simulated human has answered.
  double effective_block_rate() const;
  /// Escalations of any label per request.
  double review_load_rate() const;

  Json to_json() const;
  std::string to_markdown() const;
};

/// Replays the corpus in order against a ledger seeded from the corpus
/// setup. Approved spends (automatic or by review) are recorded and mark the
/// agent's first payment.
SecurityReport run_gate(const GateConfig& config, const Corpus& corpus,
                        HumanPolicy human = HumanPolicy::optimal);

struct AblationRow {
  policy::Check removed = policy::Check::amount;
  double rate = 0.0;
  double delta = 0.0;
  std::map<policy::Check, std::ptrdiff_t> stratum_delta;  // blocked(B3) - blocked(ablated)
  std::ptrdiff_t aggregate_delta = 0;
};

struct AblationReport {
  double full_rate = 0.0;
  std::vector<AblationRow> rows;

  double delta_sum() const;
  Json to_json() const;
  std::string to_markdown() const;
};

/// B3 with one check removed at a time.
AblationReport run_ablation(const Corpus& corpus);

}  // namespace aesp::eval
