#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/constants.hpp"
#include "aesp/crypto/canonical_json.hpp"

namespace aesp::eval {

enum class LinkConfig { none, jitter_only, full };
std::string_view to_string(LinkConfig c) noexcept;
LinkConfig link_config_from_string(std::string_view s);

/// Toy UTXO-style ledger. Funding outputs pay an ephemeral address;
/// consolidations spend ephemeral addresses into the agent vault.
struct LedgerTx {
  enum class Kind { funding, consolidation };
  Kind kind = Kind::funding;
  std::int64_t timestamp = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

struct LinkabilityOptions {
  std::uint64_t seed = 1;
  std::size_t n_tx = 1000;
  std::size_t n_agents = 5;
  std::int64_t horizon_ms = 24LL * 60 * 60 * 1000;  // funding spread
  std::int64_t epsilon_ms = 5LL * 60 * 1000;
  std::int64_t start_ms = 1767571200000;
};

struct ClusterStats {
  std::int64_t epsilon_ms = 0;
  std::size_t true_pairs = 0;
  std::size_t linked_true_pairs = 0;
  std::size_t linked_pairs = 0;
  std::size_t clusters = 0;

  double linkage_rate() const;  // linked true pairs / true pairs
  double precision() const;     // linked true pairs / linked pairs (1 if none)
  Json to_json() const;
};

struct LinkabilityResult {
  LinkConfig config = LinkConfig::none;
  std::size_t addresses = 0;
  std::size_t consolidation_txs = 0;
  bool unique_addresses = false;
  ClusterStats at_epsilon;
  ClusterStats common_input_only;  // epsilon disabled
  std::vector<ClusterStats> sweep;

  Json to_json() const;
};

struct LinkabilityReport {
  LinkabilityOptions options;
  std::vector<LinkabilityResult> results;

  const LinkabilityResult& get(LinkConfig c) const;
  Json to_json() const;
  std::string to_markdown() const;
};

/// The adversary: union-find over consolidation inputs (common-input
/// ownership) plus single-linkage on consolidation times (gap <= epsilon;
/// negative epsilon disables it). Scored against address -> principal.
ClusterStats cluster_and_score(const std::vector<LedgerTx>& ledger,
                               const std::vector<std::pair<std::string, std::size_t>>& truth,
                               std::int64_t epsilon_ms);

/// Simulates one configuration. Funding times, amounts of agents and all
/// scheduling draws come from the seed; addresses are isolated-level
/// derivations from one identity root per principal.
LinkabilityResult simulate_linkability(LinkConfig config, const LinkabilityOptions& options,
                                       std::vector<LedgerTx>* ledger_out = nullptr);

/// All three configurations plus an epsilon sweep over 1, 5, 10, 30 min.
LinkabilityReport run_linkability(const LinkabilityOptions& options = {});

}  // namespace aesp::eval
