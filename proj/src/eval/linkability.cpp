#include "aesp/eval/linkability.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "aesp/crypto/random.hpp"
#include "aesp/error.hpp"
#include "aesp/privacy/addresses.hpp"
#include "aesp/privacy/consolidation.hpp"

namespace aesp::eval {

namespace {

constexpr std::int64_t kMinute = 60'000;
const std::int64_t kSweep[] = {1 * kMinute, 5 * kMinute, 10 * kMinute, 30 * kMinute};

std::size_t pairs(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

privacy::ConsolidationOptions options_for(LinkConfig c) {
  privacy::ConsolidationOptions o;
  switch (c) {
    case LinkConfig::none:
      o.shuffle = false;
      o.jitter = false;
      o.batched = false;
      break;
    case LinkConfig::jitter_only:
      o.shuffle = false;
      o.batched = false;
      break;
    case LinkConfig::full: break;
  }
  return o;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string_view to_string(LinkConfig c) noexcept {
  switch (c) {
    case LinkConfig::none: return "none";
    case LinkConfig::jitter_only: return "jitter_only";
    case LinkConfig::full: return "full";
  }
  return "?";
}

LinkConfig link_config_from_string(std::string_view s) {
  for (auto c : {LinkConfig::none, LinkConfig::jitter_only, LinkConfig::full}) {
    if (s == to_string(c)) return c;
  }
  throw Error(Errc::invalid_argument, "unknown privacy config " + std::string(s));
}

double ClusterStats::linkage_rate() const {
  return true_pairs == 0 ? 0.0 : static_cast<double>(linked_true_pairs) / static_cast<double>(true_pairs);
}

double ClusterStats::precision() const {
  return linked_pairs == 0 ? 1.0 : static_cast<double>(linked_true_pairs) / static_cast<double>(linked_pairs);
}

Json ClusterStats::to_json() const {
  return Json{{"epsilon_ms", epsilon_ms},
              {"true_pairs", true_pairs},
              {"linked_true_pairs", linked_true_pairs},
              {"linked_pairs", linked_pairs},
              {"clusters", clusters},
              {"linkage_rate", linkage_rate()},
              {"precision", precision()}};
}

Json LinkabilityResult::to_json() const {
  Json sw = Json::array();
  for (const auto& s : sweep) sw.push_back(s.to_json());
  return Json{{"config", to_string(config)},
              {"addresses", addresses},
              {"consolidation_txs", consolidation_txs},
              {"unique_addresses", unique_addresses},
              {"at_epsilon", at_epsilon.to_json()},
              {"common_input_only", common_input_only.to_json()},
              {"epsilon_sweep", sw}};
}

const LinkabilityResult& LinkabilityReport::get(LinkConfig c) const {
  for (const auto& r : results) {
    if (r.config == c) return r;
  }
  throw Error(Errc::invalid_argument, "config not in report");
}

Json LinkabilityReport::to_json() const {
  Json res = Json::array();
  for (const auto& r : results) res.push_back(r.to_json());
  return Json{{"seed", options.seed},
              {"n_tx", options.n_tx},
              {"n_agents", options.n_agents},
              {"horizon_ms", options.horizon_ms},
              {"epsilon_ms", options.epsilon_ms},
              {"results", res}};
}

std::string LinkabilityReport::to_markdown() const {
  std::string out = "### Linkability (" + std::to_string(options.n_tx) + " tx, " +
                    std::to_string(options.n_agents) + " agents, seed " + std::to_string(options.seed) +
                    ")\n\n| config | consolidation txs | linkage | precision | common-input only |";
  for (auto e : kSweep) out += " eps " + std::to_string(e / kMinute) + " min |";
  out += "\n|---|---|---|---|---|";
  for (std::size_t i = 0; i < std::size(kSweep); ++i) out += "---|";
  out += "\n";
  for (const auto& r : results) {
    out += "| " + std::string(to_string(r.config)) + " | " + std::to_string(r.consolidation_txs) + " | " +
           fmt(r.at_epsilon.linkage_rate()) + " | " + fmt(r.at_epsilon.precision()) + " | " +
           fmt(r.common_input_only.linkage_rate()) + " |";
    for (const auto& s : r.sweep) out += " " + fmt(s.linkage_rate()) + " |";
    out += "\n";
  }
  return out;
}

ClusterStats cluster_and_score(const std::vector<LedgerTx>& ledger,
                               const std::vector<std::pair<std::string, std::size_t>>& truth,
                               std::int64_t epsilon_ms) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < truth.size(); ++i) index.emplace(truth[i].first, i);
  UnionFind uf(truth.size());

  std::vector<std::pair<std::int64_t, std::size_t>> times;  // (time, representative input)
  for (const auto& tx : ledger) {
    if (tx.kind != LedgerTx::Kind::consolidation) continue;
    std::optional<std::size_t> first;
    for (const auto& in : tx.inputs) {
      auto it = index.find(in);
      if (it == index.end()) continue;
      if (first) uf.unite(*first, it->second);
      else first = it->second;
    }
    if (first) times.emplace_back(tx.timestamp, *first);
  }
  if (epsilon_ms >= 0) {
    std::sort(times.begin(), times.end());
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (times[i].first - times[i - 1].first <= epsilon_ms) uf.unite(times[i].second, times[i - 1].second);
    }
  }

  ClusterStats s;
  s.epsilon_ms = epsilon_ms;
  std::map<std::size_t, std::size_t> per_principal;
  std::map<std::size_t, std::map<std::size_t, std::size_t>> per_cluster;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++per_principal[truth[i].second];
    ++per_cluster[uf.find(i)][truth[i].second];
  }
  for (const auto& [p, n] : per_principal) s.true_pairs += pairs(n);
  s.clusters = per_cluster.size();
  for (const auto& [root, members] : per_cluster) {
    std::size_t size = 0;
    for (const auto& [p, n] : members) {
      size += n;
      s.linked_true_pairs += pairs(n);
    }
    s.linked_pairs += pairs(size);
  }
  return s;
}

LinkabilityResult simulate_linkability(LinkConfig config, const LinkabilityOptions& options,
                                       std::vector<LedgerTx>* ledger_out) {
  if (options.n_agents == 0 || options.n_tx == 0 || options.horizon_ms <= 0) {
    throw Error(Errc::invalid_argument, "linkability needs agents, transactions and a positive horizon");
  }
  // funding draws are shared by every config so the comparison is paired
  crypto::SeededRandom fund_rng(options.seed);
  crypto::SeededRandom plan_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<crypto::IdentityRoot> roots;
  std::vector<std::string> agent_ids;
  for (std::size_t a = 0; a < options.n_agents; ++a) {
    crypto::Bytes payload(32);
    fund_rng.fill(payload);
    roots.push_back(crypto::derive_identity_root({payload, "principal-" + std::to_string(a)}));
    agent_ids.push_back("agent-" + std::to_string(a));
  }

  struct Funding {
    std::int64_t t;
    std::size_t agent;
    std::string address;
  };
  std::vector<Funding> funding;
  std::vector<LedgerTx> ledger;
  std::vector<std::pair<std::string, std::size_t>> truth;
  for (std::size_t k = 0; k < options.n_tx; ++k) {
    auto agent = static_cast<std::size_t>(crypto::uniform_below(fund_rng, options.n_agents));
    auto t = options.start_ms + crypto::uniform_int(fund_rng, 0, options.horizon_ms - 1);
    auto tx_id = crypto::new_uuid(fund_rng);
    auto addr = privacy::derive_address(roots[agent], privacy::PrivacyLevel::isolated, agent_ids[agent],
                                        privacy::Direction::inbound, "ethereum", tx_id)
                    .address;
    funding.push_back({t, agent, addr});
    truth.emplace_back(addr, agent);
    ledger.push_back({LedgerTx::Kind::funding, t, {"payer-" + std::to_string(k)}, {addr}});
  }
  std::sort(funding.begin(), funding.end(), [](const Funding& x, const Funding& y) {
    return x.t != y.t ? x.t < y.t : x.address < y.address;
  });

  LinkabilityResult result;
  result.config = config;
  result.addresses = truth.size();
  {
    std::set<std::string> uniq;
    for (const auto& [a, p] : truth) uniq.insert(a);
    result.unique_addresses = uniq.size() == truth.size();
  }

  const auto opts = options_for(config);
  for (std::size_t a = 0; a < options.n_agents; ++a) {
    std::vector<Funding> mine;
    for (const auto& f : funding) {
      if (f.agent == a) mine.push_back(f);
    }
    if (mine.empty()) continue;
    const auto vault = privacy::vault_address(roots[a], agent_ids[a], "ethereum");
    auto emit = [&](const privacy::ConsolidationPlan& plan) {
      auto times = plan.batch_times();
      for (std::size_t b = 0; b < plan.batches.size(); ++b) {
        ledger.push_back({LedgerTx::Kind::consolidation, times[b], plan.batches[b], {vault}});
        ++result.consolidation_txs;
      }
    };
    if (config == LinkConfig::none) {
      std::vector<std::string> all;
      for (const auto& f : mine) all.push_back(f.address);
      emit(privacy::plan_consolidation(all, plan_rng, mine.back().t, opts));
      continue;
    }
    std::int64_t now = options.start_ms;
    std::size_t next = 0;
    while (next < mine.size()) {
      std::vector<std::string> ready;
      while (next < mine.size() && mine[next].t <= now) ready.push_back(mine[next++].address);
      auto plan = privacy::plan_consolidation(ready, plan_rng, now, opts);
      emit(plan);
      now = plan.scheduled_at;
    }
  }

  std::stable_sort(ledger.begin(), ledger.end(),
                   [](const LedgerTx& x, const LedgerTx& y) { return x.timestamp < y.timestamp; });
  result.at_epsilon = cluster_and_score(ledger, truth, options.epsilon_ms);
  result.common_input_only = cluster_and_score(ledger, truth, -1);
  for (auto e : kSweep) result.sweep.push_back(cluster_and_score(ledger, truth, e));
  if (ledger_out) *ledger_out = std::move(ledger);
  return result;
}

LinkabilityReport run_linkability(const LinkabilityOptions& options) {
  LinkabilityReport report;
  report.options = options;
  for (auto c : {LinkConfig::none, LinkConfig::jitter_only, LinkConfig::full}) {
    report.results.push_back(simulate_linkability(c, options));
  }
  return report;
}

}  // namespace aesp::eval
