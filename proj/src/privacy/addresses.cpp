#include "aesp/privacy/addresses.hpp"

#include <algorithm>
#include <array>

#include "aesp/error.hpp"

namespace aesp::privacy {

namespace {

constexpr std::array<std::string_view, 6> kSegmentKeys{"agent", "dir", "mode", "pool", "seq", "tx"};

std::string_view ns_name(crypto::AddressNamespace ns) {
  return ns == crypto::AddressNamespace::evm ? "evm" : "ed25519_chain";
}

}  // namespace

std::string_view to_string(Direction d) noexcept {
  return d == Direction::inbound ? "inbound" : "outbound";
}

std::string_view to_string(PrivacyLevel l) noexcept {
  switch (l) {
    case PrivacyLevel::transparent: return "transparent";
    case PrivacyLevel::basic: return "basic";
    case PrivacyLevel::isolated: return "isolated";
  }
  return "unknown";
}

Direction direction_from_string(std::string_view s) {
  if (s == "inbound") return Direction::inbound;
  if (s == "outbound") return Direction::outbound;
  throw Error(Errc::parse_error, "unknown direction: " + std::string(s));
}

PrivacyLevel privacy_level_from_string(std::string_view s) {
  for (auto l : {PrivacyLevel::transparent, PrivacyLevel::basic, PrivacyLevel::isolated}) {
    if (to_string(l) == s) return l;
  }
  throw Error(Errc::parse_error, "unknown privacy level: " + std::string(s));
}

std::string_view to_string(AddressStatus s) noexcept {
  switch (s) {
    case AddressStatus::pooled: return "pooled";
    case AddressStatus::claimed: return "claimed";
    case AddressStatus::spent: return "spent";
    case AddressStatus::consolidated: return "consolidated";
  }
  return "unknown";
}

std::string build_context(const ContextSegments& segments) {
  if (segments.empty()) throw Error(Errc::invalid_argument, "context needs at least one segment");
  std::vector<std::string> rendered;
  rendered.reserve(segments.size());
  for (const auto& [key, value] : segments) {
    if (std::find(kSegmentKeys.begin(), kSegmentKeys.end(), key) == kSegmentKeys.end()) {
      throw Error(Errc::unknown_segment, "unknown context segment: " + key);
    }
    if (value.find(':') != std::string::npos) {
      throw Error(Errc::colon_in_value, "context value for " + key + " contains ':'");
    }
    rendered.push_back(key + ":" + value);
  }
  // sort the rendered strings, not the keys: "a:x" vs "ab:y" would differ
  std::sort(rendered.begin(), rendered.end());
  std::string out;
  for (const auto& r : rendered) {
    out += r;
    out += ':';
  }
  return out;
}

crypto::AddressNamespace chain_namespace(std::string_view chain) {
  return chain == "solana" ? crypto::AddressNamespace::ed25519_chain : crypto::AddressNamespace::evm;
}

crypto::Curve curve_for(crypto::AddressNamespace ns) {
  return ns == crypto::AddressNamespace::evm ? crypto::Curve::secp256k1 : crypto::Curve::ed25519;
}

namespace {

DerivedAddress derive_at(const crypto::IdentityRoot& root, std::string_view chain, std::string ctx) {
  auto ns = chain_namespace(chain);
  auto kp = crypto::derive_contextual_keypair(root, curve_for(ns), ctx);
  return {crypto::address_for(kp, ns), ns, std::move(ctx)};
}

}  // namespace

std::string vault_address(const crypto::IdentityRoot& root, const std::string& agent_id,
                          std::string_view chain) {
  return derive_at(root, chain, build_context({{"agent", agent_id}})).address;
}

DerivedAddress derive_address(const crypto::IdentityRoot& root, PrivacyLevel level,
                              const std::string& agent_id, Direction dir, std::string_view chain,
                              const std::optional<std::string>& tx_id,
                              std::optional<std::uint64_t> seq) {
  switch (level) {
    case PrivacyLevel::transparent:
      return derive_at(root, chain, build_context({{"agent", agent_id}}));
    case PrivacyLevel::basic:
      return derive_at(root, chain,
                       build_context({{"agent", agent_id},
                                      {"dir", std::string(to_string(dir))},
                                      {"mode", "basic"}}));
    case PrivacyLevel::isolated:
      if (!tx_id || tx_id->empty()) {
        throw Error(Errc::missing_tx_id, "isolated addresses need a transaction id");
      }
      return derive_at(root, chain,
                       build_context({{"agent", agent_id},
                                      {"dir", std::string(to_string(dir))},
                                      {"seq", std::to_string(seq.value_or(0))},
                                      {"tx", *tx_id}}));
  }
  throw Error(Errc::invalid_argument, "unknown privacy level");
}

Json EphemeralAddressRecord::to_json() const {
  return Json{{"address", address},
              {"chain_namespace", ns_name(chain_namespace)},
              {"chain", chain},
              {"agent_id", agent_id},
              {"dir", to_string(dir)},
              {"context_string", context_string},
              {"seq", seq},
              {"derived_at", derived_at},
              {"status", to_string(status)},
              {"claimed_tx", claimed_tx ? Json(*claimed_tx) : Json()}};
}

AddressPool::AddressPool(const crypto::IdentityRoot& root, std::size_t pool_size, ReplenishMode mode)
    : root_(root), pool_size_(pool_size), mode_(mode) {
  if (!root_.valid()) throw Error(Errc::invalid_key_handle, "address pool needs an identity root");
  if (pool_size_ == 0) throw Error(Errc::invalid_argument, "pool size must be positive");
}

std::shared_ptr<AddressPool::Slot> AddressPool::slot(const Triple& t, bool create) {
  std::lock_guard lock(map_mu_);
  auto it = slots_.find(t);
  if (it != slots_.end()) return it->second;
  if (!create) {
    throw Error(Errc::pool_not_initialized, "no pool for " + std::get<0>(t) + "/" + std::get<1>(t) +
                                                "/" + std::string(to_string(std::get<2>(t))));
  }
  auto s = std::make_shared<Slot>();
  slots_.emplace(t, s);
  return s;
}

std::size_t AddressPool::fill(const Triple& t, Slot& s, std::int64_t now) {
  const auto& [agent, chain, dir] = t;
  auto ns = chain_namespace(chain);
  std::size_t derived = 0;
  while (s.pooled.size() < pool_size_) {
    std::uint64_t seq;
    {
      std::lock_guard lock(map_mu_);
      seq = counters_[CounterKey{agent, ns, dir}]++;
    }
    auto ctx = build_context({{"agent", agent},
                              {"dir", std::string(to_string(dir))},
                              {"pool", "pre"},
                              {"seq", std::to_string(seq)}});
    auto d = derive_at(root_, chain, ctx);
    EphemeralAddressRecord rec;
    rec.address = d.address;
    rec.chain_namespace = ns;
    rec.chain = chain;
    rec.agent_id = agent;
    rec.dir = dir;
    rec.context_string = std::move(ctx);
    rec.seq = seq;
    rec.derived_at = now;
    {
      std::lock_guard lock(map_mu_);
      by_address_.emplace(rec.address, rec);
    }
    s.pooled.push_back(d.address);
    ++derived;
  }
  return derived;
}

std::size_t AddressPool::initialize(const std::string& agent_id, const std::string& chain,
                                    Direction dir, std::int64_t now) {
  Triple t{agent_id, chain, dir};
  auto s = slot(t, true);
  std::lock_guard lock(s->mu);
  return fill(t, *s, now);
}

std::size_t AddressPool::replenish(const std::string& agent_id, const std::string& chain,
                                   Direction dir, std::int64_t now) {
  Triple t{agent_id, chain, dir};
  auto s = slot(t, false);
  std::lock_guard lock(s->mu);
  return fill(t, *s, now);
}

EphemeralAddressRecord AddressPool::claim(const std::string& agent_id, const std::string& chain,
                                          Direction dir, const std::string& tx_id, std::int64_t now) {
  if (tx_id.empty()) throw Error(Errc::missing_tx_id, "claim needs a transaction id");
  Triple t{agent_id, chain, dir};
  auto s = slot(t, false);
  std::lock_guard lock(s->mu);
  if (s->pooled.empty()) {
    throw Error(Errc::pool_exhausted, "address pool for " + agent_id + "/" + chain + " is empty");
  }
  auto address = s->pooled.front();
  s->pooled.erase(s->pooled.begin());
  EphemeralAddressRecord out;
  {
    std::lock_guard map_lock(map_mu_);
    auto& rec = by_address_.at(address);
    rec.status = AddressStatus::claimed;
    rec.claimed_tx = tx_id;
    out = rec;
  }
  if (mode_ == ReplenishMode::on_claim) fill(t, *s, now);
  return out;
}

void AddressPool::set_status(const std::string& address, AddressStatus from, AddressStatus to) {
  std::lock_guard lock(map_mu_);
  auto it = by_address_.find(address);
  if (it == by_address_.end()) throw Error(Errc::invalid_argument, "unknown pool address " + address);
  if (it->second.status != from) {
    throw Error(Errc::wrong_state, "address " + address + " is " +
                                       std::string(to_string(it->second.status)) + ", expected " +
                                       std::string(to_string(from)));
  }
  it->second.status = to;
}

void AddressPool::mark_spent(const std::string& address) {
  set_status(address, AddressStatus::claimed, AddressStatus::spent);
}

void AddressPool::mark_consolidated(const std::string& address) {
  set_status(address, AddressStatus::spent, AddressStatus::consolidated);
}

std::optional<EphemeralAddressRecord> AddressPool::find(const std::string& address) const {
  std::lock_guard lock(map_mu_);
  auto it = by_address_.find(address);
  if (it == by_address_.end()) return std::nullopt;
  return it->second;
}

std::vector<EphemeralAddressRecord> AddressPool::records(const std::string& agent_id,
                                                         const std::string& chain, Direction dir) const {
  std::lock_guard lock(map_mu_);
  std::vector<EphemeralAddressRecord> out;
  for (const auto& [addr, rec] : by_address_) {
    if (rec.agent_id == agent_id && rec.chain == chain && rec.dir == dir) out.push_back(rec);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return out;
}

std::vector<EphemeralAddressRecord> AddressPool::records_with_status(AddressStatus s) const {
  std::lock_guard lock(map_mu_);
  std::vector<EphemeralAddressRecord> out;
  for (const auto& [addr, rec] : by_address_) {
    if (rec.status == s) out.push_back(rec);
  }
  return out;
}

PoolCounts AddressPool::counts() const {
  std::lock_guard lock(map_mu_);
  PoolCounts c;
  for (const auto& [addr, rec] : by_address_) {
    switch (rec.status) {
      case AddressStatus::pooled: ++c.pooled; break;
      case AddressStatus::claimed: ++c.claimed; break;
      case AddressStatus::spent: ++c.spent; break;
      case AddressStatus::consolidated: ++c.consolidated; break;
    }
  }
  return c;
}

std::size_t AddressPool::derived_total() const {
  std::lock_guard lock(map_mu_);
  std::size_t n = 0;
  for (const auto& [key, next] : counters_) n += next;
  return n;
}

std::uint64_t AddressPool::next_seq(const std::string& agent_id, const std::string& chain,
                                    Direction dir) const {
  std::lock_guard lock(map_mu_);
  auto it = counters_.find(CounterKey{agent_id, chain_namespace(chain), dir});
  return it == counters_.end() ? 0 : it->second;
}

}  // namespace aesp::privacy
