#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "aesp/constants.hpp"
#include "aesp/crypto/canonical_json.hpp"
#include "aesp/crypto/keys.hpp"

namespace aesp::privacy {

enum class Direction { inbound, outbound };
enum class PrivacyLevel { transparent, basic, isolated };

std::string_view to_string(Direction d) noexcept;
std::string_view to_string(PrivacyLevel l) noexcept;
Direction direction_from_string(std::string_view s);
PrivacyLevel privacy_level_from_string(std::string_view s);

/// Allowed keys: agent, dir, seq, tx, mode, pool.
using ContextSegments = std::map<std::string, std::string>;

/// "k1:v1:k2:v2:...:" with the rendered "key:value" segments sorted.
/// Errors: invalid_argument (empty), unknown_segment, colon_in_value.
std::string build_context(const ContextSegments& segments);

/// Which key family a chain uses. "solana" maps to ed25519; every other
/// chain name is treated as EVM.
crypto::AddressNamespace chain_namespace(std::string_view chain);
crypto::Curve curve_for(crypto::AddressNamespace ns);

/// The agent's main (vault) address: context {agent}.
std::string vault_address(const crypto::IdentityRoot& root, const std::string& agent_id,
                          std::string_view chain);

struct DerivedAddress {
  std::string address;
  crypto::AddressNamespace chain_namespace = crypto::AddressNamespace::evm;
  std::string context;
};

/// Errors: missing_tx_id (isolated without tx_id), colon_in_value.
DerivedAddress derive_address(const crypto::IdentityRoot& root, PrivacyLevel level,
                              const std::string& agent_id, Direction dir, std::string_view chain,
                              const std::optional<std::string>& tx_id = std::nullopt,
                              std::optional<std::uint64_t> seq = std::nullopt);

enum class AddressStatus { pooled, claimed, spent, consolidated };
std::string_view to_string(AddressStatus s) noexcept;

struct EphemeralAddressRecord {
  std::string address;
  crypto::AddressNamespace chain_namespace = crypto::AddressNamespace::evm;
  std::string chain;
  std::string agent_id;
  Direction dir = Direction::outbound;
  std::string context_string;
  std::uint64_t seq = 0;
  std::int64_t derived_at = 0;
  AddressStatus status = AddressStatus::pooled;
  std::optional<std::string> claimed_tx;

  Json to_json() const;
};

enum class ReplenishMode { on_claim, deferred };

struct PoolCounts {
  std::size_t pooled = 0, claimed = 0, spent = 0, consolidated = 0;
  std::size_t total() const noexcept { return pooled + claimed + spent + consolidated; }
};

/// Pre-derived address pools, one per (agent, chain, dir). Pool contexts
/// are {agent, dir, pool:pre, seq:n}. The seq counter is shared by every
/// chain in the same namespace so two EVM chains never get the same
/// address. Claimed addresses keep their pool context; the transaction is
/// linked through the audit tag instead.
class AddressPool {
 public:
  AddressPool(const crypto::IdentityRoot& root, std::size_t pool_size = constants::kAddressPoolSize,
              ReplenishMode mode = ReplenishMode::on_claim);

  /// Fills the pool to pool_size; returns how many were derived.
  std::size_t initialize(const std::string& agent_id, const std::string& chain, Direction dir,
                         std::int64_t now = 0);
  /// Errors: pool_not_initialized, pool_exhausted, missing_tx_id.
  EphemeralAddressRecord claim(const std::string& agent_id, const std::string& chain, Direction dir,
                               const std::string& tx_id, std::int64_t now = 0);
  /// Errors: pool_not_initialized.
  std::size_t replenish(const std::string& agent_id, const std::string& chain, Direction dir,
                        std::int64_t now = 0);

  /// claimed -> spent. Errors: wrong_state, invalid_argument (unknown).
  void mark_spent(const std::string& address);
  /// spent -> consolidated. Errors: wrong_state, invalid_argument.
  void mark_consolidated(const std::string& address);

  std::optional<EphemeralAddressRecord> find(const std::string& address) const;
  std::vector<EphemeralAddressRecord> records(const std::string& agent_id, const std::string& chain,
                                              Direction dir) const;
  std::vector<EphemeralAddressRecord> records_with_status(AddressStatus s) const;
  PoolCounts counts() const;
  std::size_t derived_total() const;
  /// Next seq for the namespace of this chain.
  std::uint64_t next_seq(const std::string& agent_id, const std::string& chain, Direction dir) const;
  std::size_t pool_size() const noexcept { return pool_size_; }

 private:
  using Triple = std::tuple<std::string, std::string, Direction>;
  using CounterKey = std::tuple<std::string, crypto::AddressNamespace, Direction>;
  struct Slot {
    std::mutex mu;
    std::vector<std::string> pooled;  // FIFO of addresses
  };

  std::shared_ptr<Slot> slot(const Triple& t, bool create);
  std::size_t fill(const Triple& t, Slot& s, std::int64_t now);
  void set_status(const std::string& address, AddressStatus from, AddressStatus to);

  crypto::IdentityRoot root_;
  std::size_t pool_size_;
  ReplenishMode mode_;

  mutable std::mutex map_mu_;
  std::map<Triple, std::shared_ptr<Slot>> slots_;
  std::map<CounterKey, std::uint64_t> counters_;
  std::map<std::string, EphemeralAddressRecord> by_address_;
};

}  // namespace aesp::privacy
