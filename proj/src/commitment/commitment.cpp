#include "aesp/commitment/commitment.hpp"

#include <algorithm>

#include "aesp/constants.hpp"
#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"

namespace aesp::commitment {

using crypto::Bytes;
using crypto::Hash32;

namespace {

constexpr std::string_view kDomainType = "EIP712Domain(string name,string version,uint256 chainId)";
constexpr std::string_view kCommitmentType =
    "Commitment(address buyerAgent,address sellerAgent,string item,uint256 price,"
    "address currency,uint256 deliveryDeadline,address arbitrator,bool escrowRequired,"
    "uint256 nonce)";

std::string normalize_address(const std::string& field, const std::string& text) {
  if (!crypto::is_evm_address(text)) {
    throw Error(Errc::invalid_address, field + " is not a 20-byte 0x address: " + text);
  }
  return crypto::to_checksum_address(crypto::from_hex(text));
}

std::string normalize_uint(const std::string& field, const std::string& text) {
  try {
    return uint256_to_decimal(uint256_from_decimal(text));
  } catch (const Error&) {
    throw Error(Errc::invalid_argument, field + " is not a uint256 decimal: " + text);
  }
}

void append(Bytes& out, crypto::ByteView v) { out.insert(out.end(), v.begin(), v.end()); }

Hash32 word_from_address(const std::string& addr) {
  Hash32 w{};
  auto raw = crypto::from_hex(addr);
  std::copy(raw.begin(), raw.end(), w.begin() + 12);
  return w;
}

Hash32 word_from_int(std::int64_t v) {
  if (v < 0) throw Error(Errc::invalid_argument, "chain id must be non-negative");
  Hash32 w{};
  for (int i = 0; i < 8; ++i) w[31 - i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
  return w;
}

Hash32 domain_separator(const Eip712Domain& d) {
  Bytes enc;
  append(enc, crypto::keccak256(kDomainType));
  append(enc, crypto::keccak256(std::string_view(d.name)));
  append(enc, crypto::keccak256(std::string_view(d.version)));
  append(enc, word_from_int(d.chain_id));
  return crypto::keccak256(enc);
}

Hash32 struct_hash(const CommitmentValue& v) {
  Bytes enc;
  append(enc, crypto::keccak256(kCommitmentType));
  append(enc, word_from_address(v.buyer_agent));
  append(enc, word_from_address(v.seller_agent));
  append(enc, crypto::keccak256(std::string_view(v.item)));
  append(enc, uint256_from_decimal(v.price));
  append(enc, word_from_address(v.currency));
  append(enc, uint256_from_decimal(v.delivery_deadline));
  append(enc, word_from_address(v.arbitrator));
  Hash32 flag{};
  flag[31] = v.escrow_required ? 1 : 0;
  append(enc, flag);
  append(enc, uint256_from_decimal(v.nonce));
  return crypto::keccak256(enc);
}

const std::string& party_address(const CommitmentValue& v, Role role) {
  return role == Role::buyer ? v.buyer_agent : v.seller_agent;
}

Json opt(const std::optional<std::string>& s) { return s ? Json(*s) : Json(); }
std::optional<std::string> read_opt(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

Json sig_json(const std::optional<crypto::Signature>& s) {
  return s ? Json(crypto::to_hex(s->bytes)) : Json();
}

std::optional<crypto::Signature> read_sig(const Json& j, const char* key) {
  auto hex = read_opt(j, key);
  if (!hex) return std::nullopt;
  return crypto::Signature{crypto::Curve::secp256k1, crypto::from_hex(*hex)};
}

Hash32 to_hash32(const Bytes& b) {
  if (b.size() != 32) throw Error(Errc::parse_error, "expected 32-byte hash");
  Hash32 h{};
  std::copy(b.begin(), b.end(), h.begin());
  return h;
}

}  // namespace

std::string_view to_string(CommitmentState s) noexcept {
  switch (s) {
    case CommitmentState::draft: return "draft";
    case CommitmentState::proposed: return "proposed";
    case CommitmentState::buyer_signed: return "buyer_signed";
    case CommitmentState::fully_signed: return "fully_signed";
    case CommitmentState::escrowed: return "escrowed";
    case CommitmentState::delivered: return "delivered";
    case CommitmentState::completed: return "completed";
    case CommitmentState::disputed: return "disputed";
    case CommitmentState::cancelled: return "cancelled";
  }
  return "unknown";
}

std::string_view to_string(LifecycleEvent e) noexcept {
  switch (e) {
    case LifecycleEvent::escrow_funded: return "escrow_funded";
    case LifecycleEvent::delivered: return "delivered";
    case LifecycleEvent::released: return "released";
    case LifecycleEvent::dispute: return "dispute";
    case LifecycleEvent::cancel: return "cancel";
  }
  return "unknown";
}

std::string_view to_string(Role r) noexcept { return r == Role::buyer ? "buyer" : "seller"; }

CommitmentState commitment_state_from_string(std::string_view name) {
  for (auto s : kAllCommitmentStates) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::parse_error, "unknown commitment state: " + std::string(name));
}

std::optional<CommitmentState> lifecycle_next(CommitmentState s, LifecycleEvent e) noexcept {
  using S = CommitmentState;
  switch (e) {
    case LifecycleEvent::escrow_funded:
      if (s == S::fully_signed) return S::escrowed;
      break;
    case LifecycleEvent::delivered:
      if (s == S::escrowed) return S::delivered;
      break;
    case LifecycleEvent::released:
      if (s == S::delivered) return S::completed;
      break;
    case LifecycleEvent::dispute:
      if (s == S::escrowed || s == S::delivered) return S::disputed;
      break;
    case LifecycleEvent::cancel:
      if (s == S::draft || s == S::proposed || s == S::buyer_signed || s == S::fully_signed) {
        return S::cancelled;
      }
      break;
  }
  return std::nullopt;
}

Hash32 uint256_from_decimal(std::string_view decimal) {
  if (decimal.empty() || decimal.size() > 78) {
    throw Error(Errc::invalid_argument, "uint256 decimal has bad length");
  }
  Hash32 out{};
  for (char c : decimal) {
    if (c < '0' || c > '9') throw Error(Errc::invalid_argument, "uint256 decimal has non-digit");
    unsigned carry = static_cast<unsigned>(c - '0');
    for (int i = 31; i >= 0; --i) {
      unsigned v = out[i] * 10u + carry;
      out[i] = static_cast<std::uint8_t>(v & 0xff);
      carry = v >> 8;
    }
    if (carry != 0) throw Error(Errc::invalid_argument, "uint256 overflow");
  }
  return out;
}

std::string uint256_to_decimal(crypto::ByteView be32) {
  Bytes n(be32.begin(), be32.end());
  std::string digits;
  bool zero = false;
  while (!zero) {
    unsigned rem = 0;
    zero = true;
    for (auto& b : n) {
      unsigned cur = (rem << 8) | b;
      b = static_cast<std::uint8_t>(cur / 10);
      rem = cur % 10;
      if (b != 0) zero = false;
    }
    digits.push_back(static_cast<char>('0' + rem));
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

std::string random_nonce(crypto::RandomSource& rng) {
  Hash32 raw{};
  do {
    rng.fill(raw);
  } while (std::all_of(raw.begin(), raw.end(), [](std::uint8_t b) { return b == 0; }));
  return uint256_to_decimal(raw);
}

Json CommitmentValue::to_json() const {
  return Json{{"buyerAgent", buyer_agent},       {"sellerAgent", seller_agent},
              {"item", item},                    {"price", price},
              {"currency", currency},            {"deliveryDeadline", delivery_deadline},
              {"arbitrator", arbitrator},        {"escrowRequired", escrow_required},
              {"nonce", nonce}};
}

CommitmentValue CommitmentValue::from_json(const Json& j) {
  try {
    CommitmentValue v;
    v.buyer_agent = j.at("buyerAgent").get<std::string>();
    v.seller_agent = j.at("sellerAgent").get<std::string>();
    v.item = j.at("item").get<std::string>();
    v.price = j.at("price").get<std::string>();
    v.currency = j.at("currency").get<std::string>();
    v.delivery_deadline = j.at("deliveryDeadline").get<std::string>();
    v.arbitrator = j.at("arbitrator").get<std::string>();
    v.escrow_required = j.at("escrowRequired").get<bool>();
    v.nonce = j.at("nonce").get<std::string>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed commitment value: ") + e.what());
  }
}

Json Eip712Domain::to_json() const {
  return Json{{"name", name}, {"version", version}, {"chainId", chain_id}};
}

Json CommitmentRecord::to_json() const {
  return Json{{"id", id},
              {"value", value.to_json()},
              {"domain", domain.to_json()},
              {"state", to_string(state)},
              {"commitment_hash", crypto::to_hex(commitment_hash)},
              {"eip712_digest", crypto::to_hex(eip712_digest(*this))},
              {"buyer_signature", sig_json(buyer_signature)},
              {"seller_signature", sig_json(seller_signature)},
              {"agreement_hash", agreement_hash ? Json(crypto::to_hex(*agreement_hash)) : Json()},
              {"metadata",
               {{"escrow_tx", opt(metadata.escrow_tx)},
                {"delivery_hash", opt(metadata.delivery_hash)},
                {"release_tx", opt(metadata.release_tx)}}}};
}

CommitmentRecord CommitmentRecord::from_json(const Json& j) {
  try {
    CommitmentRecord r;
    r.id = j.at("id").get<std::string>();
    r.value = CommitmentValue::from_json(j.at("value"));
    const auto& d = j.at("domain");
    r.domain = {d.at("name").get<std::string>(), d.at("version").get<std::string>(),
                d.at("chainId").get<std::int64_t>()};
    r.state = commitment_state_from_string(j.at("state").get<std::string>());
    r.commitment_hash = to_hash32(crypto::from_hex(j.at("commitment_hash").get<std::string>()));
    r.buyer_signature = read_sig(j, "buyer_signature");
    r.seller_signature = read_sig(j, "seller_signature");
    if (auto ah = read_opt(j, "agreement_hash")) r.agreement_hash = to_hash32(crypto::from_hex(*ah));
    if (auto m = j.find("metadata"); m != j.end() && m->is_object()) {
      r.metadata.escrow_tx = read_opt(*m, "escrow_tx");
      r.metadata.delivery_hash = read_opt(*m, "delivery_hash");
      r.metadata.release_tx = read_opt(*m, "release_tx");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed commitment record: ") + e.what());
  }
}

Hash32 commitment_hash(const Eip712Domain& domain, const CommitmentValue& value) {
  auto body = canonical_json(Json{{"domain", domain.to_json()}, {"value", value.to_json()}});
  return crypto::sha256(std::string_view(body));
}

Hash32 eip712_digest(const Eip712Domain& domain, const CommitmentValue& value) {
  Bytes enc{0x19, 0x01};
  append(enc, domain_separator(domain));
  append(enc, struct_hash(value));
  return crypto::keccak256(enc);
}

CommitmentRecord build(std::int64_t chain_id, CommitmentValue value,
                       std::optional<Hash32> agreement_hash, std::string id) {
  value.buyer_agent = normalize_address("buyer_agent", value.buyer_agent);
  value.seller_agent = normalize_address("seller_agent", value.seller_agent);
  value.currency = normalize_address("currency", value.currency);
  value.arbitrator = normalize_address("arbitrator", value.arbitrator);
  value.price = normalize_uint("price", value.price);
  value.delivery_deadline = normalize_uint("delivery_deadline", value.delivery_deadline);
  value.nonce = normalize_uint("nonce", value.nonce);
  if (value.nonce == "0") throw Error(Errc::invalid_argument, "nonce must be nonzero");
  if (chain_id <= 0) throw Error(Errc::invalid_argument, "chain id must be positive");

  CommitmentRecord r;
  r.id = id.empty() ? crypto::new_uuid(crypto::system_random()) : std::move(id);
  r.value = std::move(value);
  r.domain = {std::string(constants::kEip712DomainName), std::string(constants::kEip712DomainVersion),
              chain_id};
  r.commitment_hash = commitment_hash(r.domain, r.value);
  r.agreement_hash = agreement_hash;
  return r;
}

CommitmentRecord propose(const CommitmentRecord& record) {
  if (record.state != CommitmentState::draft) {
    throw Error(Errc::wrong_state, "propose needs draft, record is " +
                                       std::string(to_string(record.state)));
  }
  auto next = record;
  next.state = CommitmentState::proposed;
  return next;
}

CommitmentRecord attach_signature(const CommitmentRecord& record, Role role,
                                  const crypto::Signature& signature) {
  const auto needed = role == Role::buyer ? CommitmentState::proposed : CommitmentState::buyer_signed;
  const auto& existing = role == Role::buyer ? record.buyer_signature : record.seller_signature;
  if (record.state != needed || existing) {
    throw Error(Errc::wrong_state, std::string(to_string(role)) + " cannot sign in state " +
                                       std::string(to_string(record.state)));
  }
  auto digest = eip712_digest(record);
  auto signer = crypto::recover_evm_address(digest, signature);
  if (!signer || *signer != party_address(record.value, role)) {
    throw Error(Errc::signer_mismatch, std::string(to_string(role)) + " signature recovers to " +
                                           (signer ? *signer : std::string("nothing")) +
                                           ", expected " + party_address(record.value, role));
  }
  auto next = record;
  if (role == Role::buyer) {
    next.buyer_signature = signature;
    next.state = CommitmentState::buyer_signed;
  } else {
    next.seller_signature = signature;
    next.state = CommitmentState::fully_signed;
  }
  return next;
}

CommitmentRecord sign_as(const CommitmentRecord& record, Role role, const crypto::IdentityRoot& root,
                         std::string_view ctx) {
  auto digest = eip712_digest(record);
  auto sig = crypto::sign_typed_data_with_context(root, ctx, digest);
  return attach_signature(record, role, sig);
}

bool verify_signatures(const CommitmentRecord& record) {
  auto digest = eip712_digest(record);
  auto ok = [&](const std::optional<crypto::Signature>& sig, Role role) {
    if (!sig) return true;
    auto signer = crypto::recover_evm_address(digest, *sig);
    return signer && *signer == party_address(record.value, role);
  };
  if (!ok(record.buyer_signature, Role::buyer) || !ok(record.seller_signature, Role::seller)) {
    return false;
  }
  if (commitment_hash(record.domain, record.value) != record.commitment_hash) return false;
  using S = CommitmentState;
  const bool needs_both = record.state == S::fully_signed || record.state == S::escrowed ||
                          record.state == S::delivered || record.state == S::completed ||
                          record.state == S::disputed;
  if (needs_both && (!record.buyer_signature || !record.seller_signature)) return false;
  if (record.state == S::buyer_signed && !record.buyer_signature) return false;
  return true;
}

CommitmentRecord advance(const CommitmentRecord& record, LifecycleEvent event,
                         const CommitmentMetadata& metadata) {
  auto next_state = lifecycle_next(record.state, event);
  if (!next_state) {
    throw Error(Errc::invalid_lifecycle_transition,
                std::string(to_string(event)) + " not allowed in " +
                    std::string(to_string(record.state)));
  }
  auto next = record;
  next.state = *next_state;
  if (metadata.escrow_tx) next.metadata.escrow_tx = metadata.escrow_tx;
  if (metadata.delivery_hash) next.metadata.delivery_hash = metadata.delivery_hash;
  if (metadata.release_tx) next.metadata.release_tx = metadata.release_tx;
  return next;
}

std::string signing_context(std::string_view commitment_id, Role role) {
  return "commitment:" + std::string(commitment_id) + ":" + std::string(to_string(role)) + ":";
}

std::string contextual_address(const crypto::IdentityRoot& root, std::string_view ctx) {
  return crypto::address_for(crypto::derive_contextual_keypair(root, crypto::Curve::secp256k1, ctx),
                             crypto::AddressNamespace::evm);
}

}  // namespace aesp::commitment
