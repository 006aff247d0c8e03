#include <doctest.h>

#include <functional>

#include "aesp/commitment/commitment.hpp"
#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"
#include "aesp/negotiation/fsm.hpp"
#include "json_oracle.hpp"

using namespace aesp;
using namespace aesp::commitment;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected aesp::Error");
  return Errc::invalid_argument;
}

const crypto::IdentityRoot& buyer_root() {
  static auto r = crypto::derive_identity_root({crypto::Bytes(32, 1), "buyer"});
  return r;
}
const crypto::IdentityRoot& seller_root() {
  static auto r = crypto::derive_identity_root({crypto::Bytes(32, 2), "seller"});
  return r;
}

// Addresses of secp256k1 scalars 1, 2, 3 (from the python oracle).
constexpr const char* kAddr1 = "0x7E5F4552091A69125d5DfCb7b8C2659029395Bdf";
constexpr const char* kAddr2 = "0x2B5AD5c4795c026514f8317c7a215E218DcCD6cF";
constexpr const char* kAddr3 = "0x6813Eb9362372EEF6200f3b1dbC3f819671cBA69";
constexpr const char* kUsdc = "0xA0b86991c6218b36c1d19D4a2e9Eb0cE3606eB48";

CommitmentValue fixed_value() {
  CommitmentValue v;
  v.buyer_agent = kAddr1;
  v.seller_agent = kAddr2;
  v.item = "groceries: 12 items";
  v.price = "42500000";
  v.currency = kUsdc;
  v.delivery_deadline = "1767225600";
  v.arbitrator = kAddr3;
  v.escrow_required = true;
  std::string nonce_hex;
  for (int i = 0; i < 32; ++i) nonce_hex += "0f";
  v.nonce = uint256_to_decimal(crypto::from_hex(nonce_hex));
  return v;
}

crypto::DerivedKeypair scalar_key(std::uint8_t k) {
  crypto::Bytes s(32, 0);
  s[31] = k;
  return crypto::import_keypair(crypto::Curve::secp256k1, s);
}

CommitmentRecord contextual_record(const std::string& id) {
  CommitmentValue v = fixed_value();
  v.buyer_agent = contextual_address(buyer_root(), signing_context(id, Role::buyer));
  v.seller_agent = contextual_address(seller_root(), signing_context(id, Role::seller));
  v.nonce = random_nonce();
  return build(8453, v, std::nullopt, id);
}

}  // namespace

TEST_CASE("uint256 decimal conversions") {
  CHECK(uint256_to_decimal(uint256_from_decimal("0")) == "0");
  CHECK(uint256_to_decimal(uint256_from_decimal("000123")) == "123");
  const std::string max =
      "115792089237316195423570985008687907853269984665640564039457584007913129639935";
  auto m = uint256_from_decimal(max);
  CHECK(crypto::to_hex(m) == std::string(64, 'f'));
  CHECK(uint256_to_decimal(m) == max);
  CHECK(code_of([&] { uint256_from_decimal(
                          "115792089237316195423570985008687907853269984665640564039457584007913129639936"); }) ==
        Errc::invalid_argument);
  CHECK(code_of([] { uint256_from_decimal("12a"); }) == Errc::invalid_argument);
  CHECK(code_of([] { uint256_from_decimal(""); }) == Errc::invalid_argument);
  crypto::SeededRandom rng(5);
  for (int i = 0; i < 200; ++i) {
    auto n = random_nonce(rng);
    CHECK(uint256_to_decimal(uint256_from_decimal(n)) == n);
  }
}

TEST_CASE("eip712 digest matches oracle") {
  auto r = build(8453, fixed_value(), std::nullopt, "c1");
  CHECK(crypto::to_hex(eip712_digest(r)) ==
        "b825fda4f536142a77331b0b85e88d6ae4f5b0a1db592917090bc494009fe94d");
  auto r1 = build(1, fixed_value(), std::nullopt, "c1");
  CHECK(crypto::to_hex(eip712_digest(r1)) ==
        "33551cb874ab40a48d96f8bd612d84f0ee345625c5fcea9800fe6a2506b86294");

  // lowercase addresses normalize to the same struct
  auto lower = fixed_value();
  for (auto* f : {&lower.buyer_agent, &lower.seller_agent, &lower.currency, &lower.arbitrator}) {
    for (auto& c : *f) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  auto r2 = build(8453, lower, std::nullopt, "c1");
  CHECK(r2.value.buyer_agent == kAddr1);
  CHECK(eip712_digest(r2) == eip712_digest(r));
  CHECK(r2.commitment_hash == r.commitment_hash);

  // every field participates
  auto mutate = [&](const std::function<void(CommitmentValue&)>& fn) {
    auto v = fixed_value();
    fn(v);
    return eip712_digest(build(8453, v, std::nullopt, "c1"));
  };
  auto base = eip712_digest(r);
  CHECK(mutate([](auto& v) { v.buyer_agent = kAddr3; }) != base);
  CHECK(mutate([](auto& v) { v.seller_agent = kAddr3; }) != base);
  CHECK(mutate([](auto& v) { v.item += " "; }) != base);
  CHECK(mutate([](auto& v) { v.price = "42500001"; }) != base);
  CHECK(mutate([](auto& v) { v.currency = kAddr3; }) != base);
  CHECK(mutate([](auto& v) { v.delivery_deadline = "1767225601"; }) != base);
  CHECK(mutate([](auto& v) { v.arbitrator = kAddr1; }) != base);
  CHECK(mutate([](auto& v) { v.escrow_required = false; }) != base);
  CHECK(mutate([](auto& v) { v.nonce = "1"; }) != base);
}

TEST_CASE("commitment hash is sha256 of canonical domain and value") {
  auto r = build(8453, fixed_value(), std::nullopt, "c1");
  Json doc{{"domain", r.domain.to_json()}, {"value", r.value.to_json()}};
  auto expected = crypto::sha256(std::string_view(oracle::serialize(doc)));
  CHECK(r.commitment_hash == expected);
  CHECK(r.value.to_json().contains("buyerAgent"));
  CHECK(r.value.to_json()["price"].is_string());
  CHECK(r.domain.name == "YalletAgentCommitment");
}

TEST_CASE("build rejects malformed values") {
  auto bad = [](const std::function<void(CommitmentValue&)>& fn) {
    auto v = fixed_value();
    fn(v);
    return code_of([&] { build(8453, v); });
  };
  CHECK(bad([](auto& v) { v.buyer_agent = "0x1234"; }) == Errc::invalid_address);
  CHECK(bad([](auto& v) { v.currency = "A0b86991c6218b36c1d19D4a2e9Eb0cE3606eB48"; }) ==
        Errc::invalid_address);
  CHECK(bad([](auto& v) { v.price = "-1"; }) == Errc::invalid_argument);
  CHECK(bad([](auto& v) { v.nonce = "0"; }) == Errc::invalid_argument);
  CHECK(code_of([] { build(0, fixed_value()); }) == Errc::invalid_argument);
}

TEST_CASE("signing with fixed scalars recovers the parties") {
  auto r = propose(build(8453, fixed_value(), std::nullopt, "c1"));
  auto digest = eip712_digest(r);
  auto buyer_sig = crypto::sign_digest(scalar_key(1), digest);
  auto seller_sig = crypto::sign_digest(scalar_key(2), digest);

  CHECK(code_of([&] { attach_signature(r, Role::seller, seller_sig); }) == Errc::wrong_state);
  CHECK(code_of([&] { attach_signature(r, Role::buyer, seller_sig); }) == Errc::signer_mismatch);
  auto b = attach_signature(r, Role::buyer, buyer_sig);
  CHECK(b.state == CommitmentState::buyer_signed);
  CHECK(code_of([&] { attach_signature(b, Role::buyer, buyer_sig); }) == Errc::wrong_state);
  CHECK(code_of([&] { attach_signature(b, Role::seller, buyer_sig); }) == Errc::signer_mismatch);
  auto f = attach_signature(b, Role::seller, seller_sig);
  CHECK(f.state == CommitmentState::fully_signed);
  CHECK(verify_signatures(f));
  CHECK(buyer_sig.bytes.size() == 65);
  CHECK((buyer_sig.bytes[64] == 27 || buyer_sig.bytes[64] == 28));
}

TEST_CASE("contextual signing and dual-signature necessity") {
  auto r = contextual_record("order-77");
  CHECK(code_of([&] { sign_as(r, Role::buyer, buyer_root(), signing_context(r.id, Role::buyer)); }) ==
        Errc::wrong_state);
  r = propose(r);
  CHECK(code_of([&] { propose(r); }) == Errc::wrong_state);

  // wrong context or wrong root cannot stand in for the buyer
  CHECK(code_of([&] { sign_as(r, Role::buyer, buyer_root(), "commitment:other:buyer:"); }) ==
        Errc::signer_mismatch);
  CHECK(code_of([&] { sign_as(r, Role::buyer, seller_root(), signing_context(r.id, Role::buyer)); }) ==
        Errc::signer_mismatch);

  auto b = sign_as(r, Role::buyer, buyer_root(), signing_context(r.id, Role::buyer));
  CHECK(code_of([&] { advance(b, LifecycleEvent::escrow_funded); }) ==
        Errc::invalid_lifecycle_transition);
  auto f = sign_as(b, Role::seller, seller_root(), signing_context(r.id, Role::seller));
  CHECK(verify_signatures(f));

  // a fully_signed record missing either signature fails verification
  auto no_seller = f;
  no_seller.seller_signature.reset();
  CHECK_FALSE(verify_signatures(no_seller));
  auto no_buyer = f;
  no_buyer.buyer_signature.reset();
  CHECK_FALSE(verify_signatures(no_buyer));
  auto swapped = f;
  std::swap(swapped.buyer_signature, swapped.seller_signature);
  CHECK_FALSE(verify_signatures(swapped));
  auto tampered = f;
  tampered.value.price = "1";
  CHECK_FALSE(verify_signatures(tampered));

  auto e = advance(f, LifecycleEvent::escrow_funded, {"0xescrow", std::nullopt, std::nullopt});
  auto d = advance(e, LifecycleEvent::delivered, {std::nullopt, "proof", std::nullopt});
  auto c = advance(d, LifecycleEvent::released, {std::nullopt, std::nullopt, "0xrelease"});
  CHECK(c.state == CommitmentState::completed);
  CHECK(c.metadata.escrow_tx == "0xescrow");
  CHECK(c.metadata.delivery_hash == "proof");
  CHECK(c.metadata.release_tx == "0xrelease");
  CHECK(verify_signatures(c));

  auto round = CommitmentRecord::from_json(parse_json(canonical_json(c.to_json())));
  CHECK(round.to_json() == c.to_json());
  CHECK(verify_signatures(round));
}

TEST_CASE("lifecycle table") {
  using S = CommitmentState;
  using E = LifecycleEvent;
  int defined = 0;
  for (auto s : kAllCommitmentStates) {
    for (auto e : kAllLifecycleEvents) {
      auto n = lifecycle_next(s, e);
      CommitmentRecord r;
      r.state = s;
      if (n) {
        ++defined;
        CHECK(advance(r, e).state == *n);
      } else {
        CHECK(code_of([&] { advance(r, e); }) == Errc::invalid_lifecycle_transition);
      }
    }
  }
  CHECK(defined == 9);
  CHECK(lifecycle_next(S::fully_signed, E::escrow_funded) == S::escrowed);
  CHECK(lifecycle_next(S::escrowed, E::delivered) == S::delivered);
  CHECK(lifecycle_next(S::delivered, E::released) == S::completed);
  CHECK(lifecycle_next(S::escrowed, E::dispute) == S::disputed);
  CHECK(lifecycle_next(S::delivered, E::dispute) == S::disputed);
  for (auto s : {S::draft, S::proposed, S::buyer_signed, S::fully_signed}) {
    CHECK(lifecycle_next(s, E::cancel) == S::cancelled);
  }
  CHECK_FALSE(lifecycle_next(S::escrowed, E::cancel));
  CHECK_FALSE(lifecycle_next(S::completed, E::dispute));
}

TEST_CASE("negotiated agreement binds into the commitment") {
  auto s = negotiation::create_session("n1", "buyer", "seller", 1'000);
  negotiation::transition(s, negotiation::Event::offer, 1'000, Json{{"price", "42500000"}});
  negotiation::transition(s, negotiation::Event::accept, 2'000);
  REQUIRE(s.agreement_hash);

  auto r = build(8453, fixed_value(), s.agreement_hash, "c-bound");
  CHECK(r.agreement_hash == s.agreement_hash);
  negotiation::transition(s, negotiation::Event::commit, 3'000, Json(r.id));
  CHECK(s.state == negotiation::State::committed);
  CHECK(s.commitment_id == r.id);
  auto j = r.to_json();
  CHECK(j["agreement_hash"] == crypto::to_hex(*s.agreement_hash));
}
