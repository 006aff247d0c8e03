#include <doctest.h>

#include <functional>
#include <thread>

#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"
#include "aesp/identity/hierarchy.hpp"

using namespace aesp;
using namespace aesp::identity;

namespace {

const crypto::IdentityRoot& root0() {
  static auto r = crypto::derive_identity_root({crypto::Bytes(32, 0), "test"});
  return r;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected aesp::Error");
  return Errc::invalid_argument;
}

policy::Policy sample_policy() {
  policy::Policy p;
  p.id = "11111111-2222-4333-8444-555555555555";
  p.agent_id = "a";
  p.created_at = 0;
  p.expires_at = 1000;
  p.conditions.max_amount_per_tx = 100'000'000;
  return p;
}

constexpr std::int64_t kNow = 1773568800000;

}  // namespace

TEST_CASE("agent derivation") {
  auto a0 = derive_agent(root0(), 0);
  CHECK(a0.agent_id == "ba1dd3164bce89484fe74b4a0d0fa92608b82ede48187200592e7dd2265f195a");
  CHECK(a0.did == "did:aesp:" + a0.agent_id);
  CHECK(derive_agent(root0(), 0).agent_id == a0.agent_id);
  CHECK(derive_agent(root0(), 1).agent_id != a0.agent_id);
  CHECK(a0.agent_id == agent_id_for(a0.public_key()));
}

TEST_CASE("certificates") {
  auto owner = derive_owner_keypair(root0());
  auto agent = derive_agent(root0(), 0);
  auto cert = issue_certificate(owner, agent, {Capability::payment, Capability::negotiation},
                                sample_policy(), 100'000'000, {"base"}, 86'400'000, kNow);
  CHECK(cert.version == "1.0");
  CHECK(cert.created_at < cert.expires_at);
  auto ph = crypto::sha256(std::string_view(canonical_json(sample_policy().to_json())));
  CHECK(cert.policy_hash == crypto::Bytes(ph.begin(), ph.end()));

  CHECK(verify_certificate(cert, owner.public_key, kNow) == CertificateStatus::valid);
  CHECK(verify_certificate(cert, owner.public_key, cert.expires_at - 1) == CertificateStatus::valid);
  CHECK(verify_certificate(cert, owner.public_key, cert.expires_at) == CertificateStatus::expired);

  auto stranger = crypto::derive_contextual_keypair(root0(), crypto::Curve::ed25519, "other:");
  CHECK(verify_certificate(cert, stranger.public_key, kNow) == CertificateStatus::untrusted_owner);

  auto tampered = cert;
  tampered.max_autonomous_amount += 1;
  CHECK(verify_certificate(tampered, owner.public_key, kNow) ==
        CertificateStatus::signature_invalid);
  auto tampered_caps = cert;
  tampered_caps.capabilities.insert(Capability::arbitration);
  CHECK(verify_certificate(tampered_caps, owner.public_key, kNow) ==
        CertificateStatus::signature_invalid);
  // Tampered and expired: signature failure is reported first.
  CHECK(verify_certificate(tampered, owner.public_key, cert.expires_at + 5) ==
        CertificateStatus::signature_invalid);

  auto round = IdentityCertificate::from_json(parse_json(canonical_json(cert.to_json())));
  CHECK(verify_certificate(round, owner.public_key, kNow) == CertificateStatus::valid);

  auto past = issue_certificate(owner, agent, {}, sample_policy(), 0, {}, 1000, kNow - 5000);
  CHECK(verify_certificate(past, owner.public_key, kNow) == CertificateStatus::expired);
  CHECK(code_of([&] { issue_certificate(owner, agent, {}, sample_policy(), 0, {}, 0, kNow); }) ==
        Errc::invalid_argument);
}

TEST_CASE("deterministic recovery of agents and certificates") {
  auto again = crypto::derive_identity_root({crypto::Bytes(32, 0), "test"});
  auto owner = derive_owner_keypair(root0());
  for (std::uint32_t i = 0; i < 5; ++i) {
    auto original = derive_agent(root0(), i);
    auto recovered = derive_agent(again, i);
    CHECK(original.agent_id == recovered.agent_id);
    auto cert = issue_certificate(owner, original, {}, sample_policy(), 0, {}, 10, kNow);
    CHECK(cert.agent_public_key == recovered.public_key());
    CHECK(verify_certificate(cert, derive_owner_keypair(again).public_key, kNow) ==
          CertificateStatus::valid);
  }
}

TEST_CASE("hierarchy depth, capabilities and chains") {
  AgentHierarchy h;
  CapabilitySet all = all_capabilities();
  h.add_child(kRootId, "a1", all);
  h.add_child("a1", "a2", all);
  h.add_child("a2", "a3", {Capability::payment});
  h.add_child("a3", "a4", {Capability::payment});
  auto n5 = h.add_child("a4", "a5", {Capability::payment});
  CHECK(n5.depth == 5);
  CHECK(code_of([&] { h.add_child("a5", "a6", {}); }) == Errc::depth_exceeded);
  CHECK(code_of([&] { h.add_child("a3", "x", {Capability::delegation}); }) ==
        Errc::capability_escalation);
  CHECK(code_of([&] { h.add_child("nobody", "x", {}); }) == Errc::unknown_parent);
  CHECK(code_of([&] { h.add_child(kRootId, "a2", {}); }) == Errc::duplicate_agent);

  auto chain = h.escalation_chain("a3");
  CHECK(chain == std::vector<std::string>{"a3", "a2", "a1", kRootId});
  CHECK(code_of([&] { h.escalation_chain("zz"); }) == Errc::unknown_agent);

  // Transitive capability monotonicity.
  for (const auto& node : h.nodes()) {
    if (node.parent_id == kRootId) continue;
    auto parent = h.find(node.parent_id);
    REQUIRE(parent.has_value());
    CHECK(std::includes(parent->capabilities.begin(), parent->capabilities.end(),
                        node.capabilities.begin(), node.capabilities.end()));
  }
  CHECK(code_of([&] { h.remove("a4"); }) == Errc::invalid_argument);
  h.remove("a5");
  CHECK(h.size() == 4);
}

TEST_CASE("hierarchy tolerates concurrent writers") {
  AgentHierarchy h;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        auto id = "t" + std::to_string(t) + "-" + std::to_string(i);
        h.add_child(kRootId, id, {Capability::payment});
        h.escalation_chain(id);
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(h.size() == 200);
}
