#include <doctest.h>

#include <functional>

#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"
#include "aesp/negotiation/transport.hpp"

using namespace aesp;
using namespace aesp::negotiation;

namespace {

constexpr std::int64_t kT0 = 1773568800000;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected aesp::Error");
  return Errc::invalid_argument;
}

// Drives a fresh session into `target` along a shortest valid path.
NegotiationSession session_in(State target) {
  auto s = create_session("s", "a", "b", kT0);
  auto step = [&](Event e) { transition(s, e, kT0, Json{{"price", 10}}, "a"); };
  switch (target) {
    case State::initial: break;
    case State::offer_sent: step(Event::offer); break;
    case State::offer_received: step(Event::offer_recv); break;
    case State::countering: step(Event::offer); step(Event::counter); break;
    case State::accepted: step(Event::offer); step(Event::accept); break;
    case State::rejected: step(Event::offer); step(Event::reject); break;
    case State::committed: step(Event::offer); step(Event::accept); step(Event::commit); break;
    case State::disputed:
      step(Event::offer); step(Event::accept); step(Event::commit); step(Event::dispute);
      break;
  }
  REQUIRE(s.state == target);
  return s;
}

const crypto::IdentityRoot& root() {
  static auto r = crypto::derive_identity_root({crypto::Bytes(32, 3), "negotiation-tests"});
  return r;
}

struct Pair {
  InMemoryTransport transport;
  std::int64_t now = kT0;
  NegotiationProtocol buyer;
  NegotiationProtocol seller;
  Pair()
      : buyer("buyer", crypto::derive_contextual_keypair(root(), crypto::Curve::x25519, "neg:buyer:"),
              transport, [this] { return now; }),
        seller("seller", crypto::derive_contextual_keypair(root(), crypto::Curve::x25519, "neg:seller:"),
               transport, [this] { return now; }) {
    transport.attach(buyer);
    transport.attach(seller);
    buyer.register_peer("seller", seller.public_key());
    seller.register_peer("buyer", buyer.public_key());
  }
};

}  // namespace

TEST_CASE("exhaustive transition matrix: 13 of 56 pairs succeed") {
  int ok = 0;
  for (auto s : kAllStates) {
    for (auto e : kAllEvents) {
      auto session = session_in(s);
      bool in_table = next_state(s, e).has_value();
      try {
        transition(session, e, kT0, Json{{"price", 10}}, "a");
        CHECK(in_table);
        ++ok;
      } catch (const Error& err) {
        CHECK_FALSE(in_table);
        CHECK(err.code() == Errc::invalid_transition);
        CHECK(session.state == s);  // unchanged on error
      }
    }
  }
  CHECK(ok == 13);
  for (auto e : kAllEvents) {
    CHECK_FALSE(next_state(State::rejected, e).has_value());
    CHECK_FALSE(next_state(State::disputed, e).has_value());
  }
  CHECK(next_state(State::initial, Event::offer) == State::offer_sent);
  CHECK(next_state(State::initial, Event::offer_recv) == State::offer_received);
  CHECK(next_state(State::accepted, Event::commit) == State::committed);
  CHECK(next_state(State::committed, Event::dispute) == State::disputed);
}

TEST_CASE("counter self-loop and round limit") {
  auto s = session_in(State::countering);
  CHECK(s.round_count == 2);
  for (int i = 0; i < 3; ++i) transition(s, Event::counter, kT0, Json{{"price", i}});
  CHECK(s.state == State::countering);
  CHECK(s.round_count == 5);
  while (s.round_count < 10) transition(s, Event::counter, kT0, Json{{"price", 1}});
  CHECK(code_of([&] { transition(s, Event::counter, kT0, Json{{"price", 2}}); }) ==
        Errc::round_limit_exceeded);
  CHECK(s.round_count == 10);
  // Accept is still possible at the limit.
  transition(s, Event::accept, kT0);
  CHECK(s.state == State::accepted);
}

TEST_CASE("invalid transition from accepted") {
  auto s = session_in(State::accepted);
  CHECK(code_of([&] { transition(s, Event::reject, kT0); }) == Errc::invalid_transition);
}

TEST_CASE("TTL blocks every transition") {
  for (auto st : kAllStates) {
    for (auto e : kAllEvents) {
      auto s = session_in(st);
      CHECK(code_of([&] { transition(s, e, kT0 + s.ttl_ms); }) == Errc::session_expired);
    }
  }
  auto s = session_in(State::offer_sent);
  transition(s, Event::accept, kT0 + s.ttl_ms - 1);
  CHECK(s.state == State::accepted);
}

TEST_CASE("agreement hash") {
  auto s = create_session("s", "a", "b", kT0);
  CHECK(code_of([&] { compute_agreement_hash(s); }) == Errc::no_rounds);
  transition(s, Event::offer, kT0, parse_json(R"({"price":10})"));
  transition(s, Event::accept, kT0);
  REQUIRE(s.agreement_hash.has_value());
  CHECK(crypto::to_hex(*s.agreement_hash) ==
        "89653e39ea989d1d70dc904c11411ba28804d29c22ec98d92f8213b75e7167c8");

  auto t = create_session("t", "a", "b", kT0);
  transition(t, Event::offer_recv, kT0, Json{{"price", 30}});
  transition(t, Event::counter, kT0, Json{{"price", 20}});
  transition(t, Event::counter, kT0, Json{{"price", 10}});
  transition(t, Event::accept, kT0);
  CHECK(t.agreement_hash == s.agreement_hash);
}

TEST_CASE("protocol round trip over the in-memory transport") {
  Pair p;
  Json offer = {{"item", "groceries"}, {"price", 42}};
  std::vector<NegotiationMessage> seen;
  p.seller.on_message = [&](const NegotiationMessage& m) { seen.push_back(m); };

  auto id = p.buyer.start("seller", offer);
  CHECK(p.transport.deliver_pending() == 1);
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].payload == offer);
  CHECK(seen[0].type == MessageType::offer);
  CHECK(p.seller.session(id)->state == State::offer_received);
  CHECK(p.buyer.session(id)->state == State::offer_sent);

  p.seller.counter(id, {{"item", "groceries"}, {"price", 40}});
  p.transport.deliver_pending();
  p.buyer.counter(id, {{"item", "groceries"}, {"price", 41}});
  p.transport.deliver_pending();
  auto h = p.seller.accept(id);
  p.transport.deliver_pending();

  auto b = *p.buyer.session(id);
  auto s = *p.seller.session(id);
  CHECK(b.state == State::accepted);
  CHECK(s.state == State::accepted);
  CHECK(*b.agreement_hash == h);
  CHECK(b.round_count == s.round_count);
  CHECK(crypto::to_hex(h) ==
        crypto::to_hex(crypto::sha256(std::string_view(
            canonical_json(Json{{"item", "groceries"}, {"price", 41}})))));

  p.buyer.commit(id, "commitment-1");
  p.seller.commit(id, "commitment-1");
  CHECK(p.buyer.session(id)->state == State::committed);
  p.buyer.dispute(id);
  CHECK(p.buyer.session(id)->state == State::disputed);
}

TEST_CASE("replicas agree on rejection") {
  Pair p;
  auto id = p.buyer.start("seller", {{"price", 100}});
  p.transport.deliver_pending();
  p.seller.reject(id, "too expensive");
  p.transport.deliver_pending();
  CHECK(p.buyer.session(id)->state == State::rejected);
  CHECK(p.seller.session(id)->state == State::rejected);
  CHECK(p.buyer.session(id)->reject_reason == "too expensive");
}

TEST_CASE("replay, tamper and unknown session") {
  Pair p;
  auto id = p.buyer.start("seller", {{"price", 5}});
  p.transport.deliver_pending();
  auto packets = p.transport.sent();
  REQUIRE(packets.size() == 1);
  CHECK(code_of([&] { p.seller.receive(packets[0]); }) == Errc::replay_detected);

  auto tampered = packets[0];
  tampered.envelope.message_id = "11111111-1111-4111-8111-111111111111";
  CHECK(code_of([&] { p.seller.receive(tampered); }) == Errc::decrypt_failure);

  // A counter for a session the seller never saw.
  p.buyer.counter(id, {{"price", 6}});
  auto counter_packet = p.transport.sent().back();
  Pair other;
  other.seller.register_peer("buyer", p.buyer.public_key());
  CHECK(code_of([&] { other.seller.receive(counter_packet); }) == Errc::unknown_session);
}

TEST_CASE("transport failure rolls back the local transition") {
  Pair p;
  auto id = p.buyer.start("seller", {{"price", 5}});
  p.transport.deliver_pending();
  p.transport.set_fail_sends(true);
  CHECK(code_of([&] { p.seller.counter(id, {{"price", 4}}); }) == Errc::transport_failure);
  CHECK(p.seller.session(id)->state == State::offer_received);
  CHECK(p.seller.session(id)->round_count == 1);
  p.transport.set_fail_sends(false);
  p.seller.counter(id, {{"price", 4}});
  CHECK(p.seller.session(id)->state == State::countering);
}

TEST_CASE("session expiry is enforced on the receiving side") {
  Pair p;
  auto id = p.buyer.start("seller", {{"price", 5}});
  p.transport.deliver_pending();
  p.now = kT0 + constants::kNegotiationTtlMs;
  CHECK(code_of([&] { p.seller.accept(id); }) == Errc::session_expired);
}

TEST_CASE("loopback HTTP transport") {
  HttpTransport http;
  std::int64_t now = kT0;
  auto clock = [&] { return now; };
  NegotiationProtocol buyer("buyer", crypto::derive_contextual_keypair(root(), crypto::Curve::x25519, "h:b:"),
                            http, clock);
  NegotiationProtocol seller("seller", crypto::derive_contextual_keypair(root(), crypto::Curve::x25519, "h:s:"),
                             http, clock);
  buyer.register_peer("seller", seller.public_key());
  seller.register_peer("buyer", buyer.public_key());
  HttpInbox buyer_inbox(buyer), seller_inbox(seller);
  http.add_route("buyer", "127.0.0.1", buyer_inbox.start());
  http.add_route("seller", "127.0.0.1", seller_inbox.start());

  auto id = buyer.start("seller", {{"price", 7}});
  CHECK(seller.session(id)->state == State::offer_received);
  auto h = seller.accept(id);
  CHECK(buyer.session(id)->state == State::accepted);
  CHECK(*buyer.session(id)->agreement_hash == h);
  // Both replicas are accepted; a further counter is refused locally.
  CHECK(code_of([&] { buyer.counter(id, {{"price", 8}}); }) == Errc::invalid_transition);
}
