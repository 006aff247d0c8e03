#include "aesp/gateway/demo.hpp"

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "aesp/commitment/commitment.hpp"
#include "aesp/constants.hpp"
#include "aesp/error.hpp"
#include "aesp/gateway/gateway.hpp"
#include "aesp/identity/identity.hpp"
#include "aesp/negotiation/protocol.hpp"
#include "aesp/negotiation/transport.hpp"

namespace aesp::gateway {

namespace {

constexpr std::int64_t kStart = 1773655200000;  // 2026-03-16T10:00Z
constexpr std::int64_t kMinute = 60'000;
constexpr std::int64_t kUnit = constants::kMicrosPerUnit;
constexpr const char* kUsdc = "0xA0b86991c6218b36c1d19D4a2e9Eb0cE3606eB48";

crypto::IdentityRoot demo_root(std::uint8_t fill, const std::string& who) {
  return crypto::derive_identity_root({crypto::Bytes(32, fill), "demo-" + who});
}

class Trace {
 public:
  Trace(DemoResult& result, const std::function<void(const DemoEvent&)>& sink) : result_(result), sink_(sink) {}

  void add(std::int64_t at, std::string actor, std::string kind, Json detail = Json::object()) {
    std::lock_guard lock(mu_);
    DemoEvent e{at, std::move(actor), std::move(kind), std::move(detail)};
    result_.events.push_back(e);
    if (sink_) sink_(e);
  }

  void expect(bool cond, const std::string& what) {
    std::lock_guard lock(mu_);
    if (!cond) result_.failures.push_back(what);
  }

  /// Mirrors review queue events into the trace. Only appends, so it is
  /// safe as a synchronous queue listener. The trace outlives the gateway.
  void watch(Gateway& gw) {
    gw.reviews().subscribe([this](const review::ReviewEvent& e) {
      Json d{{"request_id", e.request_id.substr(0, 8)}};
      if (e.type == review::ReviewEventType::request_created) {
        d["tier"] = e.payload.value("required_tier", "");
        d["reasons"] = e.payload.value("violation_reasons", Json::array());
      } else if (e.payload.is_object() && e.payload.contains("verdict")) {
        d["verdict"] = e.payload["verdict"];
        d["biometric_confirmed"] = e.payload.value("biometric_confirmed", false);
      }
      add(e.timestamp, "review-queue", std::string(review::to_string(e.type)), d);
    });
  }

 private:
  DemoResult& result_;
  const std::function<void(const DemoEvent&)>& sink_;
  std::mutex mu_;
};

using Decider = std::function<void(const review::ReviewRequest&)>;

/// Runs `call` while a scripted owner answers each new pending review with
/// the next decider. Leftover deciders are dropped once `call` returns.
template <typename Call>
auto with_owner(Gateway& gw, Trace& trace, std::vector<Decider> script, Call&& call) {
  std::atomic<bool> done{false};
  std::thread owner([&] {
    std::set<std::string> seen;
    for (auto& decide : script) {
      std::optional<review::ReviewRequest> next;
      while (!done && !next) {
        for (const auto& r : gw.reviews().pending()) {
          if (!seen.count(r.id)) {
            next = r;
            break;
          }
        }
        if (!next) std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
      if (!next) return;
      seen.insert(next->id);
      try {
        decide(*next);
      } catch (const std::exception& e) {
        trace.expect(false, std::string("owner script failed: ") + e.what());
      }
    }
  });
  struct Join {
    std::atomic<bool>& done;
    std::thread& t;
    ~Join() {
      done = true;
      t.join();
    }
  } join{done, owner};
  return call();
}

review::ReviewResponse owner_says(review::ReviewVerdict v, bool biometric = false) {
  review::ReviewResponse r;
  r.verdict = v;
  r.biometric_confirmed = biometric;
  r.responder = "owner-phone";
  return r;
}

Json summary(const AuthorizeOutcome& o) {
  Json failed = Json::array();
  for (const auto& e : o.decision.evaluations) {
    for (auto c : e.failed_checks) failed.push_back(policy::to_string(c));
  }
  Json j{{"status", to_string(o.status)},
         {"amount_units", static_cast<double>(o.action.amount) / kUnit},
         {"method", o.action.method},
         {"failed_checks", failed},
         {"reason", o.reason}};
  if (o.ephemeral_address) j["ephemeral_address"] = *o.ephemeral_address;
  if (o.signature) j["signature"] = crypto::to_hex(o.signature->bytes).substr(0, 16) + "...";
  return j;
}

policy::ActionRequest payment(const std::string& agent, const std::string& label, double units,
                              const std::string& to, const std::string& chain, const std::string& method,
                              std::int64_t now) {
  policy::ActionRequest a;
  a.id = label;
  a.agent_id = agent;
  a.amount = static_cast<std::int64_t>(units * kUnit);
  a.to = to;
  a.chain = chain;
  a.method = method;
  a.timestamp = now;
  a.current_balance = 1'000 * kUnit;
  return a;
}

std::string settlement_address(const crypto::IdentityRoot& root) {
  return commitment::contextual_address(root, "settlement:");
}

std::string price_micro(double units) { return std::to_string(static_cast<std::int64_t>(units * kUnit)); }

/// Two negotiation endpoints sharing an in-memory transport and clock.
struct Table {
  negotiation::InMemoryTransport transport;
  negotiation::NegotiationProtocol buyer;
  negotiation::NegotiationProtocol seller;

  Table(const crypto::IdentityRoot& b_root, const std::string& b_id, const crypto::IdentityRoot& s_root,
        const std::string& s_id, std::int64_t& now)
      : buyer(b_id, crypto::derive_contextual_keypair(b_root, crypto::Curve::x25519, "negotiation:" + b_id + ":"),
              transport, [&now] { return now; }),
        seller(s_id, crypto::derive_contextual_keypair(s_root, crypto::Curve::x25519, "negotiation:" + s_id + ":"),
               transport, [&now] { return now; }) {
    transport.attach(buyer);
    transport.attach(seller);
    buyer.register_peer(s_id, seller.public_key());
    seller.register_peer(b_id, buyer.public_key());
  }
};

/// Builds, proposes and dual-signs a commitment bound to an agreement.
commitment::CommitmentRecord sign_deal(Trace& trace, std::int64_t now, const std::string& id,
                                       const crypto::IdentityRoot& buyer_root,
                                       const crypto::IdentityRoot& seller_root,
                                       const crypto::IdentityRoot& arbiter_root, const std::string& item,
                                       double units, const crypto::Hash32& agreement) {
  using commitment::Role;
  commitment::CommitmentValue v;
  v.buyer_agent = commitment::contextual_address(buyer_root, commitment::signing_context(id, Role::buyer));
  v.seller_agent = commitment::contextual_address(seller_root, commitment::signing_context(id, Role::seller));
  v.item = item;
  v.price = price_micro(units);
  v.currency = kUsdc;
  v.delivery_deadline = std::to_string(now / 1000 + 86'400);
  v.arbitrator = commitment::contextual_address(arbiter_root, "arbitration:");
  v.escrow_required = true;
  v.nonce = commitment::random_nonce();
  auto r = commitment::propose(commitment::build(8453, v, agreement, id));
  trace.add(now, "buyer-agent", "commitment.proposed",
            {{"id", id}, {"hash", crypto::to_hex(r.commitment_hash).substr(0, 16)}, {"price", v.price}});
  r = commitment::sign_as(r, Role::buyer, buyer_root, commitment::signing_context(id, Role::buyer));
  trace.add(now, "buyer-agent", "commitment.signed", {{"role", "buyer"}, {"state", to_string(r.state)}});
  r = commitment::sign_as(r, Role::seller, seller_root, commitment::signing_context(id, Role::seller));
  trace.add(now, "seller-agent", "commitment.signed", {{"role", "seller"}, {"state", to_string(r.state)}});
  trace.expect(commitment::verify_signatures(r), "commitment signatures verify");
  return r;
}

commitment::CommitmentRecord step(Trace& trace, std::int64_t now, const std::string& actor,
                                  const commitment::CommitmentRecord& r, commitment::LifecycleEvent e,
                                  const commitment::CommitmentMetadata& m = {}) {
  auto next = commitment::advance(r, e, m);
  trace.add(now, actor, "commitment." + std::string(to_string(e)), {{"state", to_string(next.state)}});
  return next;
}

void grocery(Trace& trace) {
  std::int64_t now = kStart;
  auto owner_root = demo_root(11, "household");
  auto grocer_root = demo_root(12, "grocer");
  auto courier_root = demo_root(13, "courier");

  auto owner_key = identity::derive_owner_keypair(owner_root);
  auto agent = identity::derive_agent(owner_root, 0);
  auto grocer = identity::derive_agent(grocer_root, 0);
  const auto shop = settlement_address(grocer_root);
  const auto courier = settlement_address(courier_root);

  policy::Policy p;
  p.id = "groceries";
  p.agent_id = agent.agent_id;
  p.owner_xid = owner_key.public_key;
  p.scope = policy::Scope::commitment;
  p.conditions.max_amount_per_tx = 100 * kUnit;
  p.conditions.max_amount_per_day = 200 * kUnit;
  p.conditions.allow_list_addresses = {shop};
  p.conditions.allow_list_chains = {"base"};
  p.conditions.allow_list_methods = {"pay_invoice", "transfer"};
  p.conditions.time_window = policy::TimeWindow::parse("08:00", "22:00");
  p.created_at = now - 7 * 86'400'000LL;
  p.expires_at = now + 90 * 86'400'000LL;

  auto cert = identity::issue_certificate(
      owner_key, agent, {identity::Capability::payment, identity::Capability::negotiation,
                         identity::Capability::commitment},
      p, 100 * kUnit, {"base"}, 30 * 86'400'000LL, now);
  auto status = identity::verify_certificate(cert, owner_key.public_key, now);
  trace.add(now, "owner", "identity.certificate_issued",
            {{"agent", agent.did.substr(0, 24) + "..."}, {"verify", to_string(status)}});
  trace.expect(status == identity::CertificateStatus::valid, "certificate verifies");

  Gateway gw(owner_root);
  trace.watch(gw);
  gw.register_agent(agent.agent_id, {p});

  Table table(owner_root, agent.agent_id, grocer_root, grocer.agent_id, now);
  auto session = table.buyer.start(grocer.agent_id, {{"item", "weekly basket"}, {"price_units", 48}});
  table.transport.deliver_pending();
  trace.add(now, "buyer-agent", "negotiation.offer", {{"price_units", 48}});
  now += kMinute;
  table.seller.counter(session, {{"item", "weekly basket"}, {"price_units", 46}});
  table.transport.deliver_pending();
  trace.add(now, "seller-agent", "negotiation.counter", {{"price_units", 46}});
  now += kMinute;
  auto agreement = table.buyer.accept(session);
  table.transport.deliver_pending();
  trace.add(now, "buyer-agent", "negotiation.accepted",
            {{"agreement_hash", crypto::to_hex(agreement).substr(0, 16)},
             {"seller_state", to_string(table.seller.session(session)->state)}});

  auto deal = sign_deal(trace, now, "order-1001", owner_root, grocer_root, owner_root, "weekly basket", 46,
                        agreement);
  table.buyer.commit(session, deal.id);
  table.seller.commit(session, deal.id);

  now += kMinute;
  auto pay = gw.authorize(payment(agent.agent_id, "escrow-order-1001", 46, shop, "base", "pay_invoice", now),
                          privacy::PrivacyLevel::isolated, now);
  trace.add(now, "gateway", "authorize", summary(pay));
  trace.expect(pay.status == AuthorizeStatus::executed && !pay.review, "in-policy payment runs unattended");

  deal = step(trace, now, "buyer-agent", deal, commitment::LifecycleEvent::escrow_funded,
              {pay.decision_id, std::nullopt, std::nullopt});
  now += 90 * kMinute;
  deal = step(trace, now, "seller-agent", deal, commitment::LifecycleEvent::delivered,
              {std::nullopt, "photo-proof-7c1e", std::nullopt});
  deal = step(trace, now, "buyer-agent", deal, commitment::LifecycleEvent::released,
              {std::nullopt, std::nullopt, "release-1001"});
  trace.expect(deal.state == commitment::CommitmentState::completed, "order completes");

  // the courier is not on the allowlist, so the tip goes to the owner
  now += kMinute;
  auto tip = with_owner(gw, trace,
                        {[&](const review::ReviewRequest& r) {
                          gw.reviews().respond(r.id, owner_says(review::ReviewVerdict::approve), now + 20'000);
                        }},
                        [&] {
                          return gw.authorize(payment(agent.agent_id, "tip-1001", 4, courier, "base", "transfer", now),
                                              privacy::PrivacyLevel::isolated, now);
                        });
  trace.add(now + 20'000, "gateway", "authorize", summary(tip));
  trace.expect(tip.status == AuthorizeStatus::executed && tip.review, "tip runs after owner approval");
  trace.expect(gw.sovereignty().violations == 0, "sovereignty holds");
}

void cloud(Trace& trace) {
  std::int64_t now = kStart;
  auto owner_root = demo_root(21, "startup");
  auto agent = identity::derive_agent(owner_root, 0);
  const auto provider = settlement_address(demo_root(22, "cloud-provider"));

  policy::Policy p;
  p.id = "compute";
  p.agent_id = agent.agent_id;
  p.scope = policy::Scope::auto_payment;
  p.conditions.max_amount_per_tx = 50 * kUnit;
  p.conditions.max_amount_per_day = 120 * kUnit;
  p.conditions.allow_list_addresses = {provider};
  p.conditions.allow_list_chains = {"base"};
  p.conditions.allow_list_methods = {"pay_invoice"};
  p.conditions.min_balance_after = 20 * kUnit;
  p.created_at = now - 86'400'000LL;
  p.expires_at = now + 30 * 86'400'000LL;

  Gateway gw(owner_root);
  trace.watch(gw);
  gw.register_agent(agent.agent_id, {p});
  trace.add(now, "owner", "policy.registered",
            {{"per_tx_units", 50}, {"per_day_units", 120}, {"scope", to_string(p.scope)}});

  auto invoice = [&](int n, double units) {
    return payment(agent.agent_id, "gpu-invoice-" + std::to_string(n), units, provider, "base", "pay_invoice", now);
  };
  for (int i = 1; i <= 2; ++i) {
    auto out = gw.authorize(invoice(i, 45), privacy::PrivacyLevel::basic, now);
    trace.add(now, "gateway", "authorize", summary(out));
    trace.expect(out.status == AuthorizeStatus::executed, "invoice within budget runs");
    now += 60 * kMinute;
  }

  auto over = with_owner(gw, trace,
                         {[&](const review::ReviewRequest& r) {
                           gw.reviews().respond(r.id, owner_says(review::ReviewVerdict::reject), now + 60'000);
                         }},
                         [&] { return gw.authorize(invoice(3, 45), privacy::PrivacyLevel::basic, now); });
  trace.add(now + 60'000, "gateway", "authorize", summary(over));
  trace.expect(over.status == AuthorizeStatus::rejected, "over-budget invoice is held and rejected");

  // owner raises the daily budget; the classification asks for biometrics
  now += 5 * kMinute;
  auto raised = p;
  raised.conditions.max_amount_per_day = 300 * kUnit;
  auto change = with_owner(
      gw, trace,
      {[&](const review::ReviewRequest& r) {
        try {
          gw.reviews().respond(r.id, owner_says(review::ReviewVerdict::approve), now + 30'000);
          trace.expect(false, "plain approve must not pass a biometric review");
        } catch (const Error& e) {
          trace.add(now + 30'000, "owner", "review.refused", {{"code", to_string(e.code())}});
        }
        gw.reviews().respond(r.id, owner_says(review::ReviewVerdict::approve, true), now + 45'000);
      }},
      [&] { return gw.propose_policy_change(p, raised, now); });
  trace.add(now + 45'000, "gateway", "policy.change", change.to_json());
  trace.expect(change.accepted && change.report.required_approval == policy::ApprovalLevel::biometric,
               "budget increase lands with biometric approval");

  now += 10 * kMinute;
  auto retry = gw.authorize(invoice(3, 45), privacy::PrivacyLevel::basic, now);
  trace.add(now, "gateway", "authorize", summary(retry));
  trace.expect(retry.status == AuthorizeStatus::executed, "invoice runs under the raised budget");

  // unexpected spend pattern: owner pulls the brake
  now += 30 * kMinute;
  gw.freeze(agent.agent_id, now);
  trace.add(now, "owner", "agent.frozen", {{"agent", agent.agent_id.substr(0, 12)}});
  auto blocked = gw.authorize(invoice(4, 10), privacy::PrivacyLevel::basic, now);
  trace.add(now, "gateway", "authorize", summary(blocked));
  trace.expect(blocked.status == AuthorizeStatus::frozen, "frozen agent cannot pay");
  now += 20 * kMinute;
  gw.unfreeze(agent.agent_id);
  trace.add(now, "owner", "agent.unfrozen", {{"agent", agent.agent_id.substr(0, 12)}});
  auto resumed = gw.authorize(invoice(4, 10), privacy::PrivacyLevel::basic, now);
  trace.add(now, "gateway", "authorize", summary(resumed));
  trace.expect(resumed.status == AuthorizeStatus::executed, "payments resume after unfreeze");
  trace.add(now, "gateway", "budget", gw.budget_json(agent.agent_id, now));
  trace.expect(gw.sovereignty().violations == 0, "sovereignty holds");
}

void nft(Trace& trace) {
  std::int64_t now = kStart;
  auto collector_root = demo_root(31, "collector");
  auto artist_root = demo_root(32, "artist");
  auto arbiter_root = demo_root(33, "arbiter");
  auto agent = identity::derive_agent(collector_root, 0);
  auto artist = identity::derive_agent(artist_root, 0);
  const auto market = settlement_address(demo_root(34, "marketplace"));

  policy::Policy p;
  p.id = "collecting";
  p.agent_id = agent.agent_id;
  p.scope = policy::Scope::commitment;
  p.conditions.max_amount_per_tx = 200 * kUnit;
  p.conditions.max_amount_per_month = 1'000 * kUnit;
  p.conditions.allow_list_addresses = {market};
  p.conditions.allow_list_chains = {"ethereum"};
  p.conditions.allow_list_methods = {"purchase"};
  p.created_at = now - 86'400'000LL;
  p.expires_at = now + 30 * 86'400'000LL;

  Gateway gw(collector_root);
  trace.watch(gw);
  gw.register_agent(agent.agent_id, {p});

  Table table(collector_root, agent.agent_id, artist_root, artist.agent_id, now);
  auto first = table.buyer.start(artist.agent_id, {{"token", "genesis #17"}, {"price_units", 240}});
  table.transport.deliver_pending();
  trace.add(now, "buyer-agent", "negotiation.offer", {{"price_units", 240}});
  now += kMinute;
  table.seller.counter(first, {{"token", "genesis #17"}, {"price_units", 250}});
  table.transport.deliver_pending();
  trace.add(now, "seller-agent", "negotiation.counter", {{"price_units", 250}});

  // before accepting, the agent clears the price with the gateway; 250 is
  // over the per-purchase cap and the owner cuts the bid instead of approving
  now += kMinute;
  auto buy = with_owner(
      gw, trace,
      {[&](const review::ReviewRequest& r) {
        auto m = owner_says(review::ReviewVerdict::modify);
        m.modified_action = payment(agent.agent_id, "genesis-17-capped", 190, market, "ethereum", "purchase", now);
        gw.reviews().respond(r.id, m, now + 120'000);
      }},
      [&] {
        return gw.authorize(payment(agent.agent_id, "genesis-17", 250, market, "ethereum", "purchase", now),
                            privacy::PrivacyLevel::isolated, now);
      });
  trace.add(now + 120'000, "gateway", "authorize", summary(buy));
  trace.expect(buy.status == AuthorizeStatus::executed && buy.decision.verdict == policy::Verdict::approved,
               "modified bid passes the gate on re-entry");

  now += 5 * kMinute;
  table.buyer.counter(first, {{"token", "genesis #17"}, {"price_units", 190}});
  table.transport.deliver_pending();
  trace.add(now, "buyer-agent", "negotiation.counter", {{"price_units", 190}});
  auto agreed = table.seller.accept(first);
  table.transport.deliver_pending();
  trace.add(now, "seller-agent", "negotiation.accepted",
            {{"agreement_hash", crypto::to_hex(agreed).substr(0, 16)},
             {"buyer_state", to_string(table.buyer.session(first)->state)}});

  auto deal = sign_deal(trace, now, "nft-genesis-17", collector_root, artist_root, arbiter_root, "genesis #17",
                        190, agreed);
  table.buyer.commit(first, deal.id);
  deal = step(trace, now, "buyer-agent", deal, commitment::LifecycleEvent::escrow_funded,
              {buy.decision_id, std::nullopt, std::nullopt});
  now += 60 * kMinute;
  deal = step(trace, now, "seller-agent", deal, commitment::LifecycleEvent::delivered,
              {std::nullopt, "token-transfer-9ab2", std::nullopt});
  // metadata hash does not match the listing: the buyer escalates to the arbiter
  deal = step(trace, now, "buyer-agent", deal, commitment::LifecycleEvent::dispute);
  table.buyer.dispute(first);
  trace.add(now, "buyer-agent", "negotiation.disputed",
            {{"state", to_string(table.buyer.session(first)->state)}});
  trace.expect(deal.state == commitment::CommitmentState::disputed, "dispute reaches the arbiter");
  trace.expect(gw.sovereignty().violations == 0, "sovereignty holds");
}

}  // namespace

Json DemoEvent::to_json() const {
  return Json{{"at", at}, {"actor", actor}, {"kind", kind}, {"detail", detail}};
}

std::string DemoEvent::to_text(std::int64_t start) const {
  const auto s = (at - start) / 1000;
  char clock[32];
  std::snprintf(clock, sizeof clock, "+%02" PRId64 ":%02" PRId64 ":%02" PRId64, s / 3600, (s / 60) % 60, s % 60);
  char head[96];
  std::snprintf(head, sizeof head, "%s  %-13s %-30s ", clock, actor.c_str(), kind.c_str());
  return head + canonical_json(detail);
}

Json DemoResult::to_json() const {
  Json evs = Json::array();
  for (const auto& e : events) evs.push_back(e.to_json());
  return Json{{"demo", name}, {"start", start}, {"ok", ok}, {"failures", failures}, {"events", evs}};
}

std::vector<std::string> demo_names() { return {"grocery", "cloud", "nft"}; }

DemoResult run_demo(std::string_view name, const std::function<void(const DemoEvent&)>& on_event) {
  DemoResult result;
  result.name = std::string(name);
  result.start = kStart;
  {
    Trace trace(result, on_event);
    if (name == "grocery") grocery(trace);
    else if (name == "cloud") cloud(trace);
    else if (name == "nft") nft(trace);
    else throw Error(Errc::invalid_argument, "unknown demo " + std::string(name));
  }
  result.ok = result.failures.empty();
  return result;
}

}  // namespace aesp::gateway
