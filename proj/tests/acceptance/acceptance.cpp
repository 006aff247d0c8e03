// Acceptance run: one PASS/FAIL line per criterion, detail lines indented.
// Exits nonzero if any criterion fails.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "aesp/commitment/commitment.hpp"
#include "aesp/constants.hpp"
#include "aesp/error.hpp"
#include "aesp/eval/bench.hpp"
#include "aesp/eval/corpus.hpp"
#include "aesp/eval/criteria.hpp"
#include "aesp/eval/gate.hpp"
#include "aesp/eval/linkability.hpp"
#include "aesp/gateway/authorization.hpp"
#include "aesp/gateway/demo.hpp"
#include "aesp/gateway/gateway.hpp"
#include "aesp/identity/hierarchy.hpp"
#include "aesp/negotiation/fsm.hpp"
#include "aesp/privacy/addresses.hpp"
#include "aesp/privacy/audit.hpp"
#include "aesp/privacy/consolidation.hpp"
#include "aesp/review/review.hpp"

#ifndef AESP_UNIT_DIR
#error "AESP_UNIT_DIR must point at the unit test binaries"
#endif

using namespace aesp;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
  bool pass = true;
  std::vector<std::string> details;

  void fail(const std::string& why) {
    pass = false;
    details.push_back("FAILED: " + why);
  }
  void note(const std::string& what) { details.push_back(what); }
  void require(bool cond, const std::string& what) {
    if (!cond) fail(what);
  }
  void absorb(const std::vector<std::string>& failures) {
    for (const auto& f : failures) fail(f);
  }
};

int g_failed = 0;

void report(const std::string& name, const Result& r) {
  std::cout << (r.pass ? "PASS  " : "FAIL  ") << name << "\n";
  for (const auto& d : r.details) std::cout << "      " << d << "\n";
  std::cout.flush();
  if (!r.pass) ++g_failed;
}

/// Runs the criterion, turning an escaped exception into a failure.
void criterion(const std::string& name, const std::function<void(Result&)>& body) {
  Result r;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.fail(std::string("exception: ") + e.what());
  }
  report(name, r);
}

std::string pct(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.1f%%", v * 100);
  return b;
}

std::string num(double v, const char* fmt = "%.4f") {
  char b[64];
  std::snprintf(b, sizeof b, fmt, v);
  return b;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Runs a doctest binary restricted to the named cases and checks that
/// each pattern matched and everything passed. With `wildcard` the cases are
/// patterns and any non-zero count is accepted.
void run_unit_cases(Result& r, const std::string& label, const std::string& binary,
                    const std::vector<std::string>& cases, bool wildcard = false) {
  std::string filter;
  for (const auto& c : cases) filter += (filter.empty() ? "" : ",") + c;
  const std::string cmd = std::string(AESP_UNIT_DIR) + "/" + binary + " --no-colors=true -tc=\"" + filter + "\" 2>&1";
  std::string out;
  if (FILE* p = ::popen(cmd.c_str(), "r")) {
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int status = ::pclose(p);
    std::smatch m;
    static const std::regex summary(R"(test cases:\s*(\d+)\s*\|\s*(\d+) passed\s*\|\s*(\d+) failed)");
    if (!std::regex_search(out, m, summary)) {
      r.fail(label + ": no doctest summary from " + binary);
      return;
    }
    const auto ran = std::stoul(m[1]), passed = std::stoul(m[2]);
    const bool count_ok = wildcard ? ran > 0 : ran == cases.size();
    if (status != 0 || !count_ok || passed != ran) {
      r.fail(label + ": " + binary + " ran " + std::to_string(ran) + "/" + std::to_string(cases.size()) +
             " cases, " + std::to_string(passed) + " passed");
      return;
    }
    r.note(label + ": " + std::to_string(passed) + " case(s) in " + binary + " passed");
  } else {
    r.fail(label + ": cannot start " + binary);
  }
}

const eval::Corpus& corpus42() {
  static const eval::Corpus c = eval::generate_corpus(42);
  return c;
}

void h1(Result& r) {
  const auto t0 = Clock::now();
  auto corpus = eval::generate_corpus(42);
  auto full = eval::run_gate(eval::GateConfig::standard(eval::GateId::FULL), corpus);
  const double secs = seconds_since(t0);
  r.absorb(eval::full_gate_failures(full));
  r.require(full.attacks.total == 1000 && full.legitimate.total == 500, "corpus is 1000 attacks + 500 legitimate");
  r.require(secs < 10.0, "runtime " + num(secs, "%.2f") + " s not below 10 s");
  r.note("auto-blocked " + pct(full.auto_blocked_rate()) + " (>= 90%), false positives " +
         pct(full.false_positive_rate()) + " (<= 5%), escalation load " + pct(full.escalation_load_rate()) +
         ", passed " + pct(full.passed_rate()) + ", runtime " + num(secs, "%.2f") + " s");
  std::size_t single_blocked = 0, single_total = 0;
  for (const auto& [c, n] : full.per_stratum) {
    single_blocked += n.auto_blocked;
    single_total += n.total;
  }
  r.note("single-condition strata " + std::to_string(single_blocked) + "/" + std::to_string(single_total) +
         ", aggregate escalated " + std::to_string(full.aggregate.escalated()) + "/" +
         std::to_string(full.aggregate.total));
}

void monotonicity(Result& r) {
  std::vector<eval::SecurityReport> reports;
  std::string line;
  for (auto id : {eval::GateId::B0, eval::GateId::B1, eval::GateId::B2, eval::GateId::B3}) {
    reports.push_back(eval::run_gate(eval::GateConfig::standard(id), corpus42()));
    line += std::string(line.empty() ? "" : " <= ") + std::string(eval::to_string(id)) + " " +
            std::to_string(reports.back().attacks.auto_blocked);
  }
  r.absorb(eval::monotonicity_failures(reports));
  r.note("attacks auto-blocked: " + line);
  const auto& b1 = reports[1];
  const auto own = b1.per_stratum.at(policy::Check::amount).auto_blocked;
  r.note("B1: stratum-1 portion " + std::to_string(own) + ", incidental overlaps " +
         std::to_string(b1.attacks.auto_blocked - own));
  r.require(own == b1.per_stratum.at(policy::Check::amount).total, "B1 misses part of the amount stratum");
}

void ablation(Result& r) {
  const auto t0 = Clock::now();
  auto report = eval::run_ablation(corpus42());
  const double secs = seconds_since(t0);
  r.absorb(eval::ablation_failures(report));
  r.require(secs < 30.0, "runtime " + num(secs, "%.2f") + " s not below 30 s");
  for (const auto& row : report.rows) {
    r.note("without " + std::string(policy::to_string(row.removed)) + ": " + pct(row.rate) + " (delta " +
           pct(row.delta) + ", own stratum " + std::to_string(row.stratum_delta.at(row.removed)) +
           ", aggregate " + std::to_string(row.aggregate_delta) + ")");
  }
  r.note("runtime " + num(secs, "%.2f") + " s");
}

void h2(Result& r) {
  auto report = eval::run_latency_bench({eval::BenchOp::end_to_end_authorize});
  r.absorb(eval::latency_failures(report));
  const auto* e2e = report.find(eval::BenchOp::end_to_end_authorize);
  if (e2e) {
    r.note("end_to_end_authorize median " + num(e2e->median_ms) + " ms, IQR " + num(e2e->iqr_ms) + " ms over " +
           std::to_string(e2e->trials) + " x " + std::to_string(e2e->iterations) + " (100 warm-ups)");
  }
}

void unlinkability(Result& r) {
  for (std::uint64_t seed : {1, 2, 3}) {
    eval::LinkabilityOptions o;
    o.seed = seed;
    auto report = eval::run_linkability(o);
    for (const auto& f : eval::linkability_failures(report)) r.fail("seed " + std::to_string(seed) + ": " + f);
    r.note("seed " + std::to_string(seed) + ": none " + num(report.get(eval::LinkConfig::none).at_epsilon.linkage_rate()) +
           " > jitter_only " + num(report.get(eval::LinkConfig::jitter_only).at_epsilon.linkage_rate()) +
           " > full " + num(report.get(eval::LinkConfig::full).at_epsilon.linkage_rate()) + " (eps 5 min)");
  }
}

/// Many agents, random amounts and recipients, and a reviewer answering at
/// random; every executed outcome must trace back to an approval.
void sovereignty_stress(Result& r) {
  constexpr std::int64_t kT0 = 1773568800000;
  constexpr std::int64_t kUnit = constants::kMicrosPerUnit;
  const std::string shop = "0x3333333333333333333333333333333333333333";
  gateway::Gateway gw(crypto::derive_identity_root({crypto::Bytes(32, 5), "acceptance"}));
  const std::vector<std::string> agents{"alpha", "beta", "gamma"};
  for (const auto& a : agents) {
    policy::Policy p;
    p.id = "p-" + a;
    p.agent_id = a;
    p.conditions.max_amount_per_tx = 100 * kUnit;
    p.conditions.max_amount_per_day = 2'000 * kUnit;
    p.conditions.allow_list_addresses = {shop};
    p.created_at = kT0 - 1;
    p.expires_at = kT0 + 86'400'000;
    gw.register_agent(a, {p});
  }

  std::atomic<bool> done{false};
  std::thread reviewer([&] {
    std::mt19937_64 rng(7);
    while (!done) {
      for (const auto& req : gw.reviews().pending()) {
        review::ReviewResponse resp;
        resp.responder = "random";
        switch (rng() % 3) {
          case 0: resp.verdict = review::ReviewVerdict::approve; break;
          case 1: resp.verdict = review::ReviewVerdict::reject; break;
          default:
            resp.verdict = review::ReviewVerdict::modify;
            resp.modified_action = req.action;
            resp.modified_action->amount = static_cast<std::int64_t>(rng() % 200 + 1) * kUnit;
        }
        try {
          gw.reviews().respond(req.id, resp, kT0 + 1);
        } catch (const Error&) {
          // raced with another resolution; nothing to do
        }
      }
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
  });

  std::atomic<std::size_t> executed{0}, unapproved{0}, bad_sig{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < agents.size(); ++w) {
    workers.emplace_back([&, w] {
      std::mt19937_64 rng(100 + w);
      for (int i = 0; i < 60; ++i) {
        policy::ActionRequest a;
        a.id = agents[w] + "-" + std::to_string(i);
        a.agent_id = agents[w];
        a.amount = static_cast<std::int64_t>(rng() % 150 + 1) * kUnit;
        a.to = rng() % 4 == 0 ? "0x4444444444444444444444444444444444444444" : shop;
        a.chain = "base";
        a.method = "transfer";
        a.timestamp = kT0;
        a.current_balance = 100'000 * kUnit;
        auto out = gw.authorize(a, privacy::PrivacyLevel::isolated, kT0);
        if (out.status != gateway::AuthorizeStatus::executed) continue;
        ++executed;
        const bool by_policy = out.decision.verdict == policy::Verdict::approved;
        const bool by_human = out.review && out.review->verdict == review::ReviewVerdict::approve;
        if (!by_policy && !by_human) ++unapproved;
        if (!out.signature || !gateway::verify_authorization(gw.root(), out.action, out.decision_id, *out.signature)) {
          ++bad_sig;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  done = true;
  reviewer.join();

  auto s = gw.sovereignty();
  r.require(unapproved == 0, std::to_string(unapproved.load()) + " executed outcomes without approval");
  r.require(bad_sig == 0, std::to_string(bad_sig.load()) + " executed outcomes without a valid signature");
  r.require(s.executed == executed && s.by_policy + s.by_review == s.executed, "gateway tallies disagree");
  r.note("(g) randomized run: 180 requests, " + std::to_string(executed.load()) + " executed (" +
         std::to_string(s.by_policy) + " by policy, " + std::to_string(s.by_review) + " by review), 0 unapproved");
}

void property_suites(Result& r) {
  run_unit_cases(r, "(a) policy oracle equivalence", "test_policy",
                 {"evaluate agrees with the naive oracle on 1e4 random cases"});
  run_unit_cases(r, "(b) negotiation FSM 56 pairs / 13 legal", "test_negotiation",
                 {"exhaustive transition matrix*"});
  run_unit_cases(r, "(c) commitment lifecycle and dual signature", "test_commitment",
                 {"lifecycle table", "contextual signing and dual-signature necessity"});
  run_unit_cases(r, "(d) review exactly-once, tiers, freeze", "test_review",
                 {"concurrent submitters and responders resolve each request once",
                  "tier enforcement over verdict x tier x flag", "freeze cancels pending requests and persists",
                  "freeze survives a restart with file storage"});
  run_unit_cases(r, "(e) crypto vectors and context isolation", "test_crypto",
                 {"identity root", "golden derivation vectors", "contextual keypairs", "context isolation*",
                  "addresses", "RFC 8032 test 1"});
  run_unit_cases(r, "(f) jitter bounds and shuffle uniformity", "test_privacy",
                 {"consolidation delay", "fisher-yates"});
  run_unit_cases(r, "(g) gateway suite", "test_gateway", {"*"}, true);

  sovereignty_stress(r);
  for (const auto& name : gateway::demo_names()) {
    auto d = gateway::run_demo(name);
    r.require(d.ok, "demo " + name + " failed");
  }
  auto g = gateway::global_sovereignty_stats();
  r.require(g.violations == 0, std::to_string(g.violations) + " sovereignty violations in this process");
  r.note("(g) process-wide: " + std::to_string(g.executed) + " executed, " + std::to_string(g.violations) +
         " without approval");
}

void constants_table(Result& r) {
  namespace k = constants;
  auto eq = [&](auto got, auto want, const std::string& what) {
    if (got != want) r.fail(what);
  };
  eq(k::kMaxHierarchyDepth, 5, "hierarchy depth");
  eq(k::kRankAutoPayment, 1, "rank auto_payment");
  eq(k::kRankNegotiation, 2, "rank negotiation");
  eq(k::kRankCommitment, 3, "rank commitment");
  eq(k::kRankFull, 10, "rank full");
  eq(k::kMaxNegotiationRounds, 10, "negotiation rounds");
  eq(k::kNegotiationTtlMs, std::int64_t{24} * 3600 * 1000, "negotiation TTL");
  eq(k::kReviewDeadlineMs, std::int64_t{30} * 60 * 1000, "review deadline");
  eq(k::kAddressPoolSize, 5, "address pool size");
  eq(k::kConsolidationIntervalMs, std::int64_t{4} * 3600 * 1000, "consolidation interval");
  eq(k::kConsolidationJitter, 0.30, "consolidation jitter");
  eq(k::kConsolidationBatchSize, 5, "consolidation batch");
  eq(k::kInterBatchDelayMinMs, std::int64_t{10} * 60 * 1000, "inter-batch delay min");
  eq(k::kInterBatchDelayMaxMs, std::int64_t{60} * 60 * 1000, "inter-batch delay max");
  eq(k::kAuditBatchThreshold, 50, "audit batch threshold");
  eq(k::kAuditTimeWindowMs, std::int64_t{5} * 60 * 1000, "audit window");
  eq(k::kEip712DomainName, std::string_view("YalletAgentCommitment"), "EIP-712 domain name");
  eq(k::kEip712DomainVersion, std::string_view("1"), "EIP-712 domain version");
  eq(k::kArgon2MemoryBytes, std::uint32_t{4} * 1024 * 1024, "Argon2id memory");
  eq(k::kArgon2Iterations, std::uint32_t{3}, "Argon2id iterations");

  // the modules actually run with these values
  eq(policy::rank(policy::Scope::auto_payment), 1, "policy::rank(auto_payment)");
  eq(policy::rank(policy::Scope::full), 10, "policy::rank(full)");
  auto session = negotiation::create_session("s", "a", "b", 0);
  eq(session.max_rounds, 10, "session max_rounds");
  eq(session.ttl_ms, std::int64_t{86'400'000}, "session ttl");

  review::ReviewQueue queue;
  policy::ActionRequest a;
  a.id = "x";
  a.agent_id = "agent";
  auto t = queue.submit(a, {"probe"}, 1'000);
  eq(queue.find(t.id)->deadline, std::int64_t{1'000 + 1'800'000}, "review default deadline");

  auto root = crypto::derive_identity_root({crypto::Bytes(32, 4), "constants"});
  privacy::AddressPool pool(root);
  eq(pool.initialize("agent", "base", privacy::Direction::inbound), std::size_t{5}, "pool fill");

  privacy::ConsolidationOptions co;
  eq(co.batch_size, std::size_t{5}, "planner batch size");
  eq(co.base_interval_ms, std::int64_t{14'400'000}, "planner interval");
  eq(privacy::next_consolidation_delay(co.base_interval_ms, co.jitter_ratio, 0.0), std::int64_t{10'080'000},
     "jitter lower edge");
  eq(co.min_batch_delay_ms, std::int64_t{600'000}, "planner min inter-batch");
  eq(co.max_batch_delay_ms, std::int64_t{3'600'000}, "planner max inter-batch");

  privacy::ArchiveOptions ao;
  eq(ao.threshold, std::size_t{50}, "archive threshold");
  eq(ao.window_ms, std::int64_t{300'000}, "archive window");

  identity::AgentHierarchy h;
  std::string parent = identity::kRootId;
  bool depth_ok = true;
  for (int d = 1; d <= 6; ++d) {
    const std::string id = "node-" + std::to_string(d);
    try {
      h.add_child(parent, id, {identity::Capability::payment});
      if (d == 6) depth_ok = false;
    } catch (const Error&) {
      if (d != 6) depth_ok = false;
    }
    parent = id;
  }
  r.require(depth_ok, "hierarchy accepts exactly 5 levels");

  commitment::CommitmentValue v;
  v.buyer_agent = commitment::contextual_address(root, "buyer:");
  v.seller_agent = commitment::contextual_address(root, "seller:");
  v.arbitrator = commitment::contextual_address(root, "arbiter:");
  v.currency = v.seller_agent;
  v.item = "probe";
  v.price = "1";
  v.delivery_deadline = "1";
  v.nonce = "1";
  auto rec = commitment::build(1, v);
  eq(rec.domain.name, std::string("YalletAgentCommitment"), "commitment domain name");
  eq(rec.domain.version, std::string("1"), "commitment domain version");

  if (r.pass) r.note("20 table values and 15 module defaults agree");
}

}  // namespace

int main() {
  std::cout << "acceptance run\n";
  criterion("H1 security coverage: FULL >= 90% auto-blocked, strata 100%, FPR <= 5%, < 10 s", h1);
  criterion("Baseline monotonicity: B0 = 0 <= B1 <= B2 <= B3", monotonicity);
  criterion("Ablation attribution: every removal lowers blocking, stratum deltas >= 0, < 30 s", ablation);
  criterion("H2 latency: end-to-end authorize median < 200 ms", h2);
  criterion("Unlinkability ordering: none > jitter_only > full on seeds 1-3", unlinkability);
  criterion("Protocol property suites (a)-(g)", property_suites);
  criterion("Constants table", constants_table);
  std::cout << (g_failed == 0 ? "all criteria passed" : std::to_string(g_failed) + " criteria failed") << "\n";
  return g_failed == 0 ? 0 : 1;
}
