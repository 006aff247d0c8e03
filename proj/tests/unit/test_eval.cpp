#include <doctest.h>

#include <algorithm>
#include <set>

#include "aesp/error.hpp"
#include "aesp/eval/bench.hpp"
#include "aesp/eval/corpus.hpp"
#include "aesp/eval/gate.hpp"
#include "aesp/eval/linkability.hpp"

using namespace aesp;
using namespace aesp::eval;
using policy::Check;

namespace {

const Corpus& corpus42() {
  static const Corpus c = generate_corpus(42);
  return c;
}

policy::CheckMask only(Check c) { return 1u << (static_cast<int>(c) - 1); }

}  // namespace

TEST_CASE("corpus has the stratified shape") {
  const auto& c = corpus42();
  CHECK(c.requests.size() == 1500);
  CHECK(c.count(Label::attack_single) == 950);
  CHECK(c.count(Label::attack_aggregate) == 50);
  CHECK(c.count(Label::legitimate) == 500);

  auto sizes = stratum_sizes(42, 950);
  std::size_t big = 0, small = 0;
  for (const auto& [s, n] : sizes) {
    if (n == 119) ++big;
    if (n == 118) ++small;
  }
  CHECK(big == 6);
  CHECK(small == 2);
  std::map<Check, std::size_t> seen;
  for (const auto& r : c.requests) {
    if (r.label == Label::attack_single) ++seen[*r.stratum];
    else CHECK_FALSE(r.stratum.has_value());
  }
  CHECK(seen == sizes);

  for (std::size_t i = 1; i < c.requests.size(); ++i) {
    CHECK(c.requests[i - 1].request.timestamp <= c.requests[i].request.timestamp);
  }
}

TEST_CASE("corpus generation is a pure function of the seed") {
  auto a = canonical_json(generate_corpus(7).to_json());
  auto b = canonical_json(generate_corpus(7).to_json());
  CHECK(a == b);
  CHECK(a != canonical_json(generate_corpus(8).to_json()));
  // round trip through the file format
  auto back = Corpus::from_json(parse_json(a));
  CHECK(canonical_json(back.to_json()) == a);
  CHECK_THROWS_AS(Corpus::from_json(Json{{"seed", 1}}), Error);
}

TEST_CASE("reference policy carries the evaluation values") {
  auto p = reference_policy();
  const auto& c = p.conditions;
  const std::int64_t U = constants::kMicrosPerUnit;
  CHECK(*c.max_amount_per_tx == 100 * U);
  CHECK(*c.max_amount_per_day == 500 * U);
  CHECK(*c.max_amount_per_week == 2000 * U);
  CHECK(*c.max_amount_per_month == 5000 * U);
  CHECK(c.time_window->start_text() == "09:00");
  CHECK(c.time_window->end_text() == "21:00");
  CHECK(c.min_balance_after == 10 * U);
  CHECK(c.require_review_first_pay);
  CHECK(c.allow_list_addresses.size() == 10);
  CHECK(std::set<std::string>(c.allow_list_addresses.begin(), c.allow_list_addresses.end()).size() == 10);
  CHECK(c.allow_list_chains.size() == 3);
  CHECK(c.allow_list_methods.size() == 4);
}

TEST_CASE("every single-condition attack fails its own stratum check") {
  for (std::uint64_t seed : {42ull, 1ull, 2ull}) {
    auto c = generate_corpus(seed);
    auto ledger = c.seeded_ledger();
    for (const auto& item : c.requests) {
      const auto& r = item.request;
      std::vector<policy::Policy> pol{c.policy_for(r.agent_id)};
      if (item.label == Label::attack_single) {
        policy::EvaluateOptions o;
        o.checks = only(*item.stratum);
        auto d = policy::evaluate(r, pol, ledger, r.timestamp, o);
        REQUIRE(d.verdict == policy::Verdict::review_required);
        CHECK(d.first_failed_check() == item.stratum);
      } else {
        // legitimate and aggregate requests pass every check on their own
        auto d = policy::evaluate(r, pol, ledger, r.timestamp);
        CHECK(d.verdict == policy::Verdict::approved);
      }
    }
  }
}

TEST_CASE("legitimate amounts follow the clamped log-normal") {
  const auto& c = corpus42();
  std::vector<double> units;
  for (const auto& r : c.requests) {
    if (r.label != Label::legitimate) continue;
    CHECK(r.request.amount >= 10'000);
    CHECK(r.request.amount <= 100'000'000);
    units.push_back(static_cast<double>(r.request.amount) / 1e6);
  }
  // median of lognormal(ln 5, 1) is 5 units; 500 draws put the sample
  // median well inside [4, 6]
  auto med = quantile(units, 0.5);
  CHECK(med > 4.0);
  CHECK(med < 6.0);
}

TEST_CASE("gate replay matches the independent oracle on seed 42") {
  // expected counts from tests/oracles/gate_oracle.py on generate_corpus(42)
  const auto& c = corpus42();
  auto b0 = run_gate(GateConfig::standard(GateId::B0), c);
  CHECK(b0.attacks.auto_blocked == 0);
  CHECK(b0.false_positive_rate() == 0.0);
  CHECK(run_gate(GateConfig::standard(GateId::B1), c).attacks.auto_blocked == 119);
  CHECK(run_gate(GateConfig::standard(GateId::B2), c).attacks.auto_blocked == 237);

  auto b3 = run_gate(GateConfig::standard(GateId::B3), c);
  CHECK(b3.attacks.auto_blocked == 965);
  CHECK(b3.attacks.auto_approved == 35);
  CHECK(b3.aggregate.auto_blocked == 15);
  CHECK(b3.legitimate.auto_approved == 500);
  CHECK(b3.per_check_attribution.at(Check::budget) == 133);
  CHECK(b3.per_check_attribution.at(Check::time_window) == 118);
  for (const auto& [s, n] : b3.per_stratum) CHECK(n.auto_blocked == n.total);

  auto full = run_gate(GateConfig::standard(GateId::FULL), c, HumanPolicy::optimal);
  CHECK(full.attacks.auto_blocked == 950);
  CHECK(full.attacks.escalated_rejected == 25);
  CHECK(full.attacks.auto_approved == 25);
  CHECK(full.legitimate.auto_approved == 500);

  auto approve = run_gate(GateConfig::standard(GateId::FULL), c, HumanPolicy::approve_all);
  CHECK(approve.attacks.auto_blocked == 965);
  CHECK(approve.attacks.escalated_approved == 10);
  auto reject = run_gate(GateConfig::standard(GateId::FULL), c, HumanPolicy::reject_all);
  CHECK(reject.attacks.escalated_rejected == 25);
  CHECK(reject.legitimate.auto_approved == 500);
}

TEST_CASE("report arithmetic adds up") {
  const auto& c = corpus42();
  for (auto g : {GateId::B0, GateId::B1, GateId::B2, GateId::B3, GateId::FULL}) {
    for (auto h : {HumanPolicy::approve_all, HumanPolicy::reject_all, HumanPolicy::optimal}) {
      auto r = run_gate(GateConfig::standard(g), c, h);
      CHECK(r.attacks.total == 1000);
      CHECK(r.legitimate.total == 500);
      CHECK(r.attacks.auto_blocked + r.attacks.escalated() + r.attacks.auto_approved == r.attacks.total);
      CHECK(r.auto_blocked_rate() + r.escalation_load_rate() + r.passed_rate() == doctest::Approx(1.0));
      std::size_t strata = r.aggregate.total;
      for (const auto& [s, n] : r.per_stratum) strata += n.total;
      CHECK(strata == 1000);
      std::size_t attributed = 0;
      for (const auto& [k, n] : r.per_check_attribution) attributed += n;
      CHECK(attributed == r.attacks.auto_blocked + r.legitimate.auto_blocked);
      CHECK(r.outcomes.size() == c.requests.size());
      if (g != GateId::FULL) CHECK(r.attacks.escalated() == 0);
    }
  }
}

TEST_CASE("baselines are monotone and FULL clears its thresholds across seeds") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    auto c = generate_corpus(seed);
    double prev = -1.0;
    for (auto g : {GateId::B0, GateId::B1, GateId::B2, GateId::B3}) {
      auto rate = run_gate(GateConfig::standard(g), c).auto_blocked_rate();
      CHECK(rate >= prev);
      prev = rate;
    }
    auto b1 = run_gate(GateConfig::standard(GateId::B1), c);
    CHECK(b1.per_stratum.at(Check::amount).auto_blocked == b1.per_stratum.at(Check::amount).total);

    auto full = run_gate(GateConfig::standard(GateId::FULL), c);
    CHECK(full.auto_blocked_rate() >= 0.90);
    CHECK(full.false_positive_rate() <= 0.05);
    for (const auto& [s, n] : full.per_stratum) CHECK(n.auto_blocked == n.total);
  }
}

TEST_CASE("routing first-payment failures to review moves that stratum out of auto-block") {
  const auto& c = corpus42();
  auto cfg = GateConfig::standard(GateId::FULL);
  cfg.escalate_checks = only(Check::first_payment);
  auto r = run_gate(cfg, c);
  const auto& s6 = r.per_stratum.at(Check::first_payment);
  CHECK(s6.auto_blocked == 0);
  CHECK(s6.escalated_rejected == s6.total);
  CHECK(r.attacks.auto_blocked == 950 - s6.total);
}

TEST_CASE("ablation matches the oracle and every delta is non-negative") {
  const auto& c = corpus42();
  auto ab = run_ablation(c);
  CHECK(ab.full_rate == doctest::Approx(0.965));
  // blocked counts with each check removed, from the oracle
  const std::map<int, std::size_t> blocked = {{1, 910}, {2, 847}, {3, 846}, {4, 846},
                                              {5, 846}, {6, 846}, {7, 846}, {8, 832}};
  REQUIRE(ab.rows.size() == 8);
  for (const auto& row : ab.rows) {
    CAPTURE(static_cast<int>(row.removed));
    CHECK(row.rate == doctest::Approx(blocked.at(static_cast<int>(row.removed)) / 1000.0));
    CHECK(row.delta > 0.0);
    for (const auto& [s, d] : row.stratum_delta) CHECK(d >= 0);
    CHECK(row.aggregate_delta >= 0);
  }
  // over-limit amounts above the day limit are still caught by the budget check
  CHECK(ab.rows[0].stratum_delta.at(Check::amount) == 55);
  CHECK(ab.rows[7].aggregate_delta == 15);
  CHECK(ab.delta_sum() <= ab.full_rate + 1e-12);
}

TEST_CASE("reports are byte-identical across runs") {
  const auto& c = corpus42();
  auto a = canonical_json(run_gate(GateConfig::standard(GateId::FULL), c).to_json());
  auto b = canonical_json(run_gate(GateConfig::standard(GateId::FULL), c).to_json());
  CHECK(a == b);
  CHECK(canonical_json(run_ablation(c).to_json()) == canonical_json(run_ablation(c).to_json()));
  CHECK(run_gate(GateConfig::standard(GateId::B3), c).to_markdown().find("| 8 budget |") != std::string::npos);
}

TEST_CASE("quantile matches numpy's default estimator") {
  // numpy.percentile([3,1,4,1,5,9,2,6,5,3.5], q)
  std::vector<double> v = {3, 1, 4, 1, 5, 9, 2, 6, 5, 3.5};
  CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
  CHECK(quantile(v, 0.25) == doctest::Approx(2.25));
  CHECK(quantile(v, 0.5) == doctest::Approx(3.75));
  CHECK(quantile(v, 0.75) == doctest::Approx(5.0));
  CHECK(quantile(v, 0.9) == doctest::Approx(6.3));
  CHECK(quantile(v, 1.0) == doctest::Approx(9.0));
  CHECK_THROWS_AS(quantile({}, 0.5), Error);
}

TEST_CASE("latency bench follows the measurement protocol") {
  BenchOptions too_few;
  too_few.trials = 4;
  CHECK_THROWS_AS(run_latency_bench({BenchOp::sha256_hash}, too_few), Error);
  too_few = {};
  too_few.iterations = 999;
  CHECK_THROWS_AS(run_latency_bench({BenchOp::sha256_hash}, too_few), Error);

  auto rep = run_latency_bench({BenchOp::policy_eval_8check, BenchOp::sha256_hash, BenchOp::end_to_end_authorize});
  REQUIRE(rep.ops.size() == 3);
  CHECK(rep.ops[0].op == BenchOp::policy_eval_8check);
  for (const auto& o : rep.ops) {
    CHECK(o.trials == 5);
    CHECK(o.iterations == 1000);
    CHECK(o.trial_medians_ms.size() == 5);
    CHECK(o.q1_ms <= o.median_ms);
    CHECK(o.median_ms <= o.q3_ms);
    CHECK(o.iqr_ms == doctest::Approx(o.q3_ms - o.q1_ms));
  }
  CHECK(rep.find(BenchOp::policy_eval_8check)->median_ms < 1.0);
  CHECK(rep.find(BenchOp::end_to_end_authorize)->median_ms < 200.0);
  CHECK(rep.find(BenchOp::budget_query) == nullptr);
  CHECK(rep.to_markdown().find("end_to_end_authorize") != std::string::npos);
  for (auto op : kAllBenchOps) CHECK(bench_op_from_string(to_string(op)) == op);
}

TEST_CASE("clustering adversary on a hand-built ledger") {
  using K = LedgerTx::Kind;
  // principal 0 owns a,b,c; principal 1 owns d,e
  std::vector<std::pair<std::string, std::size_t>> truth = {{"a", 0}, {"b", 0}, {"c", 0}, {"d", 1}, {"e", 1}};
  std::vector<LedgerTx> ledger = {
      {K::funding, 0, {"x"}, {"a"}},
      {K::consolidation, 1'000'000, {"a", "b"}, {"v0"}},
      {K::consolidation, 1'100'000, {"d"}, {"v1"}},  // 100 s after the first
      {K::consolidation, 9'000'000, {"c"}, {"v0"}},
      {K::consolidation, 20'000'000, {"e"}, {"v1"}},
  };
  // true pairs: 3 + 1 = 4
  auto ci = cluster_and_score(ledger, truth, -1);
  CHECK(ci.true_pairs == 4);
  CHECK(ci.linked_true_pairs == 1);  // a-b
  CHECK(ci.linked_pairs == 1);
  CHECK(ci.clusters == 4);
  auto t = cluster_and_score(ledger, truth, 5 * 60'000);  // {a,b,d} merge
  CHECK(t.linked_true_pairs == 1);
  CHECK(t.linked_pairs == 3);
  CHECK(t.precision() == doctest::Approx(1.0 / 3.0));
  auto wide = cluster_and_score(ledger, truth, 4 * 3'600'000);  // every gap is under 4 h
  CHECK(wide.linked_true_pairs == 4);
  CHECK(wide.linkage_rate() == doctest::Approx(1.0));
  CHECK(wide.clusters == 1);
}

TEST_CASE("countermeasures strictly reduce linkage across seeds") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    CAPTURE(seed);
    LinkabilityOptions o;
    o.seed = seed;
    auto rep = run_linkability(o);
    const auto& none = rep.get(LinkConfig::none);
    const auto& jit = rep.get(LinkConfig::jitter_only);
    const auto& full = rep.get(LinkConfig::full);
    CHECK(none.at_epsilon.linkage_rate() == doctest::Approx(1.0));
    CHECK(none.common_input_only.linkage_rate() == doctest::Approx(1.0));
    CHECK(none.at_epsilon.linkage_rate() > jit.at_epsilon.linkage_rate());
    CHECK(jit.at_epsilon.linkage_rate() > full.at_epsilon.linkage_rate());
    for (const auto* r : {&none, &jit, &full}) {
      CHECK(r->addresses == 1000);
      CHECK(r->unique_addresses);
      CHECK(r->at_epsilon.linkage_rate() >= 0.0);
      CHECK(r->at_epsilon.linkage_rate() <= 1.0);
      CHECK(r->sweep.size() == 4);
    }
    CHECK(none.consolidation_txs == 5);
    CHECK(full.consolidation_txs > jit.consolidation_txs);
  }
}

TEST_CASE("linkability ledger respects the batch plan") {
  LinkabilityOptions o;
  o.n_tx = 200;
  std::vector<LedgerTx> ledger;
  auto r = simulate_linkability(LinkConfig::full, o, &ledger);
  std::size_t funded = 0, swept = 0;
  for (const auto& tx : ledger) {
    if (tx.kind == LedgerTx::Kind::funding) ++funded;
    else {
      CHECK(tx.inputs.size() <= 5);
      CHECK(tx.outputs.size() == 1);
      swept += tx.inputs.size();
    }
  }
  CHECK(funded == 200);
  CHECK(swept == 200);
  CHECK(r.consolidation_txs == ledger.size() - funded);
  CHECK_THROWS_AS(simulate_linkability(LinkConfig::none, LinkabilityOptions{1, 0}), Error);
}
