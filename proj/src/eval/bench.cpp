#include "aesp/eval/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "aesp/commitment/commitment.hpp"
#include "aesp/constants.hpp"
#include "aesp/crypto/hash.hpp"
#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/signing.hpp"
#include "aesp/error.hpp"
#include "aesp/eval/corpus.hpp"
#include "aesp/gateway/authorization.hpp"
#include "aesp/policy/engine.hpp"

namespace aesp::eval {

namespace {

constexpr std::int64_t U = constants::kMicrosPerUnit;

// keeps results observable so the timed work is not optimized away
volatile std::uint8_t g_sink = 0;

void consume(const crypto::Bytes& b) {
  if (!b.empty()) g_sink = static_cast<std::uint8_t>(g_sink ^ b.front());
}
template <std::size_t N>
void consume(const std::array<std::uint8_t, N>& b) {
  g_sink = static_cast<std::uint8_t>(g_sink ^ b[0]);
}

struct Fixture {
  crypto::IdentityRoot root;
  policy::Policy policy;
  policy::BudgetLedger ledger;
  policy::ActionRequest request;
  std::vector<policy::Policy> policies;
  crypto::DerivedKeypair ed;
  crypto::DerivedKeypair secp;
  commitment::CommitmentRecord record;
  crypto::Hash32 prk{};
  std::string message;
  std::uint64_t counter = 0;

  Fixture() {
    root = crypto::derive_identity_root({crypto::Bytes(32, 7), "bench"});
    policy = reference_policy();
    policy.id = "bench";
    policy.agent_id = "bench-agent";
    policies = {policy};
    const std::int64_t now = 1767618000000;  // 2026-01-05T13:00Z
    for (int i = 0; i < 50; ++i) ledger.record_spend("bench-agent", 2 * U, now - i * 3'600'000);
    ledger.mark_first_payment("bench-agent", policy.id);
    request.id = "bench-req";
    request.agent_id = "bench-agent";
    request.amount = 5 * U;
    request.to = policy.conditions.allow_list_addresses.back();
    request.chain = "base";
    request.method = "transfer";
    request.timestamp = now;
    request.current_balance = 1000 * U;
    ed = crypto::derive_contextual_keypair(root, crypto::Curve::ed25519, "bench:ed:");
    secp = crypto::derive_contextual_keypair(root, crypto::Curve::secp256k1, "bench:secp:");
    commitment::CommitmentValue v;
    v.buyer_agent = crypto::address_for(secp, crypto::AddressNamespace::evm);
    v.seller_agent = policy.conditions.allow_list_addresses[0];
    v.item = "bench item";
    v.price = "5000000";
    v.currency = policy.conditions.allow_list_addresses[1];
    v.delivery_deadline = "1767700000";
    v.arbitrator = policy.conditions.allow_list_addresses[2];
    v.escrow_required = true;
    v.nonce = "42";
    record = commitment::build(8453, v, std::nullopt, "bench-commitment");
    prk = crypto::hkdf_extract({}, crypto::as_bytes("bench root material"));
    message = gateway::authorization_message(request, "bench-decision");
  }

  std::function<void()> body(BenchOp op) {
    switch (op) {
      case BenchOp::policy_eval_8check:
        return [this] {
          auto d = policy::evaluate(request, policies, ledger, request.timestamp);
          g_sink = static_cast<std::uint8_t>(g_sink ^ static_cast<int>(d.verdict));
        };
      case BenchOp::budget_query:
        return [this] {
          auto t = ledger.rolling_totals("bench-agent", request.timestamp);
          g_sink = static_cast<std::uint8_t>(g_sink ^ (t.day & 0xff));
        };
      case BenchOp::ed25519_sign:
        return [this] { consume(crypto::sign(ed, crypto::as_bytes(message)).bytes); };
      case BenchOp::secp256k1_sign:
        return [this] {
          auto h = crypto::keccak256(message);
          consume(crypto::sign_digest(secp, h).bytes);
        };
      case BenchOp::eip712_sign:
        return [this] { consume(crypto::sign_digest(secp, commitment::eip712_digest(record)).bytes); };
      case BenchOp::hkdf_derive:
        return [this] {
          auto info = "ACEGF-REV32-V1-ed25519:bench:" + std::to_string(counter++);
          consume(crypto::hkdf_expand(prk, crypto::as_bytes(info), 32));
        };
      case BenchOp::sha256_hash:
        return [this] { consume(crypto::sha256(message)); };
      case BenchOp::end_to_end_authorize:
        return [this] {
          auto d = policy::evaluate(request, policies, ledger, request.timestamp);
          if (d.verdict != policy::Verdict::approved) throw Error(Errc::invalid_argument, "bench request rejected");
          consume(gateway::sign_authorization(root, request, "bench-" + std::to_string(counter++)).bytes);
        };
    }
    throw Error(Errc::invalid_argument, "unknown bench op");
  }
};

std::string fmt_ms(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string_view to_string(BenchOp op) noexcept {
  switch (op) {
    case BenchOp::policy_eval_8check: return "policy_eval_8check";
    case BenchOp::budget_query: return "budget_query";
    case BenchOp::ed25519_sign: return "ed25519_sign";
    case BenchOp::secp256k1_sign: return "secp256k1_sign";
    case BenchOp::eip712_sign: return "eip712_sign";
    case BenchOp::hkdf_derive: return "hkdf_derive";
    case BenchOp::sha256_hash: return "sha256_hash";
    case BenchOp::end_to_end_authorize: return "end_to_end_authorize";
  }
  return "?";
}

BenchOp bench_op_from_string(std::string_view s) {
  for (auto op : kAllBenchOps) {
    if (s == to_string(op)) return op;
  }
  throw Error(Errc::invalid_argument, "unknown bench op " + std::string(s));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(Errc::invalid_argument, "quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(Errc::invalid_argument, "quantile out of range");
  std::sort(values.begin(), values.end());
  double h = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

const OpLatency* LatencyReport::find(BenchOp op) const {
  for (const auto& o : ops) {
    if (o.op == op) return &o;
  }
  return nullptr;
}

Json LatencyReport::to_json() const {
  Json arr = Json::array();
  for (const auto& o : ops) {
    arr.push_back({{"op", to_string(o.op)},
                   {"median_ms", o.median_ms},
                   {"q1_ms", o.q1_ms},
                   {"q3_ms", o.q3_ms},
                   {"iqr_ms", o.iqr_ms},
                   {"trial_medians_ms", o.trial_medians_ms},
                   {"trials", o.trials},
                   {"iterations", o.iterations}});
  }
  return Json{{"warmup", options.warmup},
              {"iterations", options.iterations},
              {"trials", options.trials},
              {"ops", arr}};
}

std::string LatencyReport::to_markdown() const {
  std::string out = "### Latency (" + std::to_string(options.trials) + " trials x " +
                    std::to_string(options.iterations) + " iterations, " + std::to_string(options.warmup) +
                    " warm-ups)\n\n| op | median ms | IQR ms |\n|---|---|---|\n";
  for (const auto& o : ops) {
    out += "| " + std::string(to_string(o.op)) + " | " + fmt_ms(o.median_ms) + " | " + fmt_ms(o.iqr_ms) + " |\n";
  }
  return out;
}

LatencyReport run_latency_bench(const std::vector<BenchOp>& ops, const BenchOptions& options) {
  if (options.warmup < 100 || options.iterations < 1000 || options.trials < 5) {
    throw Error(Errc::invalid_argument, "bench protocol needs >= 100 warm-ups, >= 1000 iterations, >= 5 trials");
  }
  Fixture fx;
  LatencyReport report;
  report.options = options;
  using clock = std::chrono::steady_clock;
  for (auto op : ops) {
    auto fn = fx.body(op);
    OpLatency lat;
    lat.op = op;
    lat.trials = options.trials;
    lat.iterations = options.iterations;
    std::vector<double> all;
    all.reserve(options.trials * options.iterations);
    for (std::size_t t = 0; t < options.trials; ++t) {
      for (std::size_t i = 0; i < options.warmup; ++i) fn();
      std::vector<double> samples;
      samples.reserve(options.iterations);
      for (std::size_t i = 0; i < options.iterations; ++i) {
        auto t0 = clock::now();
        fn();
        auto t1 = clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      lat.trial_medians_ms.push_back(quantile(samples, 0.5));
      all.insert(all.end(), samples.begin(), samples.end());
    }
    lat.median_ms = quantile(all, 0.5);
    lat.q1_ms = quantile(all, 0.25);
    lat.q3_ms = quantile(all, 0.75);
    lat.iqr_ms = lat.q3_ms - lat.q1_ms;
    report.ops.push_back(std::move(lat));
  }
  return report;
}

}  // namespace aesp::eval
