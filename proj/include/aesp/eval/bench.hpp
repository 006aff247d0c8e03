#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/crypto/canonical_json.hpp"

namespace aesp::eval {

enum class BenchOp {
  policy_eval_8check,
  budget_query,
  ed25519_sign,
  secp256k1_sign,
  eip712_sign,
  hkdf_derive,
  sha256_hash,
  end_to_end_authorize,
};

inline constexpr BenchOp kAllBenchOps[] = {
    BenchOp::policy_eval_8check, BenchOp::budget_query, BenchOp::ed25519_sign,
    BenchOp::secp256k1_sign,     BenchOp::eip712_sign,  BenchOp::hkdf_derive,
    BenchOp::sha256_hash,        BenchOp::end_to_end_authorize};

std::string_view to_string(BenchOp op) noexcept;
BenchOp bench_op_from_string(std::string_view s);

struct BenchOptions {
  std::size_t warmup = 100;
  std::size_t iterations = 1000;  // per trial
  std::size_t trials = 5;
};

struct OpLatency {
  BenchOp op = BenchOp::policy_eval_8check;
  double median_ms = 0.0;
  double q1_ms = 0.0;
  double q3_ms = 0.0;
  double iqr_ms = 0.0;
  std::vector<double> trial_medians_ms;
  std::size_t trials = 0;
  std::size_t iterations = 0;  // per trial
};

struct LatencyReport {
  std::vector<OpLatency> ops;
  BenchOptions options;

  const OpLatency* find(BenchOp op) const;
  Json to_json() const;
  std::string to_markdown() const;
};

/// Linear-interpolation quantile (the "type 7" estimator) of unsorted data.
double quantile(std::vector<double> values, double q);

/// Each trial discards `warmup` iterations, then times every iteration
/// separately on the steady clock. Median and IQR are taken over all timed
/// iterations of all trials. Throws invalid_argument when the protocol
/// minimums (100 warm-ups, 1000 iterations, 5 trials) are not met.
LatencyReport run_latency_bench(const std::vector<BenchOp>& ops, const BenchOptions& options = {});

}  // namespace aesp::eval
