#include "aesp/eval/criteria.hpp"

#include <cstdio>

namespace aesp::eval {

namespace {

std::string fmt(const char* format, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

}  // namespace

std::vector<std::string> full_gate_failures(const SecurityReport& full) {
  std::vector<std::string> out;
  if (full.auto_blocked_rate() < kMinFullBlockRate) {
    out.push_back(fmt("auto-block rate %.4f below %.2f", full.auto_blocked_rate(), kMinFullBlockRate));
  }
  for (const auto& [check, n] : full.per_stratum) {
    if (n.auto_blocked != n.total) {
      out.push_back("stratum " + std::string(policy::to_string(check)) + " blocked " +
                    std::to_string(n.auto_blocked) + " of " + std::to_string(n.total));
    }
  }
  if (full.false_positive_rate() > kMaxFalsePositiveRate) {
    out.push_back(fmt("false-positive rate %.4f above %.2f", full.false_positive_rate(), kMaxFalsePositiveRate));
  }
  return out;
}

std::vector<std::string> monotonicity_failures(const std::vector<SecurityReport>& baselines) {
  std::vector<std::string> out;
  if (baselines.empty()) return {"no baseline reports"};
  if (baselines.front().attacks.auto_blocked != 0) {
    out.push_back(std::string(to_string(baselines.front().config.id)) + " blocks " +
                  std::to_string(baselines.front().attacks.auto_blocked) + " attacks");
  }
  for (std::size_t i = 1; i < baselines.size(); ++i) {
    const auto& a = baselines[i - 1];
    const auto& b = baselines[i];
    if (b.attacks.auto_blocked < a.attacks.auto_blocked) {
      out.push_back(std::string(to_string(b.config.id)) + " blocks fewer attacks than " +
                    std::string(to_string(a.config.id)));
    }
  }
  return out;
}

std::vector<std::string> ablation_failures(const AblationReport& report) {
  std::vector<std::string> out;
  for (const auto& row : report.rows) {
    const std::string name(policy::to_string(row.removed));
    if (row.delta <= 0.0) out.push_back("removing " + name + " does not lower the block rate");
    for (const auto& [s, d] : row.stratum_delta) {
      if (d < 0) out.push_back("removing " + name + " raises blocking in stratum " + std::string(policy::to_string(s)));
    }
    if (row.aggregate_delta < 0) out.push_back("removing " + name + " raises aggregate blocking");
  }
  if (report.rows.size() != 8) out.push_back("expected 8 ablation rows, got " + std::to_string(report.rows.size()));
  return out;
}

std::vector<std::string> latency_failures(const LatencyReport& report) {
  const auto* e2e = report.find(BenchOp::end_to_end_authorize);
  if (!e2e) return {"end_to_end_authorize was not measured"};
  if (e2e->median_ms >= kMaxEndToEndMedianMs) {
    return {fmt("end-to-end median %.3f ms not below %.0f ms", e2e->median_ms, kMaxEndToEndMedianMs)};
  }
  return {};
}

std::vector<std::string> linkability_failures(const LinkabilityReport& report) {
  std::vector<std::string> out;
  const double none = report.get(LinkConfig::none).at_epsilon.linkage_rate();
  const double jitter = report.get(LinkConfig::jitter_only).at_epsilon.linkage_rate();
  const double full = report.get(LinkConfig::full).at_epsilon.linkage_rate();
  if (!(none > jitter)) out.push_back(fmt("none %.4f not above jitter_only %.4f", none, jitter));
  if (!(jitter > full)) out.push_back(fmt("jitter_only %.4f not above full %.4f", jitter, full));
  if (none < kMinUnprotectedLinkage) {
    out.push_back(fmt("unprotected linkage %.4f below %.2f", none, kMinUnprotectedLinkage));
  }
  return out;
}

}  // namespace aesp::eval
