#pragma once

#include <string>
#include <vector>

#include "aesp/eval/bench.hpp"
#include "aesp/eval/gate.hpp"
#include "aesp/eval/linkability.hpp"

namespace aesp::eval {

// Pass lines for the evaluation runs. Each returns human-readable reasons;
// empty means the run passed.

inline constexpr double kMinFullBlockRate = 0.90;
inline constexpr double kMaxFalsePositiveRate = 0.05;
inline constexpr double kMaxEndToEndMedianMs = 200.0;
/// "close to 1" for the unprotected linkage rate.
inline constexpr double kMinUnprotectedLinkage = 0.95;

/// FULL auto-blocks at least 90% of attacks, every single-condition stratum
/// completely, and flags at most 5% of legitimate traffic.
std::vector<std::string> full_gate_failures(const SecurityReport& full);

/// Reports in B0, B1, B2, B3 order: B0 blocks nothing and attack blocking
/// never decreases.
std::vector<std::string> monotonicity_failures(const std::vector<SecurityReport>& baselines);

/// Every ablation lowers the block rate and no stratum gains from it.
std::vector<std::string> ablation_failures(const AblationReport& report);

std::vector<std::string> latency_failures(const LatencyReport& report);

/// none > jitter_only > full at the configured epsilon, none close to 1.
std::vector<std::string> linkability_failures(const LinkabilityReport& report);

}  // namespace aesp::eval
