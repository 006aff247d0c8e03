#include "aesp/privacy/consolidation.hpp"

#include <algorithm>
#include <cmath>

#include "aesp/error.hpp"

namespace aesp::privacy {

std::int64_t next_consolidation_delay(std::int64_t base_ms, double jitter_ratio, double r) {
  if (!(jitter_ratio >= 0.0 && jitter_ratio < 1.0)) {
    throw Error(Errc::invalid_argument, "jitter ratio must be in [0, 1)");
  }
  if (!(r >= 0.0 && r < 1.0)) throw Error(Errc::invalid_argument, "draw must be in [0, 1)");
  if (base_ms < 0) throw Error(Errc::invalid_argument, "base interval must be non-negative");
  const double b = static_cast<double>(base_ms);
  auto t = std::llround(b * (1.0 - jitter_ratio + 2.0 * jitter_ratio * r));
  if (jitter_ratio == 0.0) return base_ms;
  // rounding can land a hair outside the half-open interval
  const auto lo = static_cast<std::int64_t>(std::ceil(b * (1.0 - jitter_ratio) - 1e-6));
  const auto hi = static_cast<std::int64_t>(std::ceil(b * (1.0 + jitter_ratio) - 1e-6));
  if (t < lo) t = lo;
  if (t >= hi) t = hi - 1;
  return t;
}

std::vector<std::int64_t> ConsolidationPlan::batch_times() const {
  std::vector<std::int64_t> out;
  std::int64_t t = scheduled_at;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (i > 0) t += inter_batch_delays_ms[i - 1];
    out.push_back(t);
  }
  return out;
}

Json ConsolidationPlan::to_json() const {
  return Json{{"batches", batches},
              {"inter_batch_delays_ms", inter_batch_delays_ms},
              {"scheduled_at", scheduled_at}};
}

ConsolidationPlan plan_consolidation(std::vector<std::string> addresses, crypto::RandomSource& rng,
                                     std::int64_t now, const ConsolidationOptions& options) {
  if (options.batch_size == 0) throw Error(Errc::invalid_argument, "batch size must be positive");
  if (options.min_batch_delay_ms > options.max_batch_delay_ms) {
    throw Error(Errc::invalid_argument, "inter-batch delay range is empty");
  }
  if (options.shuffle) fisher_yates_shuffle(addresses, rng);

  ConsolidationPlan plan;
  plan.scheduled_at =
      now + (options.jitter ? next_consolidation_delay(options.base_interval_ms, options.jitter_ratio,
                                                       crypto::uniform_unit(rng))
                            : options.base_interval_ms);
  if (addresses.empty()) return plan;
  const std::size_t size = options.batched ? options.batch_size : addresses.size();
  for (std::size_t i = 0; i < addresses.size(); i += size) {
    auto end = std::min(addresses.size(), i + size);
    plan.batches.emplace_back(addresses.begin() + static_cast<std::ptrdiff_t>(i),
                              addresses.begin() + static_cast<std::ptrdiff_t>(end));
  }
  for (std::size_t i = 1; i < plan.batches.size(); ++i) {
    plan.inter_batch_delays_ms.push_back(
        crypto::uniform_int(rng, options.min_batch_delay_ms, options.max_batch_delay_ms));
  }
  return plan;
}

ConsolidationPlan plan_consolidation(const AddressPool& pool, std::vector<std::string> addresses,
                                     crypto::RandomSource& rng, std::int64_t now,
                                     const ConsolidationOptions& options) {
  for (const auto& a : addresses) {
    auto rec = pool.find(a);
    if (!rec) throw Error(Errc::invalid_argument, "unknown pool address " + a);
    if (rec->status != AddressStatus::spent) {
      throw Error(Errc::wrong_state, "address " + a + " is " + std::string(to_string(rec->status)) +
                                         ", only spent addresses consolidate");
    }
  }
  return plan_consolidation(std::move(addresses), rng, now, options);
}

void execute_plan(AddressPool& pool, const ConsolidationPlan& plan) {
  for (const auto& batch : plan.batches) {
    for (const auto& a : batch) pool.mark_consolidated(a);
  }
}

}  // namespace aesp::privacy
