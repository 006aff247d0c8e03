#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aesp/constants.hpp"
#include "aesp/crypto/canonical_json.hpp"
#include "aesp/crypto/random.hpp"
#include "aesp/privacy/addresses.hpp"

namespace aesp::privacy {

/// t = base * (1 - rho + 2 rho r), rounded to ms and kept inside
/// [(1-rho) base, (1+rho) base). Errors: invalid_argument unless
/// 0 <= rho < 1 and 0 <= r < 1.
std::int64_t next_consolidation_delay(std::int64_t base_ms, double jitter_ratio, double r);

/// for i = n-1 down to 1: j = uniform [0, i]; swap(a[i], a[j]).
template <typename T>
void fisher_yates_shuffle(std::vector<T>& items, crypto::RandomSource& rng) {
  if (items.size() < 2) return;
  for (std::size_t i = items.size() - 1; i >= 1; --i) {
    auto j = static_cast<std::size_t>(crypto::uniform_below(rng, i + 1));
    using std::swap;
    swap(items[i], items[j]);
  }
}

struct ConsolidationOptions {
  std::size_t batch_size = constants::kConsolidationBatchSize;
  std::int64_t base_interval_ms = constants::kConsolidationIntervalMs;
  double jitter_ratio = constants::kConsolidationJitter;
  std::int64_t min_batch_delay_ms = constants::kInterBatchDelayMinMs;
  std::int64_t max_batch_delay_ms = constants::kInterBatchDelayMaxMs;
  bool shuffle = true;
  bool jitter = true;
  bool batched = true;  // false: one batch, no delays
};

struct ConsolidationPlan {
  std::vector<std::vector<std::string>> batches;
  std::vector<std::int64_t> inter_batch_delays_ms;  // batches.size() - 1 entries
  std::int64_t scheduled_at = 0;

  /// Start time of each batch.
  std::vector<std::int64_t> batch_times() const;
  Json to_json() const;
};

/// Shuffles, chunks and schedules. scheduled_at = now + jittered interval
/// (or the plain interval when jitter is off).
ConsolidationPlan plan_consolidation(std::vector<std::string> addresses, crypto::RandomSource& rng,
                                     std::int64_t now, const ConsolidationOptions& options = {});

/// Checks every address is spent in the pool, then plans.
/// Errors: wrong_state, invalid_argument (unknown address).
ConsolidationPlan plan_consolidation(const AddressPool& pool, std::vector<std::string> addresses,
                                     crypto::RandomSource& rng, std::int64_t now,
                                     const ConsolidationOptions& options = {});

/// Marks every planned address consolidated, batch by batch.
void execute_plan(AddressPool& pool, const ConsolidationPlan& plan);

}  // namespace aesp::privacy
