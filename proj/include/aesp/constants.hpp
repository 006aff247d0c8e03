#pragma once

#include <cstdint>
#include <string_view>

// Protocol constants. Every module reads its defaults from here so that the
// values can be audited in one place.
namespace aesp::constants {

inline constexpr std::string_view kHkdfInfoPrefix = "ACEGF-REV32-V1-";
inline constexpr std::string_view kIdentityRootLabel = "acegf:identity:root";
inline constexpr std::string_view kNegotiationKeyLabel = "aesp:negotiation:v1";
inline constexpr std::string_view kAuditKeyContext = "audit:tags:v1";

inline constexpr std::uint32_t kArgon2MemoryBytes = 4u * 1024u * 1024u;
inline constexpr std::uint32_t kArgon2Iterations = 3;
inline constexpr std::uint32_t kArgon2Parallelism = 1;

inline constexpr int kMaxHierarchyDepth = 5;

inline constexpr int kRankAutoPayment = 1;
inline constexpr int kRankNegotiation = 2;
inline constexpr int kRankCommitment = 3;
inline constexpr int kRankFull = 10;

inline constexpr int kMaxNegotiationRounds = 10;
inline constexpr std::int64_t kNegotiationTtlMs = 24LL * 60 * 60 * 1000;

inline constexpr std::int64_t kReviewDeadlineMs = 30LL * 60 * 1000;

inline constexpr int kAddressPoolSize = 5;
inline constexpr std::int64_t kConsolidationIntervalMs = 4LL * 60 * 60 * 1000;
inline constexpr double kConsolidationJitter = 0.30;
inline constexpr int kConsolidationBatchSize = 5;
inline constexpr std::int64_t kInterBatchDelayMinMs = 10LL * 60 * 1000;
inline constexpr std::int64_t kInterBatchDelayMaxMs = 60LL * 60 * 1000;

inline constexpr int kAuditBatchThreshold = 50;
inline constexpr std::int64_t kAuditTimeWindowMs = 5LL * 60 * 1000;

inline constexpr std::string_view kEip712DomainName = "YalletAgentCommitment";
inline constexpr std::string_view kEip712DomainVersion = "1";

// Amounts are integer micro-units of the settlement currency.
inline constexpr std::int64_t kMicrosPerUnit = 1'000'000;

}  // namespace aesp::constants
