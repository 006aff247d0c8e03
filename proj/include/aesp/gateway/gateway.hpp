#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/random.hpp"
#include "aesp/crypto/signing.hpp"
#include "aesp/policy/budget_ledger.hpp"
#include "aesp/policy/change.hpp"
#include "aesp/policy/engine.hpp"
#include "aesp/privacy/addresses.hpp"
#include "aesp/privacy/audit.hpp"
#include "aesp/review/review.hpp"
#include "aesp/storage/storage.hpp"

namespace aesp::gateway {

enum class AuthorizeStatus { executed, rejected, frozen, expired };
std::string_view to_string(AuthorizeStatus s) noexcept;

struct AuthorizeOutcome {
  AuthorizeStatus status = AuthorizeStatus::rejected;
  std::string decision_id;
  /// The action that was finally evaluated (the modified one after a modify).
  policy::ActionRequest action;
  policy::PolicyDecision decision;
  std::optional<review::ReviewResponse> review;
  std::vector<std::string> review_request_ids;
  std::optional<crypto::Signature> signature;
  std::optional<std::string> ephemeral_address;
  std::optional<std::string> tag_id;
  std::string reason;

  Json to_json() const;
};

struct GatewayOptions {
  std::int64_t review_deadline_ms = constants::kReviewDeadlineMs;
  int tz_offset_minutes = 0;
  review::Urgency urgency = review::Urgency::normal;
  privacy::ArchiveOptions archive;
};

struct PolicyChangeOutcome {
  bool accepted = false;
  policy::PolicyChangeReport report;
  std::string reason;

  Json to_json() const;
};

/// Process-wide tally used to assert that nothing executes without either
/// a passing policy decision or an approving human.
struct SovereigntyStats {
  std::uint64_t executed = 0;
  std::uint64_t by_policy = 0;
  std::uint64_t by_review = 0;
  std::uint64_t violations = 0;
};
SovereigntyStats global_sovereignty_stats();

/// The composition layer: policy gate, human review, address derivation,
/// authorization signing, spend accounting and audit tags.
class Gateway {
 public:
  explicit Gateway(crypto::IdentityRoot root,
                   std::shared_ptr<storage::StorageAdapter> storage = std::make_shared<storage::MemoryStorage>(),
                   GatewayOptions options = {}, crypto::RandomSource& rng = crypto::system_random(),
                   std::shared_ptr<privacy::ArchiveSink> sink = std::make_shared<privacy::MemoryArchiveSink>());
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Replaces the agent's policy set. Errors: invalid_argument when a policy
  /// belongs to another agent.
  void register_agent(const std::string& agent_id, std::vector<policy::Policy> policies);
  bool has_agent(const std::string& agent_id) const;
  std::vector<std::string> agent_ids() const;
  /// Errors: unknown_agent.
  std::vector<policy::Policy> policies(const std::string& agent_id) const;

  /// Blocks while the action waits for review. Errors: unknown_agent.
  AuthorizeOutcome authorize(const policy::ActionRequest& action, privacy::PrivacyLevel level,
                             std::int64_t now);

  /// Applies `updated` in place of the policy with the same id when the
  /// human response satisfies the required approval level.
  /// Errors: id_mismatch, unknown_agent.
  PolicyChangeOutcome apply_policy_change(const policy::Policy& current, const policy::Policy& updated,
                                          const std::optional<review::ReviewResponse>& human);
  /// Puts the change in front of a human at the tier its classification
  /// demands, blocks for the answer and applies it. Changes that need no
  /// approval apply at once. Errors: id_mismatch, unknown_agent.
  PolicyChangeOutcome propose_policy_change(const policy::Policy& current, const policy::Policy& updated,
                                            std::int64_t now);

  /// Errors: unknown_agent.
  void freeze(const std::string& agent_id, std::int64_t now);
  void unfreeze(const std::string& agent_id);
  bool is_frozen(const std::string& agent_id) const;

  /// Rolling totals with the tightest limits across the agent's policies.
  /// Errors: unknown_agent.
  Json budget_json(const std::string& agent_id, std::int64_t now) const;
  Json agent_json(const std::string& agent_id, std::int64_t now) const;

  std::size_t expire_sweep(std::int64_t now);

  review::ReviewQueue& reviews() noexcept { return reviews_; }
  const review::ReviewQueue& reviews() const noexcept { return reviews_; }
  const policy::BudgetLedger& ledger() const noexcept { return ledger_; }
  privacy::ContextTagManager& tags() noexcept { return tags_; }
  SovereigntyStats sovereignty() const;
  const crypto::IdentityRoot& root() const noexcept { return root_; }

 private:
  struct Agent {
    std::vector<policy::Policy> policies;
    std::unique_ptr<std::mutex> mu = std::make_unique<std::mutex>();
  };

  Agent& agent(const std::string& agent_id);
  const Agent& agent(const std::string& agent_id) const;
  AuthorizeOutcome run(const policy::ActionRequest& action, privacy::PrivacyLevel level, std::int64_t now,
                       bool reentry, AuthorizeOutcome out);
  void execute(AuthorizeOutcome& out, privacy::PrivacyLevel level, std::int64_t now);
  policy::EvaluateOptions eval_options() const;

  crypto::IdentityRoot root_;
  GatewayOptions options_;
  crypto::RandomSource& rng_;
  std::shared_ptr<privacy::ArchiveSink> sink_;
  review::ReviewQueue reviews_;
  policy::BudgetLedger ledger_;
  privacy::ContextTagManager tags_;

  mutable std::mutex agents_mu_;
  std::map<std::string, Agent> agents_;

  std::atomic<std::uint64_t> executed_{0}, by_policy_{0}, by_review_{0}, violations_{0};
};

}  // namespace aesp::gateway
