#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aesp/constants.hpp"
#include "aesp/identity/identity.hpp"

namespace aesp::identity {

/// Sentinel parent id standing for the human principal.
inline const std::string kRootId(64, '0');

struct HierarchyNode {
  std::string agent_id;
  std::string parent_id;
  int depth = 1;
  CapabilitySet capabilities;
};

/// Delegation forest under the human principal. Reads are concurrent,
/// mutations are serialized.
class AgentHierarchy {
 public:
  explicit AgentHierarchy(int max_depth = constants::kMaxHierarchyDepth) : max_depth_(max_depth) {}

  /// Errors: unknown_parent, depth_exceeded, capability_escalation,
  /// duplicate_agent.
  HierarchyNode add_child(const std::string& parent_id, const std::string& agent_id,
                          const CapabilitySet& capabilities);
  HierarchyNode add_child(const std::string& parent_id, const AgentIdentity& child,
                          const CapabilitySet& capabilities) {
    return add_child(parent_id, child.agent_id, capabilities);
  }

  /// [agent, parent, ..., kRootId]. Throws unknown_agent.
  std::vector<std::string> escalation_chain(const std::string& agent_id) const;

  std::optional<HierarchyNode> find(const std::string& agent_id) const;
  /// Removes a leaf; throws invalid_argument if it still has children.
  void remove(const std::string& agent_id);
  std::vector<HierarchyNode> nodes() const;
  std::size_t size() const;

 private:
  int max_depth_;
  mutable std::shared_mutex mu_;
  std::map<std::string, HierarchyNode> nodes_;
};

}  // namespace aesp::identity
