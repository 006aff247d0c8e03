#include "aesp/identity/hierarchy.hpp"

#include <algorithm>
#include <mutex>

#include "aesp/error.hpp"

namespace aesp::identity {

HierarchyNode AgentHierarchy::add_child(const std::string& parent_id, const std::string& agent_id,
                                        const CapabilitySet& capabilities) {
  std::unique_lock lock(mu_);
  if (agent_id == kRootId || nodes_.count(agent_id) > 0) {
    throw Error(Errc::duplicate_agent, "agent already in hierarchy: " + agent_id);
  }
  int parent_depth = 0;
  CapabilitySet parent_caps = all_capabilities();
  if (parent_id != kRootId) {
    auto it = nodes_.find(parent_id);
    if (it == nodes_.end()) throw Error(Errc::unknown_parent, "unknown parent: " + parent_id);
    parent_depth = it->second.depth;
    parent_caps = it->second.capabilities;
  }
  if (parent_depth + 1 > max_depth_) {
    throw Error(Errc::depth_exceeded,
                "hierarchy depth " + std::to_string(parent_depth + 1) + " exceeds " +
                    std::to_string(max_depth_));
  }
  if (!std::includes(parent_caps.begin(), parent_caps.end(), capabilities.begin(),
                     capabilities.end())) {
    throw Error(Errc::capability_escalation, "child requests capabilities its parent lacks");
  }
  HierarchyNode node{agent_id, parent_id, parent_depth + 1, capabilities};
  nodes_.emplace(agent_id, node);
  return node;
}

std::vector<std::string> AgentHierarchy::escalation_chain(const std::string& agent_id) const {
  std::shared_lock lock(mu_);
  std::vector<std::string> chain;
  std::string cur = agent_id;
  while (cur != kRootId) {
    auto it = nodes_.find(cur);
    if (it == nodes_.end()) throw Error(Errc::unknown_agent, "unknown agent: " + cur);
    chain.push_back(cur);
    cur = it->second.parent_id;
  }
  chain.push_back(kRootId);
  return chain;
}

std::optional<HierarchyNode> AgentHierarchy::find(const std::string& agent_id) const {
  std::shared_lock lock(mu_);
  auto it = nodes_.find(agent_id);
  if (it == nodes_.end()) return std::nullopt;
  return it->second;
}

void AgentHierarchy::remove(const std::string& agent_id) {
  std::unique_lock lock(mu_);
  auto it = nodes_.find(agent_id);
  if (it == nodes_.end()) throw Error(Errc::unknown_agent, "unknown agent: " + agent_id);
  for (const auto& [id, node] : nodes_) {
    if (node.parent_id == agent_id) {
      throw Error(Errc::invalid_argument, "agent still has children: " + agent_id);
    }
  }
  nodes_.erase(it);
}

std::vector<HierarchyNode> AgentHierarchy::nodes() const {
  std::shared_lock lock(mu_);
  std::vector<HierarchyNode> out;
  for (const auto& [id, node] : nodes_) out.push_back(node);
  return out;
}

std::size_t AgentHierarchy::size() const {
  std::shared_lock lock(mu_);
  return nodes_.size();
}

}  // namespace aesp::identity
