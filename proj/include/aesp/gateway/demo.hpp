#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/crypto/canonical_json.hpp"

namespace aesp::gateway {

struct DemoEvent {
  std::int64_t at = 0;  // simulated ms epoch
  std::string actor;
  std::string kind;
  Json detail;

  Json to_json() const;
  /// "+MM:SS actor kind {detail}" relative to `start`.
  std::string to_text(std::int64_t start) const;
};

struct DemoResult {
  std::string name;
  std::int64_t start = 0;
  std::vector<DemoEvent> events;
  /// Every step ended the way the scenario expects.
  bool ok = false;
  std::vector<std::string> failures;

  Json to_json() const;
};

/// "grocery", "cloud", "nft".
std::vector<std::string> demo_names();

/// Runs one scenario end to end against an in-memory stack with a scripted
/// owner answering reviews. `on_event` sees events as they happen.
/// Errors: invalid_argument for an unknown name.
DemoResult run_demo(std::string_view name, const std::function<void(const DemoEvent&)>& on_event = {});

}  // namespace aesp::gateway
