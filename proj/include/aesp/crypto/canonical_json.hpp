#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace aesp {

using Json = nlohmann::json;

/// Deterministic JSON: object keys sorted by UTF-16 code unit at every level,
/// no insignificant whitespace, integral numbers without exponent, strings
/// escaped the way ECMAScript JSON.stringify escapes them.
///
/// Throws Error(not_serializable) for NaN/Infinity, binary values, or
/// strings that are not valid UTF-8.
std::string canonical_json(const Json& value);

/// Parses strict JSON; throws Error(parse_error) on malformed input.
Json parse_json(std::string_view text);

}  // namespace aesp
