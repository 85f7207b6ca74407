#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace conex {

using json = nlohmann::json;

/// Malformed input text (space file, rules file, trace, journal line).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a structural invariant.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamKind { boolean, integer, floating, categorical, string };

/// Categorical and string parameters both hold std::string.
using Value = std::variant<bool, std::int64_t, double, std::string>;

std::string_view kind_name(ParamKind kind);
ParamKind kind_from_name(std::string_view name);

/// Canonical text form. Doubles use the shortest representation that
/// round-trips exactly.
std::string to_text(const Value& value);

json to_json(const Value& value);

/// Converts a JSON scalar into a Value of the given kind. Integral JSON
/// numbers are accepted for float parameters; throws SchemaError on a
/// type mismatch.
Value value_from_json(const json& j, ParamKind kind);

/// Inverse of to_text for a known kind.
Value parse_value(std::string_view text, ParamKind kind);

/// Numeric view used by arithmetic rules: booleans map to 0/1, strings
/// have none.
std::optional<double> numeric(const Value& value);

bool kind_matches(const Value& value, ParamKind kind);

}  // namespace conex
