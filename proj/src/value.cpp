#include "conex/value.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace conex {

namespace {

constexpr std::array<std::string_view, 5> kKindNames = {
    "boolean", "integer", "float", "categorical", "string"};

}  // namespace

std::string_view kind_name(ParamKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

ParamKind kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ParamKind>(i);
  }
  if (name == "bool") return ParamKind::boolean;
  if (name == "int") return ParamKind::integer;
  if (name == "double") return ParamKind::floating;
  throw SchemaError("unknown parameter kind '" + std::string(name) + "'");
}

std::string to_text(const Value& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          std::array<char, 64> buf{};
          auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
          return std::string(buf.data(), end);
        } else {
          return v;
        }
      },
      value);
}

json to_json(const Value& value) {
  return std::visit([](const auto& v) { return json(v); }, value);
}

Value value_from_json(const json& j, ParamKind kind) {
  switch (kind) {
    case ParamKind::boolean:
      if (j.is_boolean()) return j.get<bool>();
      break;
    case ParamKind::integer:
      if (j.is_number_integer()) return j.get<std::int64_t>();
      if (j.is_number_float()) {
        double d = j.get<double>();
        if (std::isfinite(d) && std::nearbyint(d) == d) {
          return static_cast<std::int64_t>(d);
        }
      }
      break;
    case ParamKind::floating:
      if (j.is_number()) return j.get<double>();
      break;
    case ParamKind::categorical:
    case ParamKind::string:
      if (j.is_string()) return j.get<std::string>();
      break;
  }
  throw SchemaError("value " + j.dump() + " is not of kind " +
                    std::string(kind_name(kind)));
}

Value parse_value(std::string_view text, ParamKind kind) {
  switch (kind) {
    case ParamKind::boolean:
      if (text == "true" || text == "True" || text == "TRUE") return true;
      if (text == "false" || text == "False" || text == "FALSE") return false;
      break;
    case ParamKind::integer: {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc{} && ptr == text.data() + text.size()) return v;
      break;
    }
    case ParamKind::floating: {
      double v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc{} && ptr == text.data() + text.size()) return v;
      break;
    }
    case ParamKind::categorical:
    case ParamKind::string:
      return std::string(text);
  }
  throw ParseError("cannot read '" + std::string(text) + "' as " +
                   std::string(kind_name(kind)));
}

std::optional<double> numeric(const Value& value) {
  if (const auto* b = std::get_if<bool>(&value)) return *b ? 1.0 : 0.0;
  if (const auto* i = std::get_if<std::int64_t>(&value)) {
    return static_cast<double>(*i);
  }
  if (const auto* d = std::get_if<double>(&value)) return *d;
  return std::nullopt;
}

bool kind_matches(const Value& value, ParamKind kind) {
  switch (kind) {
    case ParamKind::boolean: return std::holds_alternative<bool>(value);
    case ParamKind::integer: return std::holds_alternative<std::int64_t>(value);
    case ParamKind::floating: return std::holds_alternative<double>(value);
    case ParamKind::categorical:
    case ParamKind::string: return std::holds_alternative<std::string>(value);
  }
  return false;
}

}  // namespace conex
