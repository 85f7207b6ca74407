#include "conex/validity.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "conex/digest.hpp"

namespace conex {

std::string_view rule_kind_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::range: return "range";
    case RuleKind::multiple_of: return "multiple_of";
    case RuleKind::enum_member: return "enum_member";
    case RuleKind::linear_inequality: return "linear_inequality";
    case RuleKind::ratio_bound: return "ratio_bound";
    case RuleKind::requires_: return "requires";
  }
  return "?";
}

namespace {

RuleKind rule_kind_from_name(const std::string& name, const std::string& id) {
  for (auto k : {RuleKind::range, RuleKind::multiple_of, RuleKind::enum_member,
                 RuleKind::linear_inequality, RuleKind::ratio_bound, RuleKind::requires_}) {
    if (rule_kind_name(k) == name) return k;
  }
  throw SchemaError("rule '" + id + "': unknown kind '" + name + "'");
}

bool is_numeric_kind(ParamKind k) {
  return k == ParamKind::boolean || k == ParamKind::integer || k == ParamKind::floating;
}

class RuleCompiler {
 public:
  RuleCompiler(const json& doc, const ConfigurationSpace& space, const ExternalLookup& env)
      : space_(space), env_(env) {
    if (doc.contains("externals")) {
      if (!doc["externals"].is_object()) throw SchemaError("'externals' must be an object");
      externals_ = doc["externals"];
    }
  }

  ConstraintRule compile(const json& entry) {
    if (!entry.is_object()) throw SchemaError("rule entry must be an object");
    ConstraintRule rule;
    rule.id = entry.value("id", std::string{});
    if (rule.id.empty()) throw SchemaError("rule without an 'id'");
    if (!entry.contains("kind") || !entry["kind"].is_string()) {
      throw SchemaError("rule '" + rule.id + "' has no 'kind'");
    }
    rule.kind = rule_kind_from_name(entry["kind"].get<std::string>(), rule.id);
    rule.message = entry.value("message", std::string{});
    if (!entry.contains("subjects") || !entry["subjects"].is_array() ||
        entry["subjects"].empty()) {
      throw SchemaError("rule '" + rule.id + "' needs a non-empty 'subjects' list");
    }
    for (const auto& s : entry["subjects"]) {
      if (!s.is_string()) throw SchemaError("rule '" + rule.id + "': subjects must be names");
      std::string name = s.get<std::string>();
      param(rule, name);
      rule.subjects.push_back(std::move(name));
    }

    auto require_numeric = [&] {
      for (const auto& s : rule.subjects) {
        if (!is_numeric_kind(param(rule, s).kind)) {
          throw SchemaError("rule '" + rule.id + "': subject '" + s + "' is not numeric");
        }
      }
    };

    switch (rule.kind) {
      case RuleKind::range:
        require_numeric();
        read_bounds(rule, entry);
        if (!rule.min && !rule.max) {
          throw SchemaError("rule '" + rule.id + "': range needs 'min' and/or 'max'");
        }
        break;
      case RuleKind::multiple_of:
        require_numeric();
        rule.modulus = number(rule, entry, "modulus");
        if (!(rule.modulus > 0)) throw SchemaError("rule '" + rule.id + "': modulus must be > 0");
        break;
      case RuleKind::enum_member:
        read_allowed(rule, entry, true);
        break;
      case RuleKind::linear_inequality:
        require_numeric();
        if (!entry.contains("coeffs") || !entry["coeffs"].is_array()) {
          throw SchemaError("rule '" + rule.id + "': linear_inequality needs 'coeffs'");
        }
        for (const auto& c : entry["coeffs"]) rule.coeffs.push_back(resolve(rule, c));
        if (rule.coeffs.size() != rule.subjects.size()) {
          throw SchemaError("rule '" + rule.id + "': need one coefficient per subject");
        }
        rule.bound = number(rule, entry, "bound");
        break;
      case RuleKind::ratio_bound:
        require_numeric();
        if (rule.subjects.size() != 2) {
          throw SchemaError("rule '" + rule.id + "': ratio_bound needs exactly two subjects");
        }
        rule.factor = number(rule, entry, "factor");
        break;
      case RuleKind::requires_: {
        if (!entry.contains("when") || !entry["when"].is_object() || entry["when"].empty()) {
          throw SchemaError("rule '" + rule.id + "': requires needs a 'when' object");
        }
        for (const auto& [name, raw] : entry["when"].items()) {
          const ParameterSpec& p = param(rule, name);
          rule.when.push_back({name, value_from_json(raw, p.kind)});
        }
        read_bounds(rule, entry);
        read_allowed(rule, entry, false);
        if ((rule.min || rule.max)) require_numeric();
        if (!rule.min && !rule.max && rule.allowed.empty()) {
          throw SchemaError("rule '" + rule.id + "': requires needs 'values' or 'min'/'max'");
        }
        break;
      }
    }
    if (rule.message.empty()) rule.message = "rule " + rule.id + " violated";
    return rule;
  }

 private:
  const ParameterSpec& param(const ConstraintRule& rule, const std::string& name) const {
    const ParameterSpec* p = space_.find(name);
    if (p == nullptr) {
      throw SchemaError("rule '" + rule.id + "' references unknown parameter '" + name + "'");
    }
    return *p;
  }

  void read_bounds(ConstraintRule& rule, const json& entry) {
    if (entry.contains("min")) rule.min = resolve(rule, entry["min"]);
    if (entry.contains("max")) rule.max = resolve(rule, entry["max"]);
  }

  void read_allowed(ConstraintRule& rule, const json& entry, bool required) {
    if (!entry.contains("values")) {
      if (required) throw SchemaError("rule '" + rule.id + "' needs a 'values' list");
      return;
    }
    if (!entry["values"].is_array() || entry["values"].empty()) {
      throw SchemaError("rule '" + rule.id + "': 'values' must be a non-empty list");
    }
    // Values are typed against the first subject; all subjects must share it.
    ParamKind kind = param(rule, rule.subjects.front()).kind;
    for (const auto& s : rule.subjects) {
      if (param(rule, s).kind != kind) {
        throw SchemaError("rule '" + rule.id + "': subjects of a value list must share a kind");
      }
    }
    for (const auto& v : entry["values"]) rule.allowed.push_back(value_from_json(v, kind));
  }

  double number(const ConstraintRule& rule, const json& entry, const char* field) {
    if (!entry.contains(field)) {
      throw SchemaError("rule '" + rule.id + "' needs '" + field + "'");
    }
    return resolve(rule, entry[field]);
  }

  double resolve(const ConstraintRule& rule, const json& raw) {
    if (raw.is_number()) return raw.get<double>();
    if (!raw.is_string()) {
      throw SchemaError("rule '" + rule.id + "': expected a number, got " + raw.dump());
    }
    std::string text = raw.get<std::string>();
    static const std::regex ref(R"(^\s*\$\{([A-Za-z_][A-Za-z0-9_]*)\}\s*$)");
    std::smatch m;
    if (std::regex_match(text, m, ref)) {
      const std::string name = m[1];
      if (externals_.contains(name)) {
        const json& ext = externals_[name];
        if (ext.is_number()) return ext.get<double>();
        if (ext.is_string()) text = ext.get<std::string>();
        else throw SchemaError("external '" + name + "' is not a number");
      } else if (auto v = env_(name)) {
        text = *v;
      } else {
        throw SchemaError("rule '" + rule.id + "': external '${" + name + "}' is not defined");
      }
    }
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') {
      throw SchemaError("rule '" + rule.id + "': '" + text + "' is not a number");
    }
    return v;
  }

  const ConfigurationSpace& space_;
  const ExternalLookup& env_;
  json externals_ = json::object();
};

}  // namespace

RuleSet::RuleSet(std::vector<ConstraintRule> rules, const ConfigurationSpace& space)
    : rules_(std::move(rules)) {
  for (const auto& p : space.parameters()) defaults_.emplace(p.name, p.default_value);
  for (const auto& r : rules_) {
    for (const auto& s : r.subjects) {
      if (!defaults_.count(s)) {
        throw SchemaError("rule '" + r.id + "' references unknown parameter '" + s + "'");
      }
    }
  }
}

const Value& RuleSet::lookup(const Configuration& config, const std::string& name) const {
  if (const Value* v = config.find(name)) return *v;
  return defaults_.at(name);
}

namespace {

bool within(double x, const std::optional<double>& lo, const std::optional<double>& hi) {
  return (!lo || x >= *lo) && (!hi || x <= *hi);
}

bool is_multiple(double x, double modulus) {
  double r = std::fmod(std::fabs(x), modulus);
  double tol = 1e-9 * std::max(1.0, modulus);
  return r <= tol || modulus - r <= tol;
}

bool contains(const std::vector<Value>& allowed, const Value& v) {
  for (const auto& a : allowed) {
    if (a == v) return true;
  }
  return false;
}

}  // namespace

bool RuleSet::holds(const ConstraintRule& rule, const Configuration& config) const {
  auto num = [&](const std::string& name) { return numeric(lookup(config, name)).value_or(0.0); };
  switch (rule.kind) {
    case RuleKind::range:
      for (const auto& s : rule.subjects) {
        if (!within(num(s), rule.min, rule.max)) return false;
      }
      return true;
    case RuleKind::multiple_of:
      for (const auto& s : rule.subjects) {
        if (!is_multiple(num(s), rule.modulus)) return false;
      }
      return true;
    case RuleKind::enum_member:
      for (const auto& s : rule.subjects) {
        if (!contains(rule.allowed, lookup(config, s))) return false;
      }
      return true;
    case RuleKind::linear_inequality: {
      double sum = 0;
      for (std::size_t i = 0; i < rule.subjects.size(); ++i) {
        sum += rule.coeffs[i] * num(rule.subjects[i]);
      }
      return sum <= rule.bound + 1e-9 * std::max(1.0, std::fabs(rule.bound));
    }
    case RuleKind::ratio_bound: {
      double lhs = num(rule.subjects[0]);
      double rhs = rule.factor * num(rule.subjects[1]);
      return lhs <= rhs + 1e-9 * std::max(1.0, std::fabs(rhs));
    }
    case RuleKind::requires_: {
      for (const auto& c : rule.when) {
        if (!(lookup(config, c.parameter) == c.value)) return true;
      }
      for (const auto& s : rule.subjects) {
        const Value& v = lookup(config, s);
        if (!rule.allowed.empty() && !contains(rule.allowed, v)) return false;
        if ((rule.min || rule.max) && !within(numeric(v).value_or(0.0), rule.min, rule.max)) {
          return false;
        }
      }
      return true;
    }
  }
  return true;
}

ValidityReport RuleSet::check(const Configuration& config) const {
  ValidityReport report;
  for (const auto& rule : rules_) {
    if (holds(rule, config)) continue;
    std::string detail;
    for (const auto& s : rule.subjects) {
      if (!detail.empty()) detail += ", ";
      detail += s + "=" + to_text(lookup(config, s));
    }
    report.violations.push_back({rule.id, rule.message + " (" + detail + ")"});
  }
  return report;
}

bool RuleSet::is_valid(const Configuration& config) const {
  for (const auto& rule : rules_) {
    if (!holds(rule, config)) return false;
  }
  return true;
}

std::string RuleSet::digest() const { return digest_hex(rules_to_json(*this).dump()); }

std::optional<std::string> environment_lookup(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

RuleSet parse_rules(const json& doc, const ConfigurationSpace& space, const ExternalLookup& env) {
  if (doc.is_null()) return RuleSet({}, space);
  json rules_doc = doc;
  if (doc.is_array()) rules_doc = json{{"rules", doc}};
  if (!rules_doc.is_object()) throw SchemaError("rules file must hold an object or array");
  RuleCompiler compiler(rules_doc, space, env);
  std::vector<ConstraintRule> rules;
  if (rules_doc.contains("rules")) {
    if (!rules_doc["rules"].is_array()) throw SchemaError("'rules' must be an array");
    for (const auto& entry : rules_doc["rules"]) rules.push_back(compiler.compile(entry));
  }
  return RuleSet(std::move(rules), space);
}

RuleSet load_rules(const std::filesystem::path& path, const ConfigurationSpace& space,
                   const ExternalLookup& env) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return RuleSet({}, space);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_rules(doc, space, env);
}

json rules_to_json(const RuleSet& rules) {
  json out = json::array();
  for (const auto& r : rules.rules()) {
    json e;
    e["id"] = r.id;
    e["kind"] = rule_kind_name(r.kind);
    e["subjects"] = r.subjects;
    if (r.min) e["min"] = *r.min;
    if (r.max) e["max"] = *r.max;
    switch (r.kind) {
      case RuleKind::multiple_of: e["modulus"] = r.modulus; break;
      case RuleKind::linear_inequality:
        e["coeffs"] = r.coeffs;
        e["bound"] = r.bound;
        break;
      case RuleKind::ratio_bound: e["factor"] = r.factor; break;
      default: break;
    }
    if (!r.allowed.empty()) {
      json vals = json::array();
      for (const auto& v : r.allowed) vals.push_back(to_json(v));
      e["values"] = std::move(vals);
    }
    if (!r.when.empty()) {
      json w = json::object();
      for (const auto& c : r.when) w[c.parameter] = to_json(c.value);
      e["when"] = std::move(w);
    }
    e["message"] = r.message;
    out.push_back(std::move(e));
  }
  return json{{"rules", std::move(out)}};
}

}  // namespace conex
