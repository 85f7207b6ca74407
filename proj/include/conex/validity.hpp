#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conex/space.hpp"

namespace conex {

enum class RuleKind { range, multiple_of, enum_member, linear_inequality, ratio_bound, requires_ };

std::string_view rule_kind_name(RuleKind kind);

/// Optional activation guard: the rule only applies when every listed
/// parameter currently holds the listed value.
struct RuleCondition {
  std::string parameter;
  Value value;
};

/// A compiled validity predicate. Which fields are meaningful depends on
/// kind:
///   range              min <= x <= max for each subject (either bound optional)
///   multiple_of        x % modulus == 0 for each subject
///   enum_member        x in allowed for each subject
///   linear_inequality  sum(coeffs[i] * x_i) <= bound
///   ratio_bound        subjects[0] <= factor * subjects[1]
///   requires           when all `when` conditions hold, each subject satisfies
///                      allowed and/or min/max
struct ConstraintRule {
  std::string id;
  RuleKind kind = RuleKind::range;
  std::vector<std::string> subjects;
  std::optional<double> min;
  std::optional<double> max;
  double modulus = 1;
  std::vector<double> coeffs;
  double bound = 0;
  double factor = 1;
  std::vector<Value> allowed;
  std::vector<RuleCondition> when;
  std::string message;
};

struct Violation {
  std::string rule_id;
  std::string message;
};

struct ValidityReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

/// Resolves `${NAME}` references. Receives NAME, returns the text value.
using ExternalLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Immutable set of rules bound to one space. Parameters a configuration
/// does not assign (irrelevant ones) are read at their default value.
class RuleSet {
 public:
  RuleSet() = default;
  RuleSet(std::vector<ConstraintRule> rules, const ConfigurationSpace& space);

  const std::vector<ConstraintRule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

  /// Evaluates every rule; no short-circuit.
  ValidityReport check(const Configuration& config) const;
  bool is_valid(const Configuration& config) const;

  /// Stable digest of the compiled rules, used in journal headers.
  std::string digest() const;

 private:
  const Value& lookup(const Configuration& config, const std::string& name) const;
  bool holds(const ConstraintRule& rule, const Configuration& config) const;

  std::vector<ConstraintRule> rules_;
  std::map<std::string, Value> defaults_;
};

/// Environment lookup through getenv.
std::optional<std::string> environment_lookup(const std::string& name);

RuleSet parse_rules(const json& doc, const ConfigurationSpace& space,
                    const ExternalLookup& env = environment_lookup);
RuleSet load_rules(const std::filesystem::path& path, const ConfigurationSpace& space,
                   const ExternalLookup& env = environment_lookup);
json rules_to_json(const RuleSet& rules);

}  // namespace conex
