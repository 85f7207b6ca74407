#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "conex/rng.hpp"
#include "conex/value.hpp"

namespace conex {

/// One tunable parameter with its discretized candidate set.
struct ParameterSpec {
  std::string name;
  ParamKind kind = ParamKind::integer;
  Value default_value;
  std::vector<Value> candidates;
  bool relevant = true;
  std::optional<std::string> unit;

  std::optional<std::size_t> index_of(const Value& value) const;
  std::size_t default_index() const;
};

/// A full value assignment for the relevant parameters of a space. Ordered
/// by name, which also makes key() canonical.
class Configuration {
 public:
  using Map = std::map<std::string, Value>;

  Configuration() = default;
  explicit Configuration(Map assignments) : assignments_(std::move(assignments)) {}

  const Value& at(const std::string& name) const { return assignments_.at(name); }
  const Value* find(const std::string& name) const;
  void set(const std::string& name, Value value) {
    assignments_[name] = std::move(value);
  }
  std::size_t size() const { return assignments_.size(); }
  const Map& assignments() const { return assignments_; }
  auto begin() const { return assignments_.begin(); }
  auto end() const { return assignments_.end(); }

  /// Canonical sorted `name=value;` serialization, used as cache key.
  std::string key() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  Map assignments_;
};

class ConfigurationSpace {
 public:
  ConfigurationSpace() = default;
  /// Validates every invariant; throws SchemaError.
  ConfigurationSpace(std::string name, std::vector<ParameterSpec> parameters);

  const std::string& name() const { return name_; }
  const std::vector<ParameterSpec>& parameters() const { return parameters_; }

  /// Relevant parameters in file order. These are the sampling dimensions.
  const std::vector<ParameterSpec>& relevant() const { return relevant_; }
  std::size_t dimensionality() const { return relevant_.size(); }

  const ParameterSpec* find(const std::string& name) const;

  /// Throws SchemaError unless config assigns exactly the relevant
  /// parameters, each from its candidate list.
  void check_membership(const Configuration& config) const;

  friend bool operator==(const ConfigurationSpace& a, const ConfigurationSpace& b);

 private:
  std::string name_;
  std::vector<ParameterSpec> parameters_;
  std::vector<ParameterSpec> relevant_;
};

bool operator==(const ParameterSpec& a, const ParameterSpec& b);

using BigInt = boost::multiprecision::cpp_int;

// --- serialization -------------------------------------------------------

ConfigurationSpace parse_space(const json& doc);
ConfigurationSpace load_space(const std::filesystem::path& path);
json space_to_json(const ConfigurationSpace& space);
void save_space(const ConfigurationSpace& space, const std::filesystem::path& path);

json configuration_to_json(const Configuration& config);
/// Reads a flat name->value object. Unknown or missing parameters and
/// out-of-candidate values raise SchemaError.
Configuration configuration_from_json(const json& doc, const ConfigurationSpace& space);
Configuration load_configuration(const std::filesystem::path& path,
                                 const ConfigurationSpace& space);

// --- operations ----------------------------------------------------------

/// Exact number of configurations: product of candidate counts over the
/// relevant parameters.
BigInt space_size(const ConfigurationSpace& space);

/// `count` values evenly spaced over default*(1 -+ percent), default always
/// included. Integer values round half away from zero and are deduplicated;
/// a range that collapses to a single value is rejected (SchemaError naming
/// `param_name`).
std::vector<Value> discretize_numeric(double default_value, double percent,
                                      std::size_t count, bool integer,
                                      const std::string& param_name = "");

constexpr std::size_t kDefaultDiscretizeCount = 5;

Configuration random_configuration(const ConfigurationSpace& space, Rng& rng);
Configuration default_configuration(const ConfigurationSpace& space);

/// Calls visit for every configuration in odometer order (last relevant
/// parameter fastest). Stops early if visit returns false.
void enumerate_all(const ConfigurationSpace& space,
                   const std::function<bool(const Configuration&)>& visit);

/// Per-relevant-parameter candidate indices of config, in relevant() order.
std::vector<std::size_t> candidate_indices(const ConfigurationSpace& space,
                                           const Configuration& config);

}  // namespace conex
