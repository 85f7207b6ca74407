#include "conex/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace conex {

std::optional<std::size_t> ParameterSpec::index_of(const Value& value) const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == value) return i;
  }
  return std::nullopt;
}

std::size_t ParameterSpec::default_index() const {
  return index_of(default_value).value_or(0);
}

bool operator==(const ParameterSpec& a, const ParameterSpec& b) {
  return a.name == b.name && a.kind == b.kind && a.default_value == b.default_value &&
         a.candidates == b.candidates && a.relevant == b.relevant && a.unit == b.unit;
}

const Value* Configuration::find(const std::string& name) const {
  auto it = assignments_.find(name);
  return it == assignments_.end() ? nullptr : &it->second;
}

std::string Configuration::key() const {
  std::string out;
  for (const auto& [name, value] : assignments_) {
    out += name;
    out += '=';
    out += to_text(value);
    out += ';';
  }
  return out;
}

namespace {

void validate_parameter(const ParameterSpec& p) {
  if (p.name.empty()) throw SchemaError("parameter with empty name");
  if (p.candidates.empty()) {
    throw SchemaError("parameter '" + p.name + "' has no candidates");
  }
  if (!kind_matches(p.default_value, p.kind)) {
    throw SchemaError("parameter '" + p.name + "': default is not of kind " +
                      std::string(kind_name(p.kind)));
  }
  std::set<std::string> seen;
  for (const auto& c : p.candidates) {
    if (!kind_matches(c, p.kind)) {
      throw SchemaError("parameter '" + p.name + "': candidate " + to_text(c) +
                        " is not of kind " + std::string(kind_name(p.kind)));
    }
    if (!seen.insert(to_text(c)).second) {
      throw SchemaError("parameter '" + p.name + "': duplicate candidate " + to_text(c));
    }
  }
  if (!p.index_of(p.default_value)) {
    throw SchemaError("parameter '" + p.name + "': default " + to_text(p.default_value) +
                      " is not among its candidates");
  }
}

}  // namespace

ConfigurationSpace::ConfigurationSpace(std::string name, std::vector<ParameterSpec> parameters)
    : name_(std::move(name)), parameters_(std::move(parameters)) {
  std::set<std::string> names;
  for (const auto& p : parameters_) {
    validate_parameter(p);
    if (!names.insert(p.name).second) {
      throw SchemaError("duplicate parameter name '" + p.name + "'");
    }
    if (p.relevant) relevant_.push_back(p);
  }
  if (relevant_.empty()) {
    throw SchemaError("space '" + name_ + "' has no relevant parameters");
  }
}

const ParameterSpec* ConfigurationSpace::find(const std::string& name) const {
  for (const auto& p : parameters_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void ConfigurationSpace::check_membership(const Configuration& config) const {
  for (const auto& [name, value] : config) {
    const ParameterSpec* p = find(name);
    if (p == nullptr) throw SchemaError("unknown parameter '" + name + "'");
    if (!p->relevant) throw SchemaError("parameter '" + name + "' is not relevant");
    if (!p->index_of(value)) {
      throw SchemaError("value " + to_text(value) + " is not a candidate of '" + name + "'");
    }
  }
  if (config.size() != relevant_.size()) {
    for (const auto& p : relevant_) {
      if (config.find(p.name) == nullptr) {
        throw SchemaError("configuration is missing parameter '" + p.name + "'");
      }
    }
  }
}

bool operator==(const ConfigurationSpace& a, const ConfigurationSpace& b) {
  return a.name_ == b.name_ && a.parameters_ == b.parameters_;
}

// --- serialization -------------------------------------------------------

namespace {

ParameterSpec parse_parameter(const json& entry) {
  if (!entry.is_object()) throw SchemaError("parameter entry must be an object");
  ParameterSpec p;
  if (!entry.contains("name") || !entry["name"].is_string()) {
    throw SchemaError("parameter entry without a string 'name'");
  }
  p.name = entry["name"].get<std::string>();
  if (!entry.contains("kind") || !entry["kind"].is_string()) {
    throw SchemaError("parameter '" + p.name + "' has no 'kind'");
  }
  p.kind = kind_from_name(entry["kind"].get<std::string>());
  if (!entry.contains("default")) {
    throw SchemaError("parameter '" + p.name + "' has no 'default'");
  }
  p.default_value = value_from_json(entry["default"], p.kind);
  p.relevant = entry.value("relevant", true);
  if (entry.contains("unit") && entry["unit"].is_string()) {
    p.unit = entry["unit"].get<std::string>();
  }

  if (entry.contains("candidates")) {
    if (!entry["candidates"].is_array()) {
      throw SchemaError("parameter '" + p.name + "': 'candidates' must be an array");
    }
    for (const auto& c : entry["candidates"]) p.candidates.push_back(value_from_json(c, p.kind));
  } else if (entry.contains("range")) {
    if (p.kind != ParamKind::integer && p.kind != ParamKind::floating) {
      throw SchemaError("parameter '" + p.name + "': 'range' needs a numeric kind");
    }
    const json& r = entry["range"];
    double percent = r.value("percent", 0.10);
    auto count = r.value("count", static_cast<std::size_t>(kDefaultDiscretizeCount));
    p.candidates = discretize_numeric(*numeric(p.default_value), percent, count,
                                      p.kind == ParamKind::integer, p.name);
  } else if (p.kind == ParamKind::boolean) {
    p.candidates = {Value{false}, Value{true}};
  } else {
    throw SchemaError("parameter '" + p.name + "' needs 'candidates' or 'range'");
  }
  return p;
}

}  // namespace

ConfigurationSpace parse_space(const json& doc) {
  if (!doc.is_object()) throw SchemaError("space file must hold an object");
  if (!doc.contains("name") || !doc["name"].is_string()) {
    throw SchemaError("space file needs a string 'name'");
  }
  if (!doc.contains("parameters") || !doc["parameters"].is_array()) {
    throw SchemaError("space file needs a 'parameters' array");
  }
  std::vector<ParameterSpec> params;
  for (const auto& entry : doc["parameters"]) params.push_back(parse_parameter(entry));
  return ConfigurationSpace(doc["name"].get<std::string>(), std::move(params));
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

ConfigurationSpace load_space(const std::filesystem::path& path) {
  return parse_space(read_json_file(path));
}

json space_to_json(const ConfigurationSpace& space) {
  json params = json::array();
  for (const auto& p : space.parameters()) {
    json entry;
    entry["name"] = p.name;
    entry["kind"] = kind_name(p.kind);
    entry["default"] = to_json(p.default_value);
    json cands = json::array();
    for (const auto& c : p.candidates) cands.push_back(to_json(c));
    entry["candidates"] = std::move(cands);
    entry["relevant"] = p.relevant;
    if (p.unit) entry["unit"] = *p.unit;
    params.push_back(std::move(entry));
  }
  return json{{"name", space.name()}, {"parameters", std::move(params)}};
}

void save_space(const ConfigurationSpace& space, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << space_to_json(space).dump(2) << '\n';
}

json configuration_to_json(const Configuration& config) {
  json out = json::object();
  for (const auto& [name, value] : config) out[name] = to_json(value);
  return out;
}

Configuration configuration_from_json(const json& doc, const ConfigurationSpace& space) {
  if (!doc.is_object()) throw SchemaError("configuration must be a flat object");
  Configuration config;
  for (const auto& [name, raw] : doc.items()) {
    const ParameterSpec* p = space.find(name);
    if (p == nullptr) throw SchemaError("unknown parameter '" + name + "'");
    Value v = value_from_json(raw, p->kind);
    if (!p->relevant) {
      // Fixed parameters may be echoed back as long as they hold their value.
      if (!(v == p->default_value)) {
        throw SchemaError("parameter '" + name + "' is fixed at " + to_text(p->default_value));
      }
      continue;
    }
    config.set(name, std::move(v));
  }
  space.check_membership(config);
  return config;
}

Configuration load_configuration(const std::filesystem::path& path,
                                 const ConfigurationSpace& space) {
  return configuration_from_json(read_json_file(path), space);
}

// --- operations ----------------------------------------------------------

BigInt space_size(const ConfigurationSpace& space) {
  BigInt total = 1;
  for (const auto& p : space.relevant()) total *= p.candidates.size();
  return total;
}

std::vector<Value> discretize_numeric(double default_value, double percent,
                                      std::size_t count, bool integer,
                                      const std::string& param_name) {
  const std::string label = param_name.empty() ? "value" : "parameter '" + param_name + "'";
  if (count < 1) throw SchemaError(label + ": discretization count must be >= 1");
  if (!(percent > 0)) throw SchemaError(label + ": discretization percent must be > 0");
  if (!std::isfinite(default_value)) throw SchemaError(label + ": default is not finite");

  std::vector<double> raw;
  if (count == 1) {
    raw.push_back(default_value);
  } else {
    const double lo = default_value * (1.0 - percent);
    const double hi = default_value * (1.0 + percent);
    bool has_default = false;
    for (std::size_t i = 0; i < count; ++i) {
      double v = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
      // Trim float noise (0.594 instead of 0.5940000000000001).
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.12g", v);
      v = std::strtod(buf, nullptr);
      if (std::fabs(v - default_value) <= 1e-12 * std::max(1.0, std::fabs(default_value))) {
        v = default_value;
        has_default = true;
      }
      raw.push_back(v);
    }
    if (!has_default) {
      auto pos = std::lower_bound(raw.begin(), raw.end(), default_value,
                                  [lo, hi](double a, double b) { return lo <= hi ? a < b : a > b; });
      raw.insert(pos, default_value);
    }
  }

  std::vector<Value> out;
  if (integer) {
    std::set<std::int64_t> seen;
    for (double v : raw) {
      auto r = static_cast<std::int64_t>(std::round(v));  // half away from zero
      if (seen.insert(r).second) out.emplace_back(r);
    }
    if (count > 1 && out.size() < 2) {
      throw SchemaError(label + ": integer discretization of " + to_text(Value{default_value}) +
                        " collapses to a single value");
    }
  } else {
    for (double v : raw) {
      if (out.empty() || std::get<double>(out.back()) != v) out.emplace_back(v);
    }
    if (count > 1 && out.size() < 2) {
      throw SchemaError(label + ": discretization of " + to_text(Value{default_value}) +
                        " collapses to a single value");
    }
  }
  return out;
}

Configuration random_configuration(const ConfigurationSpace& space, Rng& rng) {
  Configuration config;
  for (const auto& p : space.relevant()) {
    config.set(p.name, p.candidates[rng.index(p.candidates.size())]);
  }
  return config;
}

Configuration default_configuration(const ConfigurationSpace& space) {
  Configuration config;
  for (const auto& p : space.relevant()) config.set(p.name, p.default_value);
  return config;
}

void enumerate_all(const ConfigurationSpace& space,
                   const std::function<bool(const Configuration&)>& visit) {
  const auto& dims = space.relevant();
  std::vector<std::size_t> idx(dims.size(), 0);
  Configuration config;
  for (const auto& p : dims) config.set(p.name, p.candidates[0]);
  while (true) {
    if (!visit(config)) return;
    std::size_t d = dims.size();
    while (d > 0) {
      --d;
      if (++idx[d] < dims[d].candidates.size()) {
        config.set(dims[d].name, dims[d].candidates[idx[d]]);
        break;
      }
      idx[d] = 0;
      config.set(dims[d].name, dims[d].candidates[0]);
      if (d == 0) return;
    }
  }
}

std::vector<std::size_t> candidate_indices(const ConfigurationSpace& space,
                                           const Configuration& config) {
  std::vector<std::size_t> out;
  out.reserve(space.dimensionality());
  for (const auto& p : space.relevant()) {
    const Value* v = config.find(p.name);
    if (v == nullptr) throw SchemaError("configuration is missing parameter '" + p.name + "'");
    auto i = p.index_of(*v);
    if (!i) throw SchemaError("value " + to_text(*v) + " is not a candidate of '" + p.name + "'");
    out.push_back(*i);
  }
  return out;
}

}  // namespace conex
