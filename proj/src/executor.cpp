#include "conex/executor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "conex/subprocess.hpp"

namespace conex {

std::string_view status_name(EvalStatus status) {
  switch (status) {
    case EvalStatus::ok: return "ok";
    case EvalStatus::failed: return "failed";
    case EvalStatus::invalid: return "invalid";
    case EvalStatus::timeout: return "timeout";
  }
  return "?";
}

EvalStatus status_from_name(std::string_view name) {
  for (auto s : {EvalStatus::ok, EvalStatus::failed, EvalStatus::invalid, EvalStatus::timeout}) {
    if (status_name(s) == name) return s;
  }
  throw ParseError("unknown evaluation status '" + std::string(name) + "'");
}

RenderMode render_mode_from_name(std::string_view name) {
  if (name == "env") return RenderMode::env;
  if (name == "properties" || name == "properties_file") return RenderMode::properties_file;
  if (name == "json" || name == "json_file") return RenderMode::json_file;
  throw SchemaError("unknown render mode '" + std::string(name) + "'");
}

FailurePolicy failure_policy_from_name(std::string_view name) {
  if (name == "abort") return FailurePolicy::abort;
  if (name == "penalize") return FailurePolicy::penalize;
  if (name == "skip") return FailurePolicy::skip;
  throw SchemaError("unknown failure policy '" + std::string(name) + "'");
}

// --- rendering ----------------------------------------------------------

std::string env_var_name(const std::string& parameter) {
  std::string out = "CONEX_";
  for (unsigned char c : parameter) {
    out += std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_';
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> render_env(const Configuration& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, value] : config) out.emplace_back(env_var_name(name), to_text(value));
  return out;
}

std::string render_properties(const Configuration& config) {
  std::string out;
  for (const auto& [name, value] : config) out += name + "=" + to_text(value) + "\n";
  return out;
}

std::string render_json(const Configuration& config) {
  return configuration_to_json(config).dump() + "\n";
}

Configuration parse_env(const std::vector<std::pair<std::string, std::string>>& vars,
                        const ConfigurationSpace& space) {
  std::map<std::string, const ParameterSpec*> by_var;
  for (const auto& p : space.relevant()) {
    if (!by_var.emplace(env_var_name(p.name), &p).second) {
      throw SchemaError("parameters collide on environment name " + env_var_name(p.name));
    }
  }
  Configuration config;
  for (const auto& [var, text] : vars) {
    auto it = by_var.find(var);
    if (it == by_var.end()) continue;
    config.set(it->second->name, parse_value(text, it->second->kind));
  }
  space.check_membership(config);
  return config;
}

Configuration parse_properties(const std::string& text, const ConfigurationSpace& space) {
  Configuration config;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("properties line without '=': " + line);
    std::string name = line.substr(0, eq);
    const ParameterSpec* p = space.find(name);
    if (p == nullptr) throw SchemaError("unknown parameter '" + name + "'");
    config.set(name, parse_value(line.substr(eq + 1), p->kind));
  }
  space.check_membership(config);
  return config;
}

Configuration parse_rendered_json(const std::string& text, const ConfigurationSpace& space) {
  try {
    return configuration_from_json(json::parse(text), space);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
}

std::optional<double> parse_performance(const std::string& stdout_text,
                                        const std::string& perf_pattern) {
  static const std::regex number(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
  std::string haystack = stdout_text;
  const std::regex* pattern = &number;
  std::regex custom;
  if (perf_pattern.empty()) {
    // Last non-empty line only.
    std::istringstream in(stdout_text);
    std::string line;
    haystack.clear();
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) haystack = line;
    }
  } else {
    custom = std::regex(perf_pattern);
    pattern = &custom;
  }
  std::optional<double> found;
  for (auto it = std::sregex_iterator(haystack.begin(), haystack.end(), *pattern);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    std::string text = (m.size() > 1 && m[1].matched) ? m[1].str() : m[0].str();
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str()) found = v;
  }
  return found;
}

double aggregate(const std::vector<double>& values, Aggregation how) {
  if (values.empty()) return 0;
  if (how == Aggregation::median) {
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

// --- command benchmark --------------------------------------------------

CommandBenchmark::CommandBenchmark(ExecutorSettings settings) : settings_(std::move(settings)) {
  if (settings_.command_template.empty()) throw SchemaError("empty command template");
  if (settings_.work_dir.empty()) settings_.work_dir = std::filesystem::temp_directory_path();
  std::filesystem::create_directories(settings_.work_dir);
}

std::string CommandBenchmark::descriptor() const {
  std::string mode = settings_.render_mode == RenderMode::env ? "env"
                     : settings_.render_mode == RenderMode::json_file ? "json"
                                                                     : "properties";
  return "command:" + settings_.command_template + "|render=" + mode +
         "|pattern=" + settings_.perf_pattern;
}

Measurement CommandBenchmark::measure(const Configuration& config, int /*repeat*/) {
  std::vector<std::pair<std::string, std::string>> env;
  std::filesystem::path file;
  if (settings_.render_mode == RenderMode::env) {
    env = render_env(config);
  } else {
    const bool as_json = settings_.render_mode == RenderMode::json_file;
    file = settings_.work_dir / ("conex-" + std::to_string(::getpid()) + "-" +
                                 std::to_string(counter_++) + (as_json ? ".json" : ".properties"));
    std::ofstream out(file);
    if (!out) throw EvaluatorAbort("cannot write configuration file " + file.string());
    out << (as_json ? render_json(config) : render_properties(config));
    env.emplace_back("CONEX_CONFIG_FILE", file.string());
  }

  std::string command = settings_.command_template;
  const std::string placeholder = "{config_file}";
  for (auto pos = command.find(placeholder); pos != std::string::npos;
       pos = command.find(placeholder, pos)) {
    command.replace(pos, placeholder.size(), file.string());
    pos += file.string().size();
  }

  ProcessResult proc;
  try {
    proc = run_shell(command, env, settings_.timeout);
  } catch (const std::system_error& e) {
    throw EvaluatorAbort(std::string("cannot launch benchmark: ") + e.what());
  }
  if (!file.empty()) {
    std::error_code ec;
    std::filesystem::remove(file, ec);
  }

  Measurement m;
  m.seconds = proc.elapsed.count();
  m.diagnostics = proc.err;
  if (proc.timed_out) {
    m.timed_out = true;
    m.diagnostics = "timeout after " + std::to_string(settings_.timeout.count()) + " ms\n" + proc.err;
    return m;
  }
  if (proc.exit_code == 127) {
    m.diagnostics = "command not found (exit 127)\n" + proc.err;
    return m;
  }
  if (proc.exit_code != 0) {
    m.diagnostics = "exit code " + std::to_string(proc.exit_code) + "\n" + proc.err;
    return m;
  }
  auto value = parse_performance(proc.out, settings_.perf_pattern);
  if (!value) {
    m.diagnostics = "no performance value in benchmark output\n" + proc.err;
    return m;
  }
  if (!(*value > 0) || !std::isfinite(*value)) {
    m.diagnostics = "non-positive performance " + to_text(Value{*value});
    return m;
  }
  m.ok = true;
  m.value = *value;
  return m;
}

// --- cache --------------------------------------------------------------

std::optional<EvaluationRecord> EvaluationCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void EvaluationCache::store(const std::string& key, EvaluationRecord record) {
  std::lock_guard lock(mutex_);
  records_[key] = std::move(record);
}

std::size_t EvaluationCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

// --- executor -----------------------------------------------------------

Executor::Executor(std::shared_ptr<Benchmark> benchmark, ExecutorSettings settings)
    : benchmark_(std::move(benchmark)), settings_(std::move(settings)) {
  if (!benchmark_) throw std::invalid_argument("Executor needs a benchmark");
  if (settings_.repeats < 1) throw SchemaError("repeats must be >= 1");
  if (settings_.jobs < 1) settings_.jobs = 1;
}

std::string Executor::descriptor() const {
  std::ostringstream out;
  out << benchmark_->descriptor() << "|repeats=" << settings_.repeats
      << "|aggregate=" << (settings_.aggregation == Aggregation::median ? "median" : "mean")
      << "|policy=" << (settings_.failure_policy == FailurePolicy::abort      ? "abort"
                      : settings_.failure_policy == FailurePolicy::penalize ? "penalize"
                                                                            : "skip")
      << "|penalty=" << to_text(Value{settings_.penalty});
  return out.str();
}

EvaluationRecord Executor::evaluate(const Configuration& config) {
  const std::string key = config.key();
  if (auto hit = cache_.lookup(key)) return *hit;
  EvaluationRecord record = run(config);
  cache_.store(key, record);
  return record;
}

EvaluationRecord Executor::run(const Configuration& config) {
  ++executions_;
  EvaluationRecord record;
  record.config = config;
  const bool deterministic = benchmark_->deterministic();
  if (!deterministic) record.timestamp = static_cast<std::int64_t>(std::time(nullptr));

  for (int r = 0; r < settings_.repeats; ++r) {
    ++invocations_;
    Measurement m = benchmark_->measure(config, r);
    if (!deterministic) record.wall_clock += m.seconds;
    if (!m.diagnostics.empty()) record.diagnostics += m.diagnostics;
    if (m.ok) {
      record.repeats.push_back(m.value);
      continue;
    }
    switch (settings_.failure_policy) {
      case FailurePolicy::abort:
        throw EvaluatorAbort("evaluation of {" + config.key() + "} failed: " + m.diagnostics);
      case FailurePolicy::penalize:
        record.repeats.push_back(settings_.penalty);
        continue;
      case FailurePolicy::skip:
        record.status = m.timed_out ? EvalStatus::timeout : EvalStatus::failed;
        record.performance.reset();
        return record;
    }
  }
  record.status = EvalStatus::ok;
  record.performance = aggregate(record.repeats, settings_.aggregation);
  return record;
}

std::vector<EvaluationRecord> Executor::evaluate_batch(std::span<const Configuration> configs) {
  std::vector<EvaluationRecord> out(configs.size());
  const std::size_t workers = std::min(settings_.jobs, configs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) out[i] = evaluate(configs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) {
        try {
          out[i] = evaluate(configs[i]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = configs.size();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace conex
