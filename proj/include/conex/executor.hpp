#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "conex/space.hpp"

namespace conex {

enum class EvalStatus { ok, failed, invalid, timeout };
std::string_view status_name(EvalStatus status);
EvalStatus status_from_name(std::string_view name);

/// One evaluated configuration. `performance` is set iff status == ok and
/// then equals the aggregate of `repeats`.
struct EvaluationRecord {
  Configuration config;
  std::optional<double> performance;
  std::vector<double> repeats;
  EvalStatus status = EvalStatus::ok;
  int generation = 0;
  int member = 0;
  std::string role = "sample";
  double wall_clock = 0;      // seconds spent measuring; 0 for synthetic runs
  std::int64_t timestamp = 0; // unix seconds; 0 for synthetic runs
  std::string diagnostics;    // captured stderr / failure reason
};

enum class RenderMode { env, properties_file, json_file };
enum class FailurePolicy { abort, penalize, skip };
enum class Aggregation { mean, median };

RenderMode render_mode_from_name(std::string_view name);
FailurePolicy failure_policy_from_name(std::string_view name);

struct ExecutorSettings {
  std::string command_template;
  RenderMode render_mode = RenderMode::properties_file;
  /// Regex with one capture group; empty means "last number on the last
  /// non-empty stdout line".
  std::string perf_pattern;
  int repeats = 3;
  std::chrono::milliseconds timeout{0};
  FailurePolicy failure_policy = FailurePolicy::skip;
  double penalty = 1e9;
  Aggregation aggregation = Aggregation::mean;
  std::size_t jobs = 1;
  std::filesystem::path work_dir;
};

/// Raised when the failure policy is `abort`, or when a benchmark cannot
/// be launched at all.
class EvaluatorAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- rendering ----------------------------------------------------------

/// CONEX_ + upper-cased name with every non-alphanumeric byte as '_'.
std::string env_var_name(const std::string& parameter);

std::vector<std::pair<std::string, std::string>> render_env(const Configuration& config);
/// `name=value` lines sorted by name.
std::string render_properties(const Configuration& config);
std::string render_json(const Configuration& config);

Configuration parse_env(const std::vector<std::pair<std::string, std::string>>& vars,
                        const ConfigurationSpace& space);
Configuration parse_properties(const std::string& text, const ConfigurationSpace& space);
Configuration parse_rendered_json(const std::string& text, const ConfigurationSpace& space);

/// Extracts one measurement from benchmark stdout; nullopt if nothing
/// matches.
std::optional<double> parse_performance(const std::string& stdout_text,
                                        const std::string& perf_pattern);

double aggregate(const std::vector<double>& values, Aggregation how);

// --- benchmarks ---------------------------------------------------------

struct Measurement {
  bool ok = false;
  bool timed_out = false;
  double value = 0;
  double seconds = 0;
  std::string diagnostics;
};

/// Something that turns a configuration into one raw measurement.
class Benchmark {
 public:
  virtual ~Benchmark() = default;
  virtual Measurement measure(const Configuration& config, int repeat) = 0;
  /// Stable description, part of the journal settings hash.
  virtual std::string descriptor() const = 0;
  /// True when measurements are pure functions of (config, repeat); such
  /// runs journal zero wall-clock and timestamp so journals are
  /// byte-reproducible.
  virtual bool deterministic() const { return false; }
};

/// Runs an external command per measurement.
class CommandBenchmark : public Benchmark {
 public:
  explicit CommandBenchmark(ExecutorSettings settings);
  Measurement measure(const Configuration& config, int repeat) override;
  std::string descriptor() const override;

 private:
  ExecutorSettings settings_;
  std::atomic<std::uint64_t> counter_{0};
};

// --- executor -----------------------------------------------------------

/// Thread-safe record store keyed by Configuration::key().
class EvaluationCache {
 public:
  std::optional<EvaluationRecord> lookup(const std::string& key) const;
  void store(const std::string& key, EvaluationRecord record);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, EvaluationRecord> records_;
};

class Executor {
 public:
  Executor(std::shared_ptr<Benchmark> benchmark, ExecutorSettings settings);

  /// Cached evaluation. The returned record's generation/member/role are
  /// left for the caller to stamp.
  EvaluationRecord evaluate(const Configuration& config);

  /// Evaluates a batch with up to settings.jobs concurrent workers; results
  /// are returned in input order.
  std::vector<EvaluationRecord> evaluate_batch(std::span<const Configuration> configs);

  /// Number of uncached evaluations performed.
  std::size_t executions() const { return executions_.load(); }
  /// Number of raw benchmark invocations (executions * repeats).
  std::size_t invocations() const { return invocations_.load(); }

  EvaluationCache& cache() { return cache_; }
  const ExecutorSettings& settings() const { return settings_; }
  Benchmark& benchmark() { return *benchmark_; }
  std::string descriptor() const;

 private:
  EvaluationRecord run(const Configuration& config);

  std::shared_ptr<Benchmark> benchmark_;
  ExecutorSettings settings_;
  EvaluationCache cache_;
  std::atomic<std::size_t> executions_{0};
  std::atomic<std::size_t> invocations_{0};
};

}  // namespace conex
