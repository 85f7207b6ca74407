#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conex/executor.hpp"
#include "conex/sampler.hpp"
#include "conex/space.hpp"
#include "conex/validity.hpp"

namespace conex {

struct GainReport {
  double perf_default = 0;
  double perf_best = 0;
  double gain_pct = 0;
};

/// |perf_default - perf_best| / perf_default * 100. Throws
/// std::invalid_argument unless perf_default > 0.
GainReport gain(double perf_default, double perf_best);

/// Signed, direction-aware improvement of `perf` over `perf_default` in
/// percent; negative when perf is worse.
double improvement_pct(double perf_default, double perf, Direction direction);

// --- top-K re-evaluation --------------------------------------------------

struct TopKRow {
  std::size_t rank = 0;
  Configuration config;
  std::optional<double> performance;
  std::optional<double> improvement_pct;
  EvalStatus status = EvalStatus::ok;
};

struct TopKPrefix {
  std::size_t k = 0;
  std::optional<double> best_perf;
  std::optional<double> improvement_pct;
};

struct TopKReport {
  Configuration default_config;
  std::optional<double> default_perf;
  std::vector<TopKRow> rows;
  /// Best-so-far over the first k rows for k in {1, 3, 5, 10, 25, 50}
  /// (those not exceeding the number of rows).
  std::vector<TopKPrefix> prefixes;

  json to_json() const;
};

/// Evaluates the default and every candidate, in rank order. Throws
/// std::invalid_argument on an empty list.
TopKReport evaluate_topk(const std::vector<Configuration>& topk, Executor& executor,
                         const Configuration& default_config,
                         Direction direction = Direction::minimize);

// --- sensitivity ----------------------------------------------------------

struct SensitivityEntry {
  std::string parameter;
  Value best_value;
  Value default_value;
  std::optional<double> perf_reset;
  double delta_best = 0;
  double delta_i = 0;
  double sensitivity = 0;
  /// "ok", or why no sensitivity was computed ("invalid" / evaluation status).
  std::string status = "ok";
};

struct SensitivityReport {
  double perf_default = 0;
  double perf_best = 0;
  /// Computed entries sorted by descending sensitivity, followed by the
  /// resets that were invalid or failed.
  std::vector<SensitivityEntry> entries;

  json to_json() const;
};

/// Resets each parameter of `best` that differs from `default_config`, one
/// at a time, and measures the loss of improvement:
///   delta_best = improvement(default -> best), delta_i = improvement(default -> reset_i)
///   sensitivity_i = delta_best - delta_i
/// Improvements are relative to the default and direction-aware. Throws
/// EvaluatorAbort if the default or best cannot be measured.
SensitivityReport sensitivity(const Configuration& best, const Configuration& default_config,
                              Executor& executor, const RuleSet* rules = nullptr,
                              Direction direction = Direction::minimize);

// --- break-even -------------------------------------------------------------

struct BreakEvenReport {
  double overhead = 0;
  double t_default = 0;
  double t_opt = 0;
  double overhead_equiv_runs = 0;
  /// nullopt: the optimized run is not faster, so tuning never pays off.
  std::optional<long long> additional_runs;
  std::optional<long long> total_runs;

  json to_json() const;
};

/// overhead_equiv_runs = overhead / t_default
/// additional_runs     = ceil(overhead / (t_default - t_opt))
/// total_runs          = ceil(overhead_equiv_runs) + additional_runs
/// Throws std::invalid_argument unless t_default > 0, t_opt > 0 and
/// overhead >= 0.
BreakEvenReport break_even(double overhead, double t_default, double t_opt);

}  // namespace conex
