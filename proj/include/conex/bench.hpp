#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conex/executor.hpp"
#include "conex/landscape.hpp"
#include "conex/sampler.hpp"

namespace conex {

/// Paired comparison of samplers on one synthetic landscape. Every sampler
/// runs once per seed with the same budget; pairs share the seed.
struct BenchSettings {
  std::vector<SamplerKind> samplers{SamplerKind::emcmc, SamplerKind::ga, SamplerKind::random};
  std::size_t seeds = 20;
  std::uint64_t first_seed = 1;
  /// Evaluation budget per run. When unset, budget_fraction of the space
  /// size is used (rounded up); when both are unset, sampler defaults apply.
  std::optional<std::size_t> budget;
  std::optional<double> budget_fraction;
  /// Base sampler settings; seed and budget are overwritten per run.
  SamplerSettings sampler;
  /// Repeats, aggregation and failure policy for the synthetic executor.
  ExecutorSettings executor;
  /// Enumerate the space to report the true optimum (small spaces only).
  bool exhaustive = true;
};

struct BenchRun {
  SamplerKind sampler = SamplerKind::emcmc;
  std::uint64_t seed = 0;
  /// Noise-free cost of the reported best configuration.
  double best_cost = 0;
  std::optional<double> best_perf;
  std::size_t evaluations = 0;
  std::string stop_reason;
};

struct PairwiseWins {
  SamplerKind first = SamplerKind::emcmc;
  SamplerKind second = SamplerKind::random;
  std::size_t pairs = 0;
  /// Pairs where first's best cost <= second's (ties count for first).
  std::size_t first_not_worse = 0;
  double fraction() const {
    return pairs == 0 ? 0.0 : static_cast<double>(first_not_worse) / static_cast<double>(pairs);
  }
};

struct BenchSummary {
  std::string landscape;
  std::optional<std::size_t> budget;
  std::optional<Optimum> optimum;
  std::vector<BenchRun> runs;
  /// The first sampler against each of the others.
  std::vector<PairwiseWins> comparisons;

  double mean_best_cost(SamplerKind kind) const;
  /// Runs of `kind` whose best cost is within `tolerance` (relative) of
  /// the optimum; requires `optimum`.
  std::size_t within(SamplerKind kind, double tolerance) const;
  json to_json() const;
};

BenchSummary run_benchmark(const ConfigurationSpace& space, const RuleSet* rules,
                           const LandscapeDescriptor& landscape, const BenchSettings& settings);

}  // namespace conex
