#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conex/executor.hpp"
#include "conex/journal.hpp"
#include "conex/rng.hpp"
#include "conex/space.hpp"
#include "conex/validity.hpp"

namespace conex {

enum class Direction { minimize, maximize };

struct AcceptancePolicy {
  double sigma = 50.0;
  Direction direction = Direction::minimize;
};

/// Relative improvement of `candidate` over `best`:
/// (best - candidate) / best when minimizing, negated when maximizing.
/// Throws std::invalid_argument unless best > 0.
double relative_improvement(double best, double candidate, Direction direction);

/// exp(sigma * relative_improvement). Not capped at 1.
double acceptance_probability(double best, double candidate, const AcceptancePolicy& policy);

/// Metropolis-style acceptance: true iff uniform01() < probability. Exactly
/// one draw is consumed from rng, even when the outcome is certain.
bool accept(double best, double candidate, const AcceptancePolicy& policy, Rng& rng);

/// True when a is strictly better than b.
bool better(double a, double b, Direction direction);

enum class SamplerKind { emcmc, ga, random };
std::string_view sampler_name(SamplerKind kind);
SamplerKind sampler_from_name(std::string_view name);

struct SamplerSettings {
  /// 0 means 4 * dimensionality.
  std::size_t population_size = 0;
  int max_generations = 30;
  double min_improvement = 0.001;
  /// Consecutive generations below min_improvement before stopping.
  int stall_generations = 2;
  double crossover_fraction = 0.5;
  double mutation_fraction = 0.06;
  std::uint64_t seed = 0;
  int invalid_retry_limit = 20;
  /// Distinct search configurations (the seed is not counted). For the
  /// random sampler this defaults to population * max_generations.
  std::optional<std::size_t> budget;
  std::optional<double> budget_seconds;
  std::size_t top_k = 50;
  AcceptancePolicy acceptance;
  /// Random sampler only: redraw configurations already drawn.
  bool dedup = true;

  /// Throws SchemaError on out-of-range fields.
  void validate() const;
  std::size_t population_for(const ConfigurationSpace& space) const;
  json to_json() const;
};

/// ceil(fraction * n).
std::size_t crossover_count(std::size_t n, double fraction);
/// max(1, ceil(fraction * n)), or 0 when fraction is 0.
std::size_t mutation_count(std::size_t n, double fraction);

/// Counters for the validity fallback path of evolve().
struct EvolveStats {
  std::size_t children = 0;
  std::size_t retries = 0;
  std::size_t random_fallbacks = 0;
  std::size_t best_fallbacks = 0;
};

/// Bounded rejection sampling of a configuration valid under rules.
std::optional<Configuration> random_valid_configuration(const ConfigurationSpace& space,
                                                        const RuleSet* rules, Rng& rng,
                                                        std::size_t max_attempts = 1000);

/// One child per parent. P_crossover and P_mutate are drawn once per call.
/// Each child copies its parent, takes best's values on P_crossover and
/// re-draws P_mutate uniformly. An invalid child is re-mutated up to
/// invalid_retry_limit times, then replaced by a fresh valid random
/// configuration, and finally by best.
std::vector<Configuration> evolve(const Configuration& best,
                                  const std::vector<Configuration>& parents,
                                  const SamplerSettings& settings,
                                  const ConfigurationSpace& space, const RuleSet* rules,
                                  Rng& rng, EvolveStats* stats = nullptr);

struct GenerationState {
  int index = 0;
  std::vector<Configuration> population;
  std::vector<Configuration> accepted;
  Configuration best_config;
  double best_perf = 0;
  /// Relative improvement of best over the seed; 0 if the seed failed.
  double improvement_vs_seed = 0;
  /// Relative improvement of best over the previous generation's best.
  double improvement = 0;
  /// Distinct search configurations evaluated so far.
  std::size_t evaluations = 0;
};

struct TuneResult {
  SamplerKind sampler = SamplerKind::emcmc;
  Direction direction = Direction::minimize;
  Configuration seed_config;
  std::optional<double> seed_perf;
  Configuration best_config;
  std::optional<double> best_perf;
  std::vector<GenerationState> history;
  /// Best distinct successful search evaluations, best first.
  std::vector<EvaluationRecord> top_k;
  std::size_t evaluations = 0;
  std::string stop_reason;
  /// True when this run only confirmed an already completed journal.
  bool already_complete = false;

  /// Summary report: best, gain over the seed, top-K and history.
  json to_report() const;
};

/// Raised when the seed configuration is outside the space or violates
/// the rules.
class InvalidSeed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TuneContext {
  const ConfigurationSpace& space;
  const RuleSet* rules = nullptr;
  Executor& executor;
  /// Optional; when it was opened with Journal::resume the run replays
  /// through the existing entries.
  Journal* journal = nullptr;
};

TuneResult run_emcmc(TuneContext& ctx, const SamplerSettings& settings,
                     const Configuration& seed_config);
TuneResult run_ga(TuneContext& ctx, const SamplerSettings& settings,
                  const Configuration& seed_config);
TuneResult run_random(TuneContext& ctx, const SamplerSettings& settings,
                      const Configuration& seed_config);
TuneResult run_sampler(SamplerKind kind, TuneContext& ctx, const SamplerSettings& settings,
                       const Configuration& seed_config);

/// Journal header identifying (sampler, space, rules, settings, executor).
JournalHeader make_journal_header(SamplerKind kind, const ConfigurationSpace& space,
                                  const RuleSet* rules, const SamplerSettings& settings,
                                  const Executor& executor);

}  // namespace conex
