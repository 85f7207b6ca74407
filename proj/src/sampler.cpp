#include "conex/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <unordered_set>

#include "conex/digest.hpp"

namespace conex {

namespace {

// Stream tags; each names one independent use of randomness.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kAcceptStream = 2;
constexpr std::uint64_t kEvolveStream = 3;
constexpr std::uint64_t kRandomStream = 4;

constexpr std::size_t kDrawAttempts = 1000;

std::size_t guarded_ceil(double x) {
  // 0.5 * 10 must stay 5 even if the product lands a hair above.
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace

double relative_improvement(double best, double candidate, Direction direction) {
  if (!(best > 0)) {
    throw std::invalid_argument("relative improvement needs a positive best performance, got " +
                                to_text(Value{best}));
  }
  const double delta = (best - candidate) / best;
  return direction == Direction::minimize ? delta : -delta;
}

double acceptance_probability(double best, double candidate, const AcceptancePolicy& policy) {
  const double delta = relative_improvement(best, candidate, policy.direction);
  if (delta == 0) return 1.0;
  return std::exp(policy.sigma * delta);
}

bool accept(double best, double candidate, const AcceptancePolicy& policy, Rng& rng) {
  const double p = acceptance_probability(best, candidate, policy);
  return rng.uniform01() < p;
}

bool better(double a, double b, Direction direction) {
  return direction == Direction::minimize ? a < b : a > b;
}

std::string_view sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::emcmc: return "emcmc";
    case SamplerKind::ga: return "ga";
    case SamplerKind::random: return "random";
  }
  return "emcmc";
}

SamplerKind sampler_from_name(std::string_view name) {
  if (name == "emcmc") return SamplerKind::emcmc;
  if (name == "ga") return SamplerKind::ga;
  if (name == "random") return SamplerKind::random;
  throw SchemaError("unknown sampler '" + std::string(name) + "' (expected emcmc, ga or random)");
}

// --- settings -----------------------------------------------------------

void SamplerSettings::validate() const {
  if (max_generations < 0) throw SchemaError("max_generations must be >= 0");
  if (!(crossover_fraction > 0 && crossover_fraction <= 1)) {
    throw SchemaError("crossover_fraction must be in (0, 1]");
  }
  if (!(mutation_fraction >= 0 && mutation_fraction <= 1)) {
    throw SchemaError("mutation_fraction must be in [0, 1]");
  }
  if (!(min_improvement >= 0)) throw SchemaError("min_improvement must be >= 0");
  if (stall_generations < 1) throw SchemaError("stall_generations must be >= 1");
  if (invalid_retry_limit < 0) throw SchemaError("invalid_retry_limit must be >= 0");
  if (!(acceptance.sigma > 0)) throw SchemaError("acceptance sigma must be > 0");
  if (budget_seconds && !(*budget_seconds > 0)) throw SchemaError("budget_seconds must be > 0");
}

std::size_t SamplerSettings::population_for(const ConfigurationSpace& space) const {
  return population_size > 0 ? population_size : 4 * space.dimensionality();
}

json SamplerSettings::to_json() const {
  json j;
  j["population_size"] = population_size;
  j["max_generations"] = max_generations;
  j["min_improvement"] = min_improvement;
  j["stall_generations"] = stall_generations;
  j["crossover_fraction"] = crossover_fraction;
  j["mutation_fraction"] = mutation_fraction;
  j["seed"] = seed;
  j["invalid_retry_limit"] = invalid_retry_limit;
  j["budget"] = budget ? json(*budget) : json(nullptr);
  j["budget_seconds"] = budget_seconds ? json(*budget_seconds) : json(nullptr);
  j["top_k"] = top_k;
  j["sigma"] = acceptance.sigma;
  j["direction"] = acceptance.direction == Direction::minimize ? "minimize" : "maximize";
  j["dedup"] = dedup;
  return j;
}

std::size_t crossover_count(std::size_t n, double fraction) {
  return std::min(n, guarded_ceil(fraction * static_cast<double>(n)));
}

std::size_t mutation_count(std::size_t n, double fraction) {
  if (fraction == 0 || n == 0) return 0;
  return std::min(n, std::max<std::size_t>(1, guarded_ceil(fraction * static_cast<double>(n))));
}

// --- evolution ----------------------------------------------------------

std::optional<Configuration> random_valid_configuration(const ConfigurationSpace& space,
                                                        const RuleSet* rules, Rng& rng,
                                                        std::size_t max_attempts) {
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    Configuration c = random_configuration(space, rng);
    if (rules == nullptr || rules->is_valid(c)) return c;
  }
  return std::nullopt;
}

std::vector<Configuration> evolve(const Configuration& best,
                                  const std::vector<Configuration>& parents,
                                  const SamplerSettings& settings,
                                  const ConfigurationSpace& space, const RuleSet* rules,
                                  Rng& rng, EvolveStats* stats) {
  if (parents.empty()) throw std::invalid_argument("evolve: no parents");
  const auto& relevant = space.relevant();
  const std::size_t n = relevant.size();
  const auto crossover = rng.subset(n, crossover_count(n, settings.crossover_fraction));
  const auto mutate = rng.subset(n, mutation_count(n, settings.mutation_fraction));
  const std::uint64_t child_base = rng.next();

  EvolveStats local;
  EvolveStats& st = stats != nullptr ? *stats : local;

  std::vector<Configuration> children;
  children.reserve(parents.size());
  for (std::size_t k = 0; k < parents.size(); ++k) {
    Rng child_rng = Rng::stream(child_base, 0, k);
    Configuration base = parents[k];
    for (std::size_t j : crossover) base.set(relevant[j].name, best.at(relevant[j].name));

    std::optional<Configuration> child;
    const int attempts = mutate.empty() ? 1 : 1 + settings.invalid_retry_limit;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) ++st.retries;
      Configuration c = base;
      for (std::size_t j : mutate) {
        const auto& cands = relevant[j].candidates;
        c.set(relevant[j].name, cands[child_rng.index(cands.size())]);
      }
      if (rules == nullptr || rules->is_valid(c)) {
        child = std::move(c);
        break;
      }
    }
    if (!child) {
      child = random_valid_configuration(space, rules, child_rng, kDrawAttempts);
      if (child) {
        ++st.random_fallbacks;
      } else {
        ++st.best_fallbacks;
        child = best;
      }
    }
    ++st.children;
    children.push_back(std::move(*child));
  }
  return children;
}

// --- result -------------------------------------------------------------

json TuneResult::to_report() const {
  json j;
  j["sampler"] = sampler_name(sampler);
  j["direction"] = direction == Direction::minimize ? "minimize" : "maximize";
  j["stop_reason"] = stop_reason;
  j["evaluations"] = evaluations;
  j["seed"] = {{"config", configuration_to_json(seed_config)},
               {"performance", seed_perf ? json(*seed_perf) : json(nullptr)}};
  j["best"] = {{"config", configuration_to_json(best_config)},
               {"performance", best_perf ? json(*best_perf) : json(nullptr)}};
  if (seed_perf && best_perf && *seed_perf > 0) {
    const double rel = relative_improvement(*seed_perf, *best_perf, direction);
    j["improvement_pct"] = rel * 100.0;
    j["gain_pct"] = std::abs(*seed_perf - *best_perf) / *seed_perf * 100.0;
  } else {
    j["improvement_pct"] = nullptr;
    j["gain_pct"] = nullptr;
  }
  json top = json::array();
  for (std::size_t i = 0; i < top_k.size(); ++i) {
    top.push_back({{"rank", i + 1},
                   {"performance", *top_k[i].performance},
                   {"config", configuration_to_json(top_k[i].config)}});
  }
  j["top_k"] = std::move(top);
  json hist = json::array();
  for (const auto& g : history) {
    hist.push_back({{"generation", g.index},
                    {"population", g.population.size()},
                    {"accepted", g.accepted.size()},
                    {"best_perf", g.best_perf},
                    {"improvement", g.improvement},
                    {"improvement_vs_seed", g.improvement_vs_seed},
                    {"evaluations", g.evaluations}});
  }
  j["history"] = std::move(hist);
  return j;
}

// --- drivers ------------------------------------------------------------

namespace {

/// State shared by every sampler: budget accounting, best tracking,
/// journaling and top-K collection.
class RunState {
 public:
  RunState(TuneContext& ctx, const SamplerSettings& settings, SamplerKind kind)
      : ctx_(ctx), settings_(settings), start_(std::chrono::steady_clock::now()) {
    result.sampler = kind;
    result.direction = settings.acceptance.direction;
  }

  Direction direction() const { return settings_.acceptance.direction; }

  void check_seed(const Configuration& seed) {
    try {
      ctx_.space.check_membership(seed);
    } catch (const SchemaError& e) {
      throw InvalidSeed(std::string("seed configuration is not in the space: ") + e.what());
    }
    if (ctx_.rules != nullptr) {
      auto report = ctx_.rules->check(seed);
      if (!report.valid()) {
        std::string msg = "seed configuration violates the rules:";
        for (const auto& v : report.violations) msg += "\n  " + v.rule_id + ": " + v.message;
        throw InvalidSeed(msg);
      }
    }
  }

  /// Evaluates and journals the seed. `counts_as_best` is false for the
  /// random sampler, where the seed is only a baseline.
  void evaluate_seed(const Configuration& seed, bool counts_as_best) {
    result.seed_config = seed;
    result.best_config = seed;
    EvaluationRecord rec = ctx_.executor.evaluate(seed);
    rec.generation = 0;
    rec.member = 0;
    rec.role = counts_as_best ? "seed" : "baseline";
    log(rec);
    if (rec.status == EvalStatus::ok) {
      result.seed_perf = rec.performance;
      if (counts_as_best) result.best_perf = rec.performance;
    }
  }

  /// Drops the members that would exceed the budget. Members already seen
  /// are free.
  std::vector<Configuration> admit(const std::vector<Configuration>& population) {
    std::vector<Configuration> admitted;
    for (const auto& c : population) {
      std::string key = c.key();
      if (!seen_.count(key)) {
        if (settings_.budget && seen_.size() >= *settings_.budget) {
          budget_hit_ = true;
          break;
        }
        seen_.insert(std::move(key));
      }
      admitted.push_back(c);
    }
    if (settings_.budget && seen_.size() >= *settings_.budget) budget_hit_ = true;
    return admitted;
  }

  std::vector<EvaluationRecord> evaluate(const std::vector<Configuration>& members, int gen,
                                         const char* role) {
    auto records = ctx_.executor.evaluate_batch(members);
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].generation = gen;
      records[i].member = static_cast<int>(i);
      records[i].role = role;
      log(records[i]);
    }
    return records;
  }

  /// Updates best from one record; returns true if it improved.
  bool offer(const EvaluationRecord& rec) {
    if (rec.status != EvalStatus::ok) return false;
    if (!result.best_perf || better(*rec.performance, *result.best_perf, direction())) {
      result.best_perf = rec.performance;
      result.best_config = rec.config;
      return true;
    }
    return false;
  }

  void close_generation(int gen, std::vector<Configuration> population,
                        std::vector<Configuration> accepted,
                        const std::vector<int>& accepted_members,
                        const std::optional<double>& previous_best) {
    GenerationState st;
    st.index = gen;
    st.population = std::move(population);
    st.accepted = std::move(accepted);
    st.best_config = result.best_config;
    st.best_perf = result.best_perf.value_or(0.0);
    if (result.best_perf) {
      if (previous_best) {
        st.improvement = relative_improvement(*previous_best, *result.best_perf, direction());
      } else {
        st.improvement = 1.0;
      }
      if (result.seed_perf && *result.seed_perf > 0) {
        st.improvement_vs_seed =
            relative_improvement(*result.seed_perf, *result.best_perf, direction());
      }
    }
    st.evaluations = seen_.size();
    if (ctx_.journal != nullptr) {
      json entry;
      entry["type"] = "generation";
      entry["gen"] = gen;
      entry["size"] = st.population.size();
      entry["accepted"] = accepted_members;
      entry["best_perf"] = result.best_perf ? json(*result.best_perf) : json(nullptr);
      entry["best"] = result.best_config.key();
      entry["improvement"] = st.improvement;
      entry["evaluations"] = st.evaluations;
      ctx_.journal->append(entry);
    }
    result.history.push_back(std::move(st));
  }

  double history_improvement() const { return result.history.back().improvement; }
  bool budget_exhausted() const { return budget_hit_; }
  std::size_t distinct() const { return seen_.size(); }
  bool out_of_time() const {
    if (!settings_.budget_seconds) return false;
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    return elapsed.count() >= *settings_.budget_seconds;
  }

  TuneResult finish(std::string stop_reason) {
    result.stop_reason = std::move(stop_reason);
    result.evaluations = seen_.size();
    build_top_k();
    if (ctx_.journal != nullptr) {
      json entry;
      entry["type"] = "complete";
      entry["stop_reason"] = result.stop_reason;
      entry["best_perf"] = result.best_perf ? json(*result.best_perf) : json(nullptr);
      entry["best"] = configuration_to_json(result.best_config);
      entry["evaluations"] = result.evaluations;
      ctx_.journal->append(entry);
    }
    return std::move(result);
  }

  TuneResult result;

 private:
  void log(const EvaluationRecord& rec) {
    if (ctx_.journal != nullptr) ctx_.journal->append(rec);
    records_.push_back(rec);
  }

  void build_top_k() {
    std::vector<const EvaluationRecord*> pool;
    std::unordered_set<std::string> keys;
    for (const auto& r : records_) {
      if (r.status != EvalStatus::ok || r.role == "baseline") continue;
      if (keys.insert(r.config.key()).second) pool.push_back(&r);
    }
    const Direction dir = direction();
    std::sort(pool.begin(), pool.end(), [dir](const auto* a, const auto* b) {
      if (*a->performance != *b->performance) {
        return better(*a->performance, *b->performance, dir);
      }
      return a->config.key() < b->config.key();
    });
    if (pool.size() > settings_.top_k) pool.resize(settings_.top_k);
    for (const auto* r : pool) result.top_k.push_back(*r);
  }

  TuneContext& ctx_;
  const SamplerSettings& settings_;
  std::chrono::steady_clock::time_point start_;
  std::set<std::string> seen_;
  bool budget_hit_ = false;
  std::vector<EvaluationRecord> records_;
};

TuneResult run_evolutionary(TuneContext& ctx, const SamplerSettings& settings,
                            const Configuration& seed_config, bool greedy) {
  settings.validate();
  RunState run(ctx, settings, greedy ? SamplerKind::ga : SamplerKind::emcmc);
  run.check_seed(seed_config);
  run.evaluate_seed(seed_config, true);
  if (settings.max_generations == 0) return run.finish("max_generations");
  if (settings.budget && *settings.budget == 0) return run.finish("budget");

  const std::size_t n = settings.population_for(ctx.space);
  std::vector<Configuration> population;
  population.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(settings.seed, kInitStream, 1, i);
    auto c = random_valid_configuration(ctx.space, ctx.rules, rng, kDrawAttempts);
    population.push_back(c ? std::move(*c) : seed_config);
  }

  int stalled = 0;
  for (int gen = 1;; ++gen) {
    population = run.admit(population);
    if (population.empty()) return run.finish("budget");

    const std::optional<double> previous_best = run.result.best_perf;
    auto records = run.evaluate(population, gen, "member");

    std::vector<Configuration> accepted;
    std::vector<int> accepted_members;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& rec = records[i];
      if (rec.status != EvalStatus::ok) continue;
      bool take;
      if (!previous_best) {
        take = true;
      } else if (greedy) {
        take = relative_improvement(*previous_best, *rec.performance, run.direction()) > 0;
      } else {
        Rng rng = Rng::stream(settings.seed, kAcceptStream, static_cast<std::uint64_t>(gen), i);
        take = accept(*previous_best, *rec.performance, settings.acceptance, rng);
      }
      if (take) {
        accepted.push_back(rec.config);
        accepted_members.push_back(static_cast<int>(i));
      }
      run.offer(rec);
    }

    run.close_generation(gen, population, accepted, accepted_members, previous_best);
    if (run.history_improvement() < settings.min_improvement) {
      ++stalled;
    } else {
      stalled = 0;
    }

    if (run.budget_exhausted()) return run.finish("budget");
    if (stalled >= settings.stall_generations) return run.finish("converged");
    if (gen >= settings.max_generations) return run.finish("max_generations");
    if (run.out_of_time()) return run.finish("time_budget");

    const auto& parents = accepted.empty() ? population : accepted;
    Rng rng = Rng::stream(settings.seed, kEvolveStream, static_cast<std::uint64_t>(gen));
    population = evolve(run.result.best_config, parents, settings, ctx.space, ctx.rules, rng);
  }
}

}  // namespace

TuneResult run_emcmc(TuneContext& ctx, const SamplerSettings& settings,
                     const Configuration& seed_config) {
  return run_evolutionary(ctx, settings, seed_config, false);
}

TuneResult run_ga(TuneContext& ctx, const SamplerSettings& settings,
                  const Configuration& seed_config) {
  return run_evolutionary(ctx, settings, seed_config, true);
}

TuneResult run_random(TuneContext& ctx, const SamplerSettings& settings,
                      const Configuration& seed_config) {
  settings.validate();
  SamplerSettings effective = settings;
  const std::size_t n = settings.population_for(ctx.space);
  if (!effective.budget) {
    effective.budget = n * static_cast<std::size_t>(std::max(settings.max_generations, 0));
  }
  RunState run(ctx, effective, SamplerKind::random);
  run.check_seed(seed_config);
  run.evaluate_seed(seed_config, false);

  const std::size_t budget = *effective.budget;
  std::unordered_set<std::string> drawn;
  std::size_t draws = 0;
  bool exhausted = false;
  for (int gen = 1; draws < budget && !exhausted; ++gen) {
    std::vector<Configuration> batch;
    while (batch.size() < n && draws < budget) {
      Rng rng = Rng::stream(settings.seed, kRandomStream, draws);
      std::optional<Configuration> pick;
      for (std::size_t attempt = 0; attempt < kDrawAttempts; ++attempt) {
        auto c = random_valid_configuration(ctx.space, ctx.rules, rng, kDrawAttempts);
        if (!c) break;
        if (settings.dedup && drawn.count(c->key())) continue;
        pick = std::move(c);
        break;
      }
      if (!pick) {
        exhausted = true;
        break;
      }
      drawn.insert(pick->key());
      batch.push_back(std::move(*pick));
      ++draws;
    }
    if (batch.empty()) break;

    batch = run.admit(batch);
    const std::optional<double> previous_best = run.result.best_perf;
    auto records = run.evaluate(batch, gen, "sample");
    for (const auto& rec : records) run.offer(rec);
    run.close_generation(gen, batch, {}, {}, previous_best);
    if (run.out_of_time()) return run.finish("time_budget");
  }
  return run.finish(exhausted ? "space_exhausted" : "budget");
}

TuneResult run_sampler(SamplerKind kind, TuneContext& ctx, const SamplerSettings& settings,
                       const Configuration& seed_config) {
  switch (kind) {
    case SamplerKind::emcmc: return run_emcmc(ctx, settings, seed_config);
    case SamplerKind::ga: return run_ga(ctx, settings, seed_config);
    case SamplerKind::random: return run_random(ctx, settings, seed_config);
  }
  return run_emcmc(ctx, settings, seed_config);
}

JournalHeader make_journal_header(SamplerKind kind, const ConfigurationSpace& space,
                                  const RuleSet* rules, const SamplerSettings& settings,
                                  const Executor& executor) {
  JournalHeader h;
  h.sampler = std::string(sampler_name(kind));
  h.space_hash = digest_hex(space_to_json(space).dump());
  h.rules_hash = rules != nullptr ? rules->digest() : digest_hex("");
  json s{{"sampler", h.sampler},
         {"settings", settings.to_json()},
         {"executor", executor.descriptor()}};
  h.settings_hash = digest_hex(s.dump());
  h.seed = settings.seed;
  return h;
}

}  // namespace conex
