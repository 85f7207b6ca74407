#include "conex/bench.hpp"

#include <cmath>
#include <limits>

namespace conex {

double BenchSummary::mean_best_cost(SamplerKind kind) const {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.sampler != kind) continue;
    sum += r.best_cost;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

std::size_t BenchSummary::within(SamplerKind kind, double tolerance) const {
  if (!optimum) throw std::logic_error("benchmark ran without an exhaustive optimum");
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.sampler == kind && r.best_cost <= optimum->cost * (1.0 + tolerance)) ++n;
  }
  return n;
}

json BenchSummary::to_json() const {
  json j;
  j["landscape"] = landscape;
  j["budget"] = budget ? json(*budget) : json(nullptr);
  if (optimum) {
    j["optimum"] = {{"cost", optimum->cost},
                    {"valid_configurations", optimum->valid_count},
                    {"config", configuration_to_json(optimum->config)}};
  } else {
    j["optimum"] = nullptr;
  }
  json samplers = json::object();
  for (const auto& r : runs) {
    auto name = std::string(sampler_name(r.sampler));
    if (!samplers.contains(name)) samplers[name] = {{"mean_best_cost", mean_best_cost(r.sampler)}};
  }
  j["samplers"] = std::move(samplers);
  json cmp = json::array();
  for (const auto& c : comparisons) {
    cmp.push_back({{"first", sampler_name(c.first)},
                   {"second", sampler_name(c.second)},
                   {"pairs", c.pairs},
                   {"first_not_worse", c.first_not_worse},
                   {"fraction", c.fraction()}});
  }
  j["comparisons"] = std::move(cmp);
  json runs_json = json::array();
  for (const auto& r : runs) {
    runs_json.push_back({{"sampler", sampler_name(r.sampler)},
                         {"seed", r.seed},
                         {"best_cost", r.best_cost},
                         {"best_perf", r.best_perf ? json(*r.best_perf) : json(nullptr)},
                         {"evaluations", r.evaluations},
                         {"stop_reason", r.stop_reason}});
  }
  j["runs"] = std::move(runs_json);
  return j;
}

BenchSummary run_benchmark(const ConfigurationSpace& space, const RuleSet* rules,
                           const LandscapeDescriptor& landscape, const BenchSettings& settings) {
  if (settings.samplers.empty()) throw std::invalid_argument("benchmark needs a sampler");
  auto bench = make_landscape(landscape, space);

  BenchSummary summary;
  summary.landscape = landscape.canonical();
  summary.budget = settings.budget;
  if (!summary.budget && settings.budget_fraction) {
    const double size = space_size(space).convert_to<double>();
    summary.budget = static_cast<std::size_t>(std::ceil(*settings.budget_fraction * size - 1e-9));
  }
  if (settings.exhaustive) summary.optimum = exhaustive_optimum(*bench, rules);

  const Configuration seed_config = default_configuration(space);
  std::vector<std::vector<double>> costs(settings.samplers.size());
  for (std::size_t s = 0; s < settings.seeds; ++s) {
    const std::uint64_t seed = settings.first_seed + s;
    for (std::size_t k = 0; k < settings.samplers.size(); ++k) {
      SamplerSettings ss = settings.sampler;
      ss.seed = seed;
      ss.budget = summary.budget;
      Executor executor(bench, settings.executor);
      TuneContext ctx{space, rules, executor, nullptr};
      TuneResult result = run_sampler(settings.samplers[k], ctx, ss, seed_config);

      BenchRun run;
      run.sampler = settings.samplers[k];
      run.seed = seed;
      run.best_cost = bench->true_cost(result.best_config);
      run.best_perf = result.best_perf;
      run.evaluations = result.evaluations;
      run.stop_reason = result.stop_reason;
      costs[k].push_back(run.best_cost);
      summary.runs.push_back(std::move(run));
    }
  }

  for (std::size_t k = 1; k < settings.samplers.size(); ++k) {
    PairwiseWins w;
    w.first = settings.samplers[0];
    w.second = settings.samplers[k];
    w.pairs = settings.seeds;
    for (std::size_t s = 0; s < settings.seeds; ++s) {
      if (costs[0][s] <= costs[k][s]) ++w.first_not_worse;
    }
    summary.comparisons.push_back(w);
  }
  return summary;
}

}  // namespace conex
