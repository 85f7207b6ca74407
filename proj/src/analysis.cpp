#include "conex/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conex {

namespace {

long long ceil_count(double x) {
  // Quotients that should be whole (43200 / 144) must not round up.
  const double tol = 1e-9 * std::max(1.0, std::abs(x));
  return static_cast<long long>(std::ceil(x - tol));
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

GainReport gain(double perf_default, double perf_best) {
  if (!(perf_default > 0)) {
    throw std::invalid_argument("gain: default performance must be positive");
  }
  return {perf_default, perf_best, std::abs(perf_default - perf_best) / perf_default * 100.0};
}

double improvement_pct(double perf_default, double perf, Direction direction) {
  return relative_improvement(perf_default, perf, direction) * 100.0;
}

// --- top-K ------------------------------------------------------------------

TopKReport evaluate_topk(const std::vector<Configuration>& topk, Executor& executor,
                         const Configuration& default_config, Direction direction) {
  if (topk.empty()) throw std::invalid_argument("evaluate_topk: empty top-K list");
  TopKReport report;
  report.default_config = default_config;

  std::vector<Configuration> batch;
  batch.reserve(topk.size() + 1);
  batch.push_back(default_config);
  batch.insert(batch.end(), topk.begin(), topk.end());
  auto records = executor.evaluate_batch(batch);

  if (records[0].status == EvalStatus::ok) report.default_perf = records[0].performance;
  const bool has_baseline = report.default_perf && *report.default_perf > 0;

  for (std::size_t i = 1; i < records.size(); ++i) {
    TopKRow row;
    row.rank = i;
    row.config = records[i].config;
    row.status = records[i].status;
    row.performance = records[i].performance;
    if (row.performance && has_baseline) {
      row.improvement_pct = improvement_pct(*report.default_perf, *row.performance, direction);
    }
    report.rows.push_back(std::move(row));
  }

  std::optional<double> best;
  std::size_t next = 0;
  static constexpr std::size_t kPrefixes[] = {1, 3, 5, 10, 25, 50};
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& perf = report.rows[i].performance;
    if (perf && (!best || better(*perf, *best, direction))) best = perf;
    while (next < std::size(kPrefixes) && kPrefixes[next] == i + 1) {
      TopKPrefix p;
      p.k = kPrefixes[next];
      p.best_perf = best;
      if (best && has_baseline) {
        p.improvement_pct = improvement_pct(*report.default_perf, *best, direction);
      }
      report.prefixes.push_back(p);
      ++next;
    }
  }
  return report;
}

json TopKReport::to_json() const {
  json j;
  j["default"] = {{"config", configuration_to_json(default_config)},
                  {"performance", optional_number(default_perf)}};
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"rank", r.rank},
                         {"status", status_name(r.status)},
                         {"performance", optional_number(r.performance)},
                         {"improvement_pct", optional_number(r.improvement_pct)},
                         {"config", configuration_to_json(r.config)}});
  }
  j["rows"] = std::move(rows_json);
  json prefix_json = json::array();
  for (const auto& p : prefixes) {
    prefix_json.push_back({{"k", p.k},
                           {"best_perf", optional_number(p.best_perf)},
                           {"improvement_pct", optional_number(p.improvement_pct)}});
  }
  j["prefixes"] = std::move(prefix_json);
  return j;
}

// --- sensitivity --------------------------------------------------------------

SensitivityReport sensitivity(const Configuration& best, const Configuration& default_config,
                              Executor& executor, const RuleSet* rules, Direction direction) {
  auto base = executor.evaluate_batch(std::vector<Configuration>{default_config, best});
  if (base[0].status != EvalStatus::ok) {
    throw EvaluatorAbort("sensitivity: default configuration could not be measured (" +
                         std::string(status_name(base[0].status)) + ")");
  }
  if (base[1].status != EvalStatus::ok) {
    throw EvaluatorAbort("sensitivity: best configuration could not be measured (" +
                         std::string(status_name(base[1].status)) + ")");
  }
  SensitivityReport report;
  report.perf_default = *base[0].performance;
  report.perf_best = *base[1].performance;
  const double delta_best = relative_improvement(report.perf_default, report.perf_best, direction);

  std::vector<SensitivityEntry> pending;
  std::vector<Configuration> resets;
  for (const auto& [name, value] : best) {
    const Value* def = default_config.find(name);
    if (def == nullptr || *def == value) continue;
    SensitivityEntry e;
    e.parameter = name;
    e.best_value = value;
    e.default_value = *def;
    e.delta_best = delta_best;
    Configuration reset = best;
    reset.set(name, *def);
    if (rules != nullptr && !rules->is_valid(reset)) {
      e.status = "invalid";
    } else {
      resets.push_back(std::move(reset));
    }
    pending.push_back(std::move(e));
  }

  auto records = executor.evaluate_batch(resets);
  std::vector<SensitivityEntry> computed;
  std::vector<SensitivityEntry> skipped;
  std::size_t r = 0;
  for (auto& e : pending) {
    if (e.status == "invalid") {
      skipped.push_back(std::move(e));
      continue;
    }
    const auto& rec = records[r++];
    if (rec.status != EvalStatus::ok) {
      e.status = std::string(status_name(rec.status));
      skipped.push_back(std::move(e));
      continue;
    }
    e.perf_reset = rec.performance;
    e.delta_i = relative_improvement(report.perf_default, *rec.performance, direction);
    e.sensitivity = e.delta_best - e.delta_i;
    computed.push_back(std::move(e));
  }
  std::stable_sort(computed.begin(), computed.end(),
                   [](const auto& a, const auto& b) { return a.sensitivity > b.sensitivity; });
  report.entries = std::move(computed);
  for (auto& e : skipped) report.entries.push_back(std::move(e));
  return report;
}

json SensitivityReport::to_json() const {
  json j;
  j["perf_default"] = perf_default;
  j["perf_best"] = perf_best;
  json list = json::array();
  for (const auto& e : entries) {
    json row{{"parameter", e.parameter},
             {"best_value", conex::to_json(e.best_value)},
             {"default_value", conex::to_json(e.default_value)},
             {"status", e.status},
             {"perf_reset", optional_number(e.perf_reset)}};
    const bool ok = e.status == "ok";
    row["delta_best"] = e.delta_best;
    row["delta_i"] = ok ? json(e.delta_i) : json(nullptr);
    row["sensitivity"] = ok ? json(e.sensitivity) : json(nullptr);
    list.push_back(std::move(row));
  }
  j["entries"] = std::move(list);
  return j;
}

// --- break-even ---------------------------------------------------------------

BreakEvenReport break_even(double overhead, double t_default, double t_opt) {
  if (!(t_default > 0)) throw std::invalid_argument("break_even: t_default must be positive");
  if (!(t_opt > 0)) throw std::invalid_argument("break_even: t_opt must be positive");
  if (!(overhead >= 0)) throw std::invalid_argument("break_even: overhead must be >= 0");
  BreakEvenReport r;
  r.overhead = overhead;
  r.t_default = t_default;
  r.t_opt = t_opt;
  r.overhead_equiv_runs = overhead / t_default;
  if (t_opt < t_default) {
    r.additional_runs = ceil_count(overhead / (t_default - t_opt));
    r.total_runs = ceil_count(r.overhead_equiv_runs) + *r.additional_runs;
  }
  return r;
}

json BreakEvenReport::to_json() const {
  return json{{"overhead", overhead},
              {"t_default", t_default},
              {"t_opt", t_opt},
              {"overhead_equiv_runs", overhead_equiv_runs},
              {"additional_runs", additional_runs ? json(*additional_runs) : json(nullptr)},
              {"total_runs", total_runs ? json(*total_runs) : json(nullptr)}};
}

}  // namespace conex
