// conex: configuration-space exploration from the command line.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "conex/analysis.hpp"
#include "conex/bench.hpp"
#include "conex/journal.hpp"
#include "conex/landscape.hpp"
#include "conex/sampler.hpp"
#include "conex/similarity.hpp"
#include "conex/space.hpp"
#include "conex/validity.hpp"

using namespace conex;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAbort = 3;
constexpr int kExitInvalidSeed = 4;
constexpr int kExitJournal = 5;

/// Bad flag combinations detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- output -------------------------------------------------------------

/// One block of output. Rendered as an aligned table, or with
/// --format records as one JSON object per row carrying the same fields.
struct Section {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) { rows.push_back(std::move(row)); }
};

std::string cell_text(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
    return buf;
  }
  return v.dump();
}

void emit(const std::vector<Section>& sections, bool records, std::ostream& out) {
  if (records) {
    for (const auto& s : sections) {
      for (const auto& row : s.rows) {
        json obj;
        obj["record"] = s.name;
        for (std::size_t i = 0; i < s.columns.size(); ++i) obj[s.columns[i]] = row[i];
        out << obj.dump() << '\n';
      }
    }
    return;
  }
  bool first = true;
  for (const auto& s : sections) {
    if (!first) out << '\n';
    first = false;
    out << "## " << s.name << '\n';
    std::vector<std::size_t> width(s.columns.size());
    std::vector<std::vector<std::string>> text;
    for (std::size_t i = 0; i < s.columns.size(); ++i) width[i] = s.columns[i].size();
    for (const auto& row : s.rows) {
      std::vector<std::string> t;
      for (std::size_t i = 0; i < row.size(); ++i) {
        t.push_back(cell_text(row[i]));
        width[i] = std::max(width[i], t.back().size());
      }
      text.push_back(std::move(t));
    }
    auto line = [&](const std::vector<std::string>& cells) {
      std::string l;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) l += "  ";
        l += cells[i];
        if (i + 1 < cells.size()) l += std::string(width[i] - cells[i].size(), ' ');
      }
      out << l << '\n';
    };
    line(s.columns);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    line(rule);
    for (const auto& t : text) line(t);
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_json_file(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// --- shared option groups -------------------------------------------------

struct EvaluatorOptions {
  std::string command;
  std::string synthetic;
  int repeats = 3;
  double timeout = 0;
  std::string render = "properties";
  std::string perf_pattern;
  std::string failure_policy = "skip";
  double penalty = 1e9;
  std::string aggregate = "mean";
  std::size_t jobs = 1;

  void attach(CLI::App* app) {
    app->add_option("--command", command,
                    "Benchmark command; the configuration is passed per --render and the "
                    "performance is read from stdout");
    app->add_option("--synthetic", synthetic,
                    "Synthetic landscape, e.g. two_basin_deceptive:seed=3");
    app->add_option("--repeats", repeats, "Measurements per configuration")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--timeout", timeout, "Seconds per measurement (0 = none)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--render", render, "How the command receives the configuration")
        ->check(CLI::IsMember({"env", "properties", "json"}))
        ->capture_default_str();
    app->add_option("--perf-pattern", perf_pattern,
                    "Regex with one group capturing the performance from stdout");
    app->add_option("--failure-policy", failure_policy, "What a failed measurement does")
        ->check(CLI::IsMember({"abort", "penalize", "skip"}))
        ->capture_default_str();
    app->add_option("--penalty", penalty, "Performance assigned by --failure-policy penalize");
    app->add_option("--aggregate", aggregate, "How repeats are combined")
        ->check(CLI::IsMember({"mean", "median"}))
        ->capture_default_str();
    app->add_option("--jobs", jobs, "Concurrent evaluations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  Executor make(const ConfigurationSpace& space) const {
    if (command.empty() == synthetic.empty()) {
      throw UsageError("exactly one of --command or --synthetic is required");
    }
    ExecutorSettings s;
    s.command_template = command;
    s.render_mode = render_mode_from_name(render);
    s.perf_pattern = perf_pattern;
    s.repeats = repeats;
    s.timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000.0));
    s.failure_policy = failure_policy_from_name(failure_policy);
    s.penalty = penalty;
    s.aggregation = aggregate == "median" ? Aggregation::median : Aggregation::mean;
    s.jobs = jobs;
    std::shared_ptr<Benchmark> bench;
    if (!synthetic.empty()) {
      bench = make_landscape(synthetic, space);
    } else {
      bench = std::make_shared<CommandBenchmark>(s);
    }
    return Executor(std::move(bench), s);
  }
};

struct Loaded {
  ConfigurationSpace space;
  std::optional<RuleSet> rules;
  const RuleSet* rules_ptr() const { return rules ? &*rules : nullptr; }
};

Loaded load_inputs(const std::string& space_path, const std::string& rules_path) {
  Loaded l;
  l.space = load_space(space_path);
  if (!rules_path.empty()) l.rules = load_rules(rules_path, l.space);
  return l;
}

Configuration config_or_default(const std::string& path, const ConfigurationSpace& space) {
  return path.empty() ? default_configuration(space) : load_configuration(path, space);
}

// --- tune ---------------------------------------------------------------

struct TuneOptions {
  std::string space;
  std::string rules;
  std::string sampler = "emcmc";
  std::uint64_t seed = 0;
  int generations = 30;
  std::size_t population = 0;
  std::optional<std::size_t> budget;
  std::optional<double> budget_seconds;
  double min_improvement = 0.001;
  double crossover = 0.5;
  double mutation = 0.06;
  double sigma = 50;
  std::size_t top_k = 50;
  bool maximize = false;
  std::string journal;
  bool resume = false;
  std::string report;
  std::string seed_config;
  EvaluatorOptions eval;
};

std::filesystem::path default_journal_path(const TuneOptions& o, const ConfigurationSpace& space) {
  std::filesystem::path dir = ".";
  if (const char* env = std::getenv("CONEX_JOURNAL_DIR"); env != nullptr && *env != '\0') {
    dir = env;
  }
  return dir / (space.name() + "-" + o.sampler + "-seed" + std::to_string(o.seed) + ".jsonl");
}

int run_tune(const TuneOptions& o, bool records) {
  Loaded in = load_inputs(o.space, o.rules);
  Executor executor = o.eval.make(in.space);
  Configuration seed_config = config_or_default(o.seed_config, in.space);

  SamplerKind kind = sampler_from_name(o.sampler);
  SamplerSettings settings;
  settings.population_size = o.population;
  settings.max_generations = o.generations;
  settings.min_improvement = o.min_improvement;
  settings.crossover_fraction = o.crossover;
  settings.mutation_fraction = o.mutation;
  settings.seed = o.seed;
  settings.budget = o.budget;
  settings.budget_seconds = o.budget_seconds;
  settings.top_k = o.top_k;
  settings.acceptance.sigma = o.sigma;
  settings.acceptance.direction = o.maximize ? Direction::maximize : Direction::minimize;
  settings.validate();

  const std::filesystem::path journal_path =
      o.journal.empty() ? default_journal_path(o, in.space) : std::filesystem::path(o.journal);
  const JournalHeader header =
      make_journal_header(kind, in.space, in.rules_ptr(), settings, executor);

  ResumeState state;
  std::optional<Journal> journal;
  if (o.resume && std::filesystem::exists(journal_path)) {
    journal.emplace(Journal::resume(journal_path, header, in.space, &state));
    for (const auto& w : state.warnings) std::cerr << "warning: " << w << '\n';
    state.prime(executor.cache());
  } else {
    journal.emplace(Journal::create(journal_path, header));
  }

  TuneContext ctx{in.space, in.rules_ptr(), executor, &*journal};
  TuneResult result = run_sampler(kind, ctx, settings, seed_config);
  result.already_complete = state.complete;

  std::filesystem::path report_path = o.report;
  if (report_path.empty()) {
    report_path = journal_path;
    report_path.replace_extension(".report.json");
  }
  json report = result.to_report();
  report["space"] = in.space.name();
  report["journal"] = journal_path.string();
  report["settings"] = settings.to_json();
  report["evaluator"] = executor.descriptor();
  write_json_file(report_path, report);

  Section summary{"summary", {"field", "value"}, {}};
  summary.add({"sampler", std::string(sampler_name(kind))});
  summary.add({"seed", o.seed});
  summary.add({"stop_reason", result.stop_reason});
  summary.add({"resumed_complete_run", result.already_complete});
  summary.add({"evaluations", result.evaluations});
  summary.add({"executions", executor.executions()});
  summary.add({"seed_performance", optional_json(result.seed_perf)});
  summary.add({"best_performance", optional_json(result.best_perf)});
  summary.add({"improvement_pct", report["improvement_pct"]});
  summary.add({"gain_pct", report["gain_pct"]});
  summary.add({"journal", journal_path.string()});
  summary.add({"report", report_path.string()});

  Section best{"best_config", {"parameter", "value", "seed_value"}, {}};
  for (const auto& [name, value] : result.best_config) {
    const Value* s = result.seed_config.find(name);
    best.add({name, to_json(value), s ? to_json(*s) : json(nullptr)});
  }

  Section top{"top_k", {"rank", "performance", "improvement_pct"}, {}};
  for (std::size_t i = 0; i < result.top_k.size(); ++i) {
    const double perf = *result.top_k[i].performance;
    json imp = nullptr;
    if (result.seed_perf && *result.seed_perf > 0) {
      imp = improvement_pct(*result.seed_perf, perf, settings.acceptance.direction);
    }
    top.add({i + 1, perf, imp});
  }

  Section history{"history",
                  {"generation", "population", "accepted", "best_perf", "improvement",
                   "evaluations"},
                  {}};
  for (const auto& g : result.history) {
    history.add({g.index, g.population.size(), g.accepted.size(), g.best_perf, g.improvement,
                 g.evaluations});
  }
  emit({summary, best, top, history}, records, std::cout);
  return kExitOk;
}

// --- validate -----------------------------------------------------------

int run_validate(const std::string& space_path, const std::string& rules_path,
                 const std::string& config_path, bool records) {
  Loaded in = load_inputs(space_path, rules_path);
  Configuration config = load_configuration(config_path, in.space);
  ValidityReport report = in.rules->check(config);
  Section s{"violations", {"rule", "message"}, {}};
  for (const auto& v : report.violations) s.add({v.rule_id, v.message});
  Section verdict{"verdict", {"valid", "violations"}, {{report.valid(), report.violations.size()}}};
  emit({verdict, s}, records, std::cout);
  return report.valid() ? kExitOk : kExitInvalid;
}

// --- space-info ---------------------------------------------------------

std::string scientific(const BigInt& n) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", n.convert_to<double>());
  return buf;
}

int run_space_info(const std::string& space_path, bool records) {
  ConfigurationSpace space = load_space(space_path);
  const BigInt size = space_size(space);
  std::map<std::string, std::size_t> kinds;
  for (const auto& p : space.relevant()) ++kinds[std::string(kind_name(p.kind))];

  Section summary{"summary", {"field", "value"}, {}};
  summary.add({"name", space.name()});
  summary.add({"parameters", space.parameters().size()});
  summary.add({"relevant", space.dimensionality()});
  for (const auto& [k, n] : kinds) summary.add({"relevant_" + k, n});
  summary.add({"space_size", size.str()});
  summary.add({"space_size_approx", scientific(size)});

  Section params{"parameters", {"name", "kind", "relevant", "default", "count", "candidates"}, {}};
  for (const auto& p : space.parameters()) {
    std::string cands;
    for (std::size_t i = 0; i < p.candidates.size(); ++i) {
      cands += (i ? "," : "") + to_text(p.candidates[i]);
    }
    params.add({p.name, std::string(kind_name(p.kind)), p.relevant, to_json(p.default_value),
                p.candidates.size(), cands});
  }
  emit({summary, params}, records, std::cout);
  return kExitOk;
}

// --- eval-topk ------------------------------------------------------------

int run_eval_topk(const std::string& space_path, const std::string& report_path,
                  std::size_t k, const std::string& default_path, bool maximize,
                  const EvaluatorOptions& eval, const std::string& output, bool records) {
  ConfigurationSpace space = load_space(space_path);
  json report = read_json_file(report_path);
  if (!report.contains("top_k") || !report["top_k"].is_array()) {
    throw ParseError(report_path + ": no top_k list");
  }
  std::vector<Configuration> topk;
  for (const auto& row : report["top_k"]) {
    if (topk.size() >= k) break;
    topk.push_back(configuration_from_json(row.at("config"), space));
  }
  Executor executor = eval.make(space);
  TopKReport r = evaluate_topk(topk, executor, config_or_default(default_path, space),
                               maximize ? Direction::maximize : Direction::minimize);
  if (!output.empty()) write_json_file(output, r.to_json());

  Section base{"default", {"performance"}, {{optional_json(r.default_perf)}}};
  Section rows{"rows", {"rank", "status", "performance", "improvement_pct"}, {}};
  for (const auto& row : r.rows) {
    rows.add({row.rank, std::string(status_name(row.status)), optional_json(row.performance),
              optional_json(row.improvement_pct)});
  }
  Section prefixes{"prefixes", {"top", "best_perf", "improvement_pct"}, {}};
  for (const auto& p : r.prefixes) {
    prefixes.add({p.k, optional_json(p.best_perf), optional_json(p.improvement_pct)});
  }
  emit({base, rows, prefixes}, records, std::cout);
  return kExitOk;
}

// --- sensitivity ----------------------------------------------------------

int run_sensitivity(const std::string& space_path, const std::string& rules_path,
                    const std::string& report_path, const std::string& config_path,
                    const std::string& default_path, bool maximize, const EvaluatorOptions& eval,
                    const std::string& output, bool records) {
  Loaded in = load_inputs(space_path, rules_path);
  if (report_path.empty() == config_path.empty()) {
    throw UsageError("exactly one of --report or --config is required");
  }
  Configuration best;
  if (!report_path.empty()) {
    json report = read_json_file(report_path);
    if (!report.contains("best")) throw ParseError(report_path + ": no best configuration");
    best = configuration_from_json(report["best"].at("config"), in.space);
  } else {
    best = load_configuration(config_path, in.space);
  }
  Executor executor = eval.make(in.space);
  SensitivityReport r =
      sensitivity(best, config_or_default(default_path, in.space), executor, in.rules_ptr(),
                  maximize ? Direction::maximize : Direction::minimize);
  if (!output.empty()) write_json_file(output, r.to_json());

  Section base{"baseline", {"perf_default", "perf_best"}, {{r.perf_default, r.perf_best}}};
  Section entries{"entries",
                  {"parameter", "status", "best_value", "default_value", "perf_reset",
                   "delta_best", "delta_i", "sensitivity"},
                  {}};
  for (const auto& e : r.entries) {
    const bool ok = e.status == "ok";
    entries.add({e.parameter, e.status, to_json(e.best_value), to_json(e.default_value),
                 optional_json(e.perf_reset), e.delta_best, ok ? json(e.delta_i) : json(nullptr),
                 ok ? json(e.sensitivity) : json(nullptr)});
  }
  emit({base, entries}, records, std::cout);
  return kExitOk;
}

// --- similar --------------------------------------------------------------

int run_similar(const std::vector<std::string>& traces, double threshold, std::size_t ngram,
                const std::string& output, bool records) {
  std::vector<JobTraceProfile> profiles;
  for (const auto& t : traces) profiles.push_back(parse_trace(t));
  SimilarityOptions opts;
  opts.ngram = ngram;
  SimilarityMatrix m = similarity_matrix(profiles, threshold, opts);
  if (!output.empty()) write_json_file(output, m.to_json());

  Section pairs{"pairs",
                {"a", "b", "overall", "sequence", "term_sets", "term_freq", "numeric", "similar"},
                {}};
  for (std::size_t i = 0; i < m.jobs.size(); ++i) {
    for (std::size_t k = i + 1; k < m.jobs.size(); ++k) {
      const auto& s = m.scores[i][k];
      pairs.add({m.jobs[i], m.jobs[k], s.overall, s.sequence, s.term_sets, s.term_freq,
                 s.numeric, s.overall > threshold});
    }
  }
  Section groups{"similar_sets", {"job", "similar_to"}, {}};
  for (std::size_t i = 0; i < m.jobs.size(); ++i) {
    std::string names;
    for (std::size_t k : m.similar[i]) names += (names.empty() ? "" : ",") + m.jobs[k];
    groups.add({m.jobs[i], names});
  }
  emit({pairs, groups}, records, std::cout);
  return kExitOk;
}

// --- breakeven ------------------------------------------------------------

int run_breakeven(double overhead, double t_default, double t_opt, bool records) {
  BreakEvenReport r = break_even(overhead, t_default, t_opt);
  Section s{"break_even", {"field", "value"}, {}};
  s.add({"overhead_s", r.overhead});
  s.add({"default_runtime_s", r.t_default});
  s.add({"optimized_runtime_s", r.t_opt});
  s.add({"saving_per_run_s", r.t_default - r.t_opt});
  s.add({"overhead_equiv_runs", r.overhead_equiv_runs});
  s.add({"additional_runs", r.additional_runs ? json(*r.additional_runs) : json("never")});
  s.add({"total_runs", r.total_runs ? json(*r.total_runs) : json("never")});
  emit({s}, records, std::cout);
  return kExitOk;
}

// --- bench-synth ----------------------------------------------------------

struct BenchOptions {
  std::string space;
  std::string rules;
  std::vector<std::string> landscapes{"two_basin_deceptive", "pairwise_interaction"};
  std::vector<std::string> samplers{"emcmc", "ga", "random"};
  std::size_t seeds = 20;
  std::uint64_t seed = 1;
  std::optional<std::size_t> budget;
  std::optional<double> budget_fraction;
  int generations = 1000;
  double min_improvement = 0;
  std::size_t population = 0;
  int repeats = 1;
  double tolerance = 0.05;
  std::string output;
};

int run_bench(const BenchOptions& o, bool records) {
  Loaded in = load_inputs(o.space, o.rules);
  BenchSettings bs;
  bs.samplers.clear();
  for (const auto& s : o.samplers) bs.samplers.push_back(sampler_from_name(s));
  bs.seeds = o.seeds;
  bs.first_seed = o.seed;
  bs.budget = o.budget;
  bs.budget_fraction = o.budget_fraction;
  bs.sampler.max_generations = o.generations;
  bs.sampler.min_improvement = o.min_improvement;
  bs.sampler.population_size = o.population;
  bs.executor.repeats = o.repeats;
  bs.exhaustive = space_size(in.space) <= 2'000'000;

  json all = json::array();
  Section samplers{"samplers",
                   {"landscape", "sampler", "mean_best_cost", "within_tolerance", "runs"},
                   {}};
  Section comparisons{"comparisons", {"landscape", "first", "second", "pairs", "first_not_worse",
                                      "fraction"},
                      {}};
  Section optima{"optima", {"landscape", "budget", "optimum_cost", "valid_configurations"}, {}};
  for (const auto& desc : o.landscapes) {
    BenchSummary s = run_benchmark(in.space, in.rules_ptr(), parse_landscape_descriptor(desc), bs);
    all.push_back(s.to_json());
    optima.add({s.landscape, s.budget ? json(*s.budget) : json(nullptr),
                s.optimum ? json(s.optimum->cost) : json(nullptr),
                s.optimum ? json(s.optimum->valid_count) : json(nullptr)});
    for (auto kind : bs.samplers) {
      samplers.add({s.landscape, std::string(sampler_name(kind)), s.mean_best_cost(kind),
                    s.optimum ? json(s.within(kind, o.tolerance)) : json(nullptr), o.seeds});
    }
    for (const auto& c : s.comparisons) {
      comparisons.add({s.landscape, std::string(sampler_name(c.first)),
                       std::string(sampler_name(c.second)), c.pairs, c.first_not_worse,
                       c.fraction()});
    }
  }
  if (!o.output.empty()) write_json_file(o.output, all);
  emit({optima, samplers, comparisons}, records, std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conex: search a discretized configuration space for fast configurations"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string format = "table";
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"table", "records"}))
      ->capture_default_str();

  // tune
  TuneOptions tune;
  auto* tune_cmd = app.add_subcommand("tune", "Search the space with a sampler");
  tune_cmd->add_option("--space", tune.space, "Space file (JSON)")->required();
  tune_cmd->add_option("--sampler", tune.sampler, "Search strategy")
      ->check(CLI::IsMember({"emcmc", "ga", "random"}))
      ->capture_default_str();
  tune_cmd->add_option("--rules", tune.rules, "Validity rules file (JSON)");
  tune_cmd->add_option("--seed", tune.seed, "Random seed")->capture_default_str();
  tune_cmd->add_option("--generations", tune.generations, "Maximum generations")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  tune_cmd->add_option("--population", tune.population,
                       "Configurations per generation (default 4 x parameters)");
  tune_cmd->add_option("--budget", tune.budget, "Maximum distinct configurations evaluated");
  tune_cmd->add_option("--budget-seconds", tune.budget_seconds, "Wall-clock budget");
  tune_cmd->add_option("--min-improvement", tune.min_improvement,
                       "Stop after two generations improving less than this fraction")
      ->capture_default_str();
  tune_cmd->add_option("--crossover", tune.crossover, "Crossover fraction")->capture_default_str();
  tune_cmd->add_option("--mutation", tune.mutation, "Mutation fraction")->capture_default_str();
  tune_cmd->add_option("--sigma", tune.sigma, "Acceptance sharpness")->capture_default_str();
  tune_cmd->add_option("--top-k", tune.top_k, "Configurations kept in the report")
      ->capture_default_str();
  tune_cmd->add_flag("--maximize", tune.maximize, "Larger performance values are better");
  tune_cmd->add_option("--journal", tune.journal,
                       "Journal path (default $CONEX_JOURNAL_DIR/<space>-<sampler>-seed<N>.jsonl)");
  tune_cmd->add_flag("--resume", tune.resume, "Continue the run recorded in the journal");
  tune_cmd->add_option("--report", tune.report, "Report path (default next to the journal)");
  tune_cmd->add_option("--seed-config", tune.seed_config,
                       "Starting configuration (default: the space defaults)");
  tune.eval.attach(tune_cmd);

  // validate
  std::string v_space, v_rules, v_config;
  auto* validate_cmd = app.add_subcommand("validate", "Check a configuration against rules");
  validate_cmd->add_option("--space", v_space, "Space file")->required();
  validate_cmd->add_option("--rules", v_rules, "Rules file")->required();
  validate_cmd->add_option("--config", v_config, "Configuration file (flat JSON object)")
      ->required();

  // space-info
  std::string i_space;
  auto* info_cmd = app.add_subcommand("space-info", "Describe a configuration space");
  info_cmd->add_option("--space", i_space, "Space file")->required();

  // eval-topk
  std::string t_space, t_report, t_default, t_output;
  std::size_t t_k = 50;
  bool t_max = false;
  EvaluatorOptions t_eval;
  auto* topk_cmd =
      app.add_subcommand("eval-topk", "Re-evaluate a report's top configurations");
  topk_cmd->add_option("--space", t_space, "Space file")->required();
  topk_cmd->add_option("--report", t_report, "Report written by tune")->required();
  topk_cmd->add_option("--top-k", t_k, "How many to evaluate")->capture_default_str();
  topk_cmd->add_option("--default-config", t_default, "Baseline configuration");
  topk_cmd->add_flag("--maximize", t_max, "Larger performance values are better");
  topk_cmd->add_option("--output", t_output, "Write the table as JSON");
  t_eval.attach(topk_cmd);

  // sensitivity
  std::string s_space, s_rules, s_report, s_config, s_default, s_output;
  bool s_max = false;
  EvaluatorOptions s_eval;
  auto* sens_cmd =
      app.add_subcommand("sensitivity", "Reset each tuned parameter to its default in turn");
  sens_cmd->add_option("--space", s_space, "Space file")->required();
  sens_cmd->add_option("--rules", s_rules, "Rules file");
  sens_cmd->add_option("--report", s_report, "Report written by tune (uses its best)");
  sens_cmd->add_option("--config", s_config, "Best configuration file");
  sens_cmd->add_option("--default-config", s_default, "Baseline configuration");
  sens_cmd->add_flag("--maximize", s_max, "Larger performance values are better");
  sens_cmd->add_option("--output", s_output, "Write the entries as JSON");
  s_eval.attach(sens_cmd);

  // similar
  std::vector<std::string> traces;
  double threshold = kDefaultSimilarityThreshold;
  std::size_t ngram = 3;
  std::string m_output;
  auto* sim_cmd = app.add_subcommand("similar", "Pairwise similarity of system-call traces");
  sim_cmd->add_option("traces", traces, "Trace files, one call per line")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--threshold", threshold, "Jobs scoring above this are similar")
      ->capture_default_str();
  sim_cmd->add_option("--ngram", ngram, "Length of call subsequences")->capture_default_str();
  sim_cmd->add_option("--output", m_output, "Write the matrix as JSON");

  // breakeven
  double overhead = 0, t_def = 0, t_opt = 0;
  auto* be_cmd = app.add_subcommand("breakeven", "Runs needed to amortize tuning");
  be_cmd->add_option("--overhead", overhead, "Tuning cost in seconds")->required();
  be_cmd->add_option("--default-runtime", t_def, "Seconds per run with the default")
      ->required();
  be_cmd->add_option("--optimized-runtime", t_opt, "Seconds per run when tuned")->required();

  // bench-synth
  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand(
      "bench-synth", "Paired sampler comparison on synthetic landscapes (budget-driven)");
  bench_cmd->add_option("--space", bench.space, "Space file")->required();
  bench_cmd->add_option("--rules", bench.rules, "Rules file");
  bench_cmd->add_option("--landscape", bench.landscapes, "Landscape descriptors")
      ->capture_default_str();
  bench_cmd->add_option("--samplers", bench.samplers, "First is compared against the rest")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--seeds", bench.seeds, "Paired runs")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "First seed")->capture_default_str();
  auto* b_budget = bench_cmd->add_option("--budget", bench.budget, "Evaluations per run");
  bench_cmd->add_option("--budget-fraction", bench.budget_fraction, "Budget as fraction of space")
      ->excludes(b_budget);
  bench_cmd->add_option("--generations", bench.generations, "Maximum generations")
      ->capture_default_str();
  bench_cmd->add_option("--min-improvement", bench.min_improvement, "Stall threshold")
      ->capture_default_str();
  bench_cmd->add_option("--population", bench.population, "Configurations per generation");
  bench_cmd->add_option("--repeats", bench.repeats, "Measurements per configuration")
      ->capture_default_str();
  bench_cmd->add_option("--tolerance", bench.tolerance, "Relative distance to the optimum")
      ->capture_default_str();
  bench_cmd->add_option("--output", bench.output, "Write full results as JSON");

  auto usage_failure = [&](const std::string& message) {
    std::cerr << "error: " << message << "\n\n";
    auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_failure(e.what());
  }

  const bool records = format == "records";
  try {
    if (*tune_cmd) return run_tune(tune, records);
    if (*validate_cmd) return run_validate(v_space, v_rules, v_config, records);
    if (*info_cmd) return run_space_info(i_space, records);
    if (*topk_cmd) {
      return run_eval_topk(t_space, t_report, t_k, t_default, t_max, t_eval, t_output, records);
    }
    if (*sens_cmd) {
      return run_sensitivity(s_space, s_rules, s_report, s_config, s_default, s_max, s_eval,
                             s_output, records);
    }
    if (*sim_cmd) return run_similar(traces, threshold, ngram, m_output, records);
    if (*be_cmd) return run_breakeven(overhead, t_def, t_opt, records);
    if (*bench_cmd) return run_bench(bench, records);
  } catch (const UsageError& e) {
    return usage_failure(e.what());
  } catch (const InvalidSeed& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidSeed;
  } catch (const EvaluatorAbort& e) {
    std::cerr << "error: evaluator aborted: " << e.what() << '\n';
    return kExitAbort;
  } catch (const ResumeRefused& e) {
    std::cerr << "error: resume refused: " << e.what() << '\n';
    return kExitJournal;
  } catch (const JournalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitJournal;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
