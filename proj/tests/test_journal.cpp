#include <gtest/gtest.h>

#include "conex/journal.hpp"
#include "conex/landscape.hpp"
#include "conex/sampler.hpp"
#include "test_support.hpp"

using namespace conex;

namespace {

struct Fixture {
  ConfigurationSpace space = test::grid_space(6, 4, 1);
  ExecutorSettings exec = [] {
    ExecutorSettings s;
    s.repeats = 2;
    return s;
  }();
  SamplerSettings settings = [] {
    SamplerSettings s;
    s.seed = 31;
    s.max_generations = 10;
    s.min_improvement = 0;
    s.population_size = 8;
    return s;
  }();

  Executor executor() const { return Executor(make_landscape("two_basin_deceptive", space), exec); }

  JournalHeader header(const Executor& ex) const {
    return make_journal_header(SamplerKind::emcmc, space, nullptr, settings, ex);
  }

  TuneResult fresh(const std::filesystem::path& path) const {
    auto ex = executor();
    auto journal = Journal::create(path, header(ex), false);
    TuneContext ctx{space, nullptr, ex, &journal};
    return run_emcmc(ctx, settings, default_configuration(space));
  }

  TuneResult resumed(const std::filesystem::path& path, ResumeState& state,
                     std::size_t* executions = nullptr) const {
    auto ex = executor();
    auto journal = Journal::resume(path, header(ex), space, &state, false);
    state.prime(ex.cache());
    TuneContext ctx{space, nullptr, ex, &journal};
    auto r = run_emcmc(ctx, settings, default_configuration(space));
    if (executions) *executions = ex.executions();
    return r;
  }
};

EvaluationRecord sample_record(const ConfigurationSpace& space) {
  EvaluationRecord r;
  r.config = default_configuration(space);
  r.performance = 12.5;
  r.repeats = {12, 13};
  r.generation = 4;
  r.member = 2;
  r.role = "member";
  r.diagnostics = "line one\nline \"two\"";
  return r;
}

}  // namespace

TEST(Journal, RecordRoundTrip) {
  auto space = test::grid_space(3, 3);
  auto r = sample_record(space);
  auto back = record_from_json(record_to_json(r), space);
  EXPECT_EQ(back.config, r.config);
  EXPECT_EQ(back.performance, r.performance);
  EXPECT_EQ(back.repeats, r.repeats);
  EXPECT_EQ(back.generation, 4);
  EXPECT_EQ(back.member, 2);
  EXPECT_EQ(back.role, "member");
  EXPECT_EQ(back.diagnostics, r.diagnostics);
  EXPECT_EQ(back.status, EvalStatus::ok);
}

TEST(Journal, AppendThenReopen) {
  auto dir = test::scratch_dir("journal-append");
  auto space = test::grid_space(3, 3);
  JournalHeader h{1, "emcmc", "a", "b", "c", 7};
  {
    auto j = Journal::create(dir / "j.jsonl", h);
    for (int i = 0; i < 999; ++i) j.append(json{{"type", "note"}, {"i", i}});
    j.append(sample_record(space));
  }
  auto entries = Journal::read_entries(dir / "j.jsonl");
  ASSERT_EQ(entries.size(), 1001u);
  EXPECT_EQ(JournalHeader::from_json(entries.front()), h);
  auto last = record_from_json(entries.back(), space);
  EXPECT_EQ(last.performance, 12.5);
  EXPECT_EQ(last.config, default_configuration(space));

  std::istringstream lines(test::read_file(dir / "j.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) EXPECT_NO_THROW(json::parse(line));
  EXPECT_EQ(n, 1001u);
}

TEST(Journal, TornTailIsTruncatedWithWarning) {
  auto dir = test::scratch_dir("journal-torn");
  Fixture f;
  f.fresh(dir / "j.jsonl");
  const std::string full = test::read_file(dir / "j.jsonl");
  const std::size_t lines_before = Journal::read_entries(dir / "j.jsonl").size();

  // Cut the file in the middle of its final line.
  const std::size_t last_start = full.rfind('\n', full.size() - 2) + 1;
  const std::string torn = full.substr(0, last_start + 10);
  test::write_file(dir / "j.jsonl", torn);

  ResumeState state;
  auto ex = f.executor();
  { auto j = Journal::resume(dir / "j.jsonl", f.header(ex), f.space, &state, false); }
  ASSERT_EQ(state.warnings.size(), 1u);
  EXPECT_NE(state.warnings[0].find("trunc"), std::string::npos);
  EXPECT_EQ(test::read_file(dir / "j.jsonl"), full.substr(0, last_start));
  EXPECT_EQ(Journal::read_entries(dir / "j.jsonl").size(), lines_before - 1);
}

TEST(Journal, MidFileCorruptionIsAnError) {
  auto dir = test::scratch_dir("journal-corrupt");
  Fixture f;
  f.fresh(dir / "j.jsonl");
  std::string text = test::read_file(dir / "j.jsonl");
  const std::size_t second = text.find('\n') + 1;
  text[second] = '#';
  test::write_file(dir / "j.jsonl", text);
  ResumeState state;
  auto ex = f.executor();
  EXPECT_THROW(Journal::resume(dir / "j.jsonl", f.header(ex), f.space, &state, false),
               JournalError);
}

TEST(Journal, ResumeRefusedOnChangedSettings) {
  auto dir = test::scratch_dir("journal-refuse");
  Fixture f;
  f.fresh(dir / "j.jsonl");
  Fixture changed = f;
  changed.settings.mutation_fraction = 0.2;
  ResumeState state;
  auto ex = changed.executor();
  try {
    Journal::resume(dir / "j.jsonl", changed.header(ex), changed.space, &state, false);
    FAIL() << "expected ResumeRefused";
  } catch (const ResumeRefused& e) {
    EXPECT_NE(std::string(e.what()).find("settings"), std::string::npos);
  }
  Fixture other_seed = f;
  other_seed.settings.seed = 32;
  auto ex2 = other_seed.executor();
  EXPECT_THROW(Journal::resume(dir / "j.jsonl", other_seed.header(ex2), f.space, &state, false),
               ResumeRefused);
}

TEST(Journal, ResumeOfCompletedRunIsNoOp) {
  auto dir = test::scratch_dir("journal-complete");
  Fixture f;
  auto first = f.fresh(dir / "j.jsonl");
  const std::string before = test::read_file(dir / "j.jsonl");
  ResumeState state;
  std::size_t executions = 99;
  auto again = f.resumed(dir / "j.jsonl", state, &executions);
  EXPECT_TRUE(state.complete);
  EXPECT_EQ(executions, 0u);
  EXPECT_EQ(test::read_file(dir / "j.jsonl"), before);
  EXPECT_EQ(again.to_report().dump(), first.to_report().dump());
}

TEST(Journal, ResumeAfterGenerationThreeMatchesUninterrupted) {
  auto dir = test::scratch_dir("journal-resume");
  Fixture f;
  auto reference = f.fresh(dir / "ref.jsonl");
  const std::string ref_text = test::read_file(dir / "ref.jsonl");
  ASSERT_EQ(reference.history.size(), 10u);

  // Keep everything up to and including the generation-3 summary line.
  const std::string marker = "\"type\":\"generation\"";
  std::size_t pos = 0;
  for (int g = 0; g < 3; ++g) pos = ref_text.find(marker, pos + 1);
  const std::size_t cut = ref_text.find('\n', pos) + 1;
  test::write_file(dir / "run.jsonl", ref_text.substr(0, cut));

  ResumeState state;
  std::size_t executions = 0;
  auto result = f.resumed(dir / "run.jsonl", state, &executions);
  EXPECT_FALSE(state.complete);
  ASSERT_TRUE(state.last_generation.has_value());
  EXPECT_EQ((*state.last_generation)["gen"], 3);
  EXPECT_GT(executions, 0u);
  EXPECT_EQ(result.best_config, reference.best_config);
  EXPECT_EQ(result.best_perf, reference.best_perf);
  EXPECT_EQ(result.to_report().dump(), reference.to_report().dump());
  EXPECT_EQ(test::read_file(dir / "run.jsonl"), ref_text);
}

TEST(Journal, DivergentReplayIsAnError) {
  auto dir = test::scratch_dir("journal-diverge");
  Fixture f;
  f.fresh(dir / "j.jsonl");
  // Rewrite one journaled performance so replay no longer matches.
  std::string text = test::read_file(dir / "j.jsonl");
  auto entries = Journal::read_entries(dir / "j.jsonl");
  std::string out;
  bool changed = false;
  for (auto& e : entries) {
    if (!changed && e["type"] == "eval" && e["role"] == "member") {
      e["member"] = 1000;
      changed = true;
    }
    out += e.dump() + "\n";
  }
  test::write_file(dir / "j.jsonl", out);
  ResumeState state;
  EXPECT_THROW(f.resumed(dir / "j.jsonl", state), JournalError);
}
