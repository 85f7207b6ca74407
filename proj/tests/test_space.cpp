#include <gtest/gtest.h>

#include <set>

#include "conex/rng.hpp"
#include "conex/space.hpp"
#include "test_support.hpp"

using namespace conex;

namespace {

json three_param_doc() {
  return json::parse(R"({
    "name": "three",
    "parameters": [
      {"name": "flag", "kind": "boolean", "default": false, "candidates": [false, true]},
      {"name": "level", "kind": "integer", "default": 2, "candidates": [1, 2, 3]},
      {"name": "mode", "kind": "categorical", "default": "a", "candidates": ["a", "b", "c", "d"]},
      {"name": "host", "kind": "string", "default": "h1", "candidates": ["h1"], "relevant": false}
    ]
  })");
}

std::set<Value> as_set(const std::vector<Value>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Space, ParsesThreeRelevantParameters) {
  auto space = parse_space(three_param_doc());
  EXPECT_EQ(space.name(), "three");
  EXPECT_EQ(space.dimensionality(), 3u);
  EXPECT_EQ(space.parameters().size(), 4u);
  EXPECT_EQ(space.find("level")->kind, ParamKind::integer);
  EXPECT_FALSE(space.find("host")->relevant);
}

TEST(Space, DefaultOutsideCandidatesIsSchemaError) {
  auto doc = three_param_doc();
  doc["parameters"][1]["default"] = 7;
  EXPECT_THROW(parse_space(doc), SchemaError);
}

TEST(Space, DuplicateNameAndEmptyCandidatesAreSchemaErrors) {
  auto dup = three_param_doc();
  dup["parameters"][1]["name"] = "flag";
  EXPECT_THROW(parse_space(dup), SchemaError);
  auto empty = three_param_doc();
  empty["parameters"][2]["candidates"] = json::array();
  EXPECT_THROW(parse_space(empty), SchemaError);
}

TEST(Space, MalformedFileIsParseError) {
  auto dir = test::scratch_dir("space-malformed");
  test::write_file(dir / "bad.json", "{\"name\": \"x\", \"parameters\": [");
  EXPECT_THROW(load_space(dir / "bad.json"), ParseError);
}

TEST(Space, HadoopSpaceHas44RelevantParameters) {
  auto space = load_space(test::source_path("data/hadoop_space.json"));
  EXPECT_EQ(space.dimensionality(), 44u);
  const double size = space_size(space).convert_to<double>();
  EXPECT_GE(size, 1e28);
  EXPECT_LT(size, 1e29);
}

TEST(Space, HadoopSpaceCarriesReferenceDefaults) {
  auto space = load_space(test::source_path("data/hadoop_space.json"));
  auto d = default_configuration(space);
  EXPECT_EQ(d.at("dfs.blocksize"), Value{std::int64_t{2}});
  EXPECT_EQ(d.at("mapred.job.ubertask.enable"), Value{false});
  EXPECT_EQ(d.at("mapred.map.java.opts"), Value{std::string("-Xmx1024m")});
  EXPECT_EQ(d.at("mapred.shuffle.merge.percent"), Value{0.66});
}

TEST(Space, SizeIsExactProduct) {
  std::vector<ParameterSpec> ps(3);
  for (std::size_t i = 0; i < 3; ++i) {
    ps[i].name = "p" + std::to_string(i);
    for (std::size_t v = 0; v < i + 2; ++v) ps[i].candidates.emplace_back(std::int64_t(v));
    ps[i].default_value = std::int64_t{0};
  }
  EXPECT_EQ(space_size(ConfigurationSpace("s", ps)), 24);

  ParameterSpec b;
  b.name = "b";
  b.kind = ParamKind::boolean;
  b.candidates = {false, true};
  b.default_value = false;
  EXPECT_EQ(space_size(ConfigurationSpace("b", {b})), 2);
}

TEST(Space, SizeIsExactBeyondDoublePrecision) {
  // 7^30 = 22539340290692258087863249 does not fit a double exactly.
  auto space = test::grid_space(30, 7);
  EXPECT_EQ(space_size(space).str(), "22539340290692258087863249");
}

TEST(Discretize, EvenSpacingAroundDefault) {
  auto v = discretize_numeric(100, 0.10, 5, true);
  std::vector<Value> want{std::int64_t{90}, std::int64_t{95}, std::int64_t{100},
                          std::int64_t{105}, std::int64_t{110}};
  EXPECT_EQ(v, want);
}

TEST(Discretize, FloatValues) {
  auto v = discretize_numeric(0.66, 0.10, 3, false);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_NEAR(std::get<double>(v[0]), 0.594, 1e-12);
  EXPECT_DOUBLE_EQ(std::get<double>(v[1]), 0.66);
  EXPECT_NEAR(std::get<double>(v[2]), 0.726, 1e-12);
}

TEST(Discretize, IntegerCollapseNamesParameter) {
  try {
    discretize_numeric(1, 0.10, 3, true, "dfs.replication");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("dfs.replication"), std::string::npos);
  }
}

TEST(Discretize, AlwaysContainsDefault) {
  // Even counts do not land on the midpoint by spacing alone.
  for (std::size_t count : {2u, 4u, 6u}) {
    auto v = discretize_numeric(1000, 0.2, count, true);
    EXPECT_TRUE(as_set(v).count(Value{std::int64_t{1000}})) << count;
  }
}

TEST(Discretize, RangeSugarInSpaceFile) {
  auto doc = json::parse(R"({"name": "r", "parameters": [
    {"name": "mb", "kind": "integer", "default": 100, "range": {"percent": 0.1, "count": 5}}]})");
  auto space = parse_space(doc);
  EXPECT_EQ(space.find("mb")->candidates.size(), 5u);
  EXPECT_EQ(space.find("mb")->candidates.front(), Value{std::int64_t{90}});
}

TEST(RandomConfiguration, BooleanIsFair) {
  ParameterSpec b;
  b.name = "b";
  b.kind = ParamKind::boolean;
  b.candidates = {false, true};
  b.default_value = false;
  ConfigurationSpace space("b", {b});
  Rng rng(12345);
  int trues = 0;
  for (int i = 0; i < 10000; ++i) trues += std::get<bool>(random_configuration(space, rng).at("b"));
  EXPECT_GE(trues, 4700);
  EXPECT_LE(trues, 5300);
}

TEST(RandomConfiguration, DeterministicUnderSeed) {
  auto space = load_space(test::source_path("data/hadoop_space.json"));
  Rng a(99), b(99);
  EXPECT_EQ(random_configuration(space, a), random_configuration(space, b));
}

TEST(RandomConfiguration, MembershipHoldsUnderFuzzing) {
  auto space = load_space(test::source_path("data/hadoop_space.json"));
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    auto c = random_configuration(space, rng);
    ASSERT_NO_THROW(space.check_membership(c));
    EXPECT_EQ(c.size(), space.dimensionality());
    EXPECT_EQ(c.find("fs.defaultFS"), nullptr);
  }
}

TEST(Space, SizeMatchesEnumeration) {
  for (auto* file : {"data/synthetic/tiny27.json", "data/synthetic/oracle1728.json"}) {
    auto space = load_space(test::source_path(file));
    std::size_t count = 0;
    std::set<std::string> keys;
    enumerate_all(space, [&](const Configuration& c) {
      ++count;
      keys.insert(c.key());
      return true;
    });
    EXPECT_EQ(BigInt(count), space_size(space)) << file;
    EXPECT_EQ(keys.size(), count) << file;
  }
}

TEST(Space, SerializationRoundTrip) {
  auto dir = test::scratch_dir("space-roundtrip");
  for (auto* file : {"data/hadoop_space.json", "data/synthetic/tiny27.json"}) {
    auto space = load_space(test::source_path(file));
    save_space(space, dir / "copy.json");
    EXPECT_EQ(load_space(dir / "copy.json"), space) << file;
  }
}

TEST(Configuration, FlatRecordRoundTripAndFixedParameters) {
  auto space = parse_space(three_param_doc());
  auto d = default_configuration(space);
  auto j = configuration_to_json(d);
  EXPECT_EQ(configuration_from_json(j, space), d);
  j["host"] = "h1";  // fixed value echoed back is accepted and dropped
  EXPECT_EQ(configuration_from_json(j, space), d);
  j["host"] = "h2";
  EXPECT_THROW(configuration_from_json(j, space), SchemaError);
  j.erase("host");
  j["level"] = 9;
  EXPECT_THROW(configuration_from_json(j, space), SchemaError);
}
