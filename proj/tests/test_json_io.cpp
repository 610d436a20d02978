#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "mixbound/json_io.hpp"

using namespace mixbound;
using namespace mixbound::io;

TEST(JsonIo, ProfileRoundTrip) {
  const auto g = mixing::MixingProfile::geometric(0.7);
  const auto back = profile_from_json(profile_to_json(g));
  EXPECT_DOUBLE_EQ(back.c_effective(), 0.7);
  const auto t = mixing::MixingProfile::tabulated({0.2, 0.1});
  const auto tb = profile_from_json(profile_to_json(t));
  ASSERT_EQ(tb.table().size(), 2u);
  EXPECT_DOUBLE_EQ(tb.table()[1], 0.1);
  EXPECT_TRUE(profile_from_json(profile_to_json(mixing::MixingProfile::independent())).is_independent());
  const auto ch = profile_from_json(profile_to_json(mixing::markov2_mixing(0.3, 0.3)));
  EXPECT_NEAR(*ch.eigenvalue(), 0.4, 1e-15);
  EXPECT_THROW(profile_from_json(json{{"kind", "weird"}}), ConfigError);
  EXPECT_THROW(profile_from_json(json{{"kind", "geometric"}, {"c", -1.0}}), ConfigError);
  EXPECT_THROW(profile_from_json(json{{"kind", "geometric"}, {"c", "x"}}), ConfigError);
  EXPECT_THROW(profile_from_json(json{{"kind", "geometric"}, {"c", 1.0}, {"extra", 1}}), ConfigError);
}

TEST(JsonIo, ProcessRoundTrip) {
  for (const auto& spec : {lab::ProcessSpec::chain(0.2, 0.4, 0.0, 2.0), lab::ProcessSpec::ar1(0.5, 1.0, 0.5),
                           lab::ProcessSpec::rademacher(), lab::ProcessSpec::uniform(3.0)}) {
    const auto j = process_to_json(spec);
    const auto back = process_from_json(j);
    EXPECT_EQ(process_to_json(back), j);
    EXPECT_EQ(back.name(), spec.name());
  }
  EXPECT_THROW(process_from_json(json{{"kind", "chain"}, {"p", 1.5}}), ConfigError);
  EXPECT_THROW(process_from_json(json::array()), ConfigError);
}

TEST(JsonIo, SchemeAndPlan) {
  const auto s = cantor::build_cantor(16.0, 0.125);
  const auto j = scheme_to_json(s);
  EXPECT_EQ(j["k"], 3);
  EXPECT_DOUBLE_EQ(j["measure"].get<double>(), 10.71875);
  EXPECT_EQ(j["leaves"].size(), 8u);
  const auto p = plan_to_json(cantor::choose_mdp_blocking(1'000'000, std::pow(1e6, -0.25)));
  EXPECT_EQ(p["branch"], "B");
  EXPECT_EQ(p["k"], 12);
  EXPECT_TRUE(p["invariant_violations"].empty());
}

TEST(JsonIo, Overrides) {
  const json j = {{"bern1", {{"C1", 1.0}, {"C2", 2.0}, {"C3", 0.5}}}, {"C_prime", 10.0}};
  const auto o = overrides_from_json(j);
  ASSERT_TRUE(o.bern1);
  EXPECT_DOUBLE_EQ(o.bern1->C3, 0.5);
  EXPECT_FALSE(o.bern2);
  EXPECT_DOUBLE_EQ(*o.C_prime, 10.0);
  EXPECT_THROW(overrides_from_json(json{{"bern3", 1}}), ConfigError);
}

TEST(JsonIo, HashAndFormat) {
  const json a = {{"n", 100}, {"x", 50.0}};
  const json b = {{"x", 50.0}, {"n", 100}};
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(json{{"n", 101}, {"x", 50.0}}));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  const auto m = metadata(a);
  EXPECT_EQ(m["tool"], kToolName);
  EXPECT_EQ(m["config_hash"], config_hash(a));
}

TEST(JsonIo, AtomicWriteAndRead) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "mixbound_json_io_test";
  fs::create_directories(dir);
  const auto file = dir / "out.json";
  atomic_write(file, "{\"a\": 1}");
  EXPECT_EQ(read_json_file(file)["a"], 1);
  for (const auto& e : fs::directory_iterator(dir))
    EXPECT_EQ(e.path().filename(), "out.json");
  EXPECT_THROW(atomic_write(dir / "missing" / "x.json", "{}"), IoError);
  EXPECT_THROW(read_json_file(dir / "nope.json"), IoError);
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{not json";
  }
  EXPECT_THROW(read_json_file(dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(JsonIo, Csv) {
  CsvWriter w(metadata(json{{"a", 1}}), {"x", "y"});
  w.row({"1", "2"});
  const auto s = w.str();
  EXPECT_NE(s.find("# tool=mixbound\n"), std::string::npos);
  EXPECT_NE(s.find("# config_hash="), std::string::npos);
  EXPECT_NE(s.find("x,y\n1,2\n"), std::string::npos);
  EXPECT_THROW(w.row({"1"}), std::invalid_argument);
}
