#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssum/config.hpp"
#include "ssum/experiment.hpp"
#include "ssum/property_suite.hpp"

using namespace ssum;
using namespace ssum::exp;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) { return ExperimentConfig::from(ConfigFile::parse(text)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kSmallWmmse =
    "scenario = wmmse\ncells = 3\nr_max = 20\nn_mc = 10\neval_every = 5\nseed = 4\n";
const char* kSmallSg =
    "scenario = sg\nsg_problem = least_squares\nmethods = [sg, ssum_sg, l1_ssum_sg]\n"
    "r_max = 50\nn_mc = 20\neval_every = 10\n";

}  // namespace

TEST(ConfigFile, ParsesScalarsListsAndComments) {
  auto f = ConfigFile::parse("# c\na = 1.5  # tail\nb = [x, y , z]\nc = true\nd = 7\n");
  EXPECT_DOUBLE_EQ(f.get_double("a", 0), 1.5);
  EXPECT_EQ(f.get_list("b", {}), (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_TRUE(f.get_bool("c", false));
  EXPECT_EQ(f.get_int("d", 0), 7);
  EXPECT_EQ(f.get_int("missing", 3), 3);
  EXPECT_NO_THROW(f.require_all_used());
}

TEST(ConfigFile, RejectsMalformedInput) {
  for (const char* bad : {"a 1\n", "a = 1\na = 2\n", "a = [1, 2\n", "a = [1,,2]\n", "a = [1, 2,]\n",
                          "a =\n", "1a = 2\n"}) {
    EXPECT_THROW(ConfigFile::parse(bad), ConfigError) << bad;
  }
  auto f = ConfigFile::parse("n = 1.5\nm = abc\nb = maybe\n");
  EXPECT_THROW(f.get_int("n", 0), ConfigError);
  EXPECT_THROW(f.get_double("m", 0), ConfigError);
  EXPECT_THROW(f.get_bool("b", false), ConfigError);
  EXPECT_THROW(ConfigFile::load("/nonexistent/x.conf"), ConfigError);

  auto g = ConfigFile::parse("typo_key = 1\n");
  try {
    g.require_all_used();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("typo_key"), std::string::npos);
  }
}

TEST(ExperimentConfig, DefaultsAndValidation) {
  auto c = ExperimentConfig::desk_wmmse();
  EXPECT_EQ(c.wmmse.net.cells, 7);
  EXPECT_EQ(c.r_max, 300);
  EXPECT_EQ(c.n_mc, 200);
  EXPECT_EQ(c.methods.size(), 4u);

  EXPECT_THROW(parse("unknown_key = 3\n"), ConfigError);
  EXPECT_THROW(parse("r_max = 0\n"), ConfigError);
  EXPECT_THROW(parse("methods = [nope]\n"), ConfigError);
  EXPECT_THROW(parse("methods = [sg, sg]\n"), ConfigError);
  EXPECT_THROW(parse("streams = 3\n"), ConfigError);
  EXPECT_THROW(parse("scenario = bogus\n"), ConfigError);
  EXPECT_THROW(parse("scenario = sg\nmethods = [sg]\nsg_lambda = 0.1\n"), ConfigError);
  EXPECT_THROW(parse("schedule = [0, 400]\n"), ConfigError);
  EXPECT_THROW(parse("check_lemma_iterations = 100\n"), ConfigError);
}

TEST(ExperimentConfig, ScheduleAndHash) {
  auto c = parse("r_max = 25\neval_every = 10\n");
  EXPECT_EQ(c.scored_iterations(), (std::vector<int>{0, 10, 20, 25}));
  EXPECT_TRUE(parse("eval_every = 0\n").scored_iterations().empty());
  EXPECT_EQ(parse("schedule = [5, 1, 5]\n").scored_iterations(), (std::vector<int>{1, 5}));

  auto a = parse("seed = 3\n"), b = parse("seed = 3\noutput_dir = elsewhere\nthreads = 4\n"),
       d = parse("seed = 4\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), d.hash());
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Experiment, MethodSeedsAreStable) {
  EXPECT_EQ(method_seed(1, "sg"), method_seed(1, "sg"));
  EXPECT_NE(method_seed(1, "sg"), method_seed(1, "ssum_sg"));
  EXPECT_NE(method_seed(1, "sg"), method_seed(2, "sg"));
  EXPECT_THROW(method_seed(1, "nope"), ConfigError);
}

TEST(Experiment, DeterministicAcrossRunsAndThreads) {
  auto c1 = parse(kSmallWmmse);
  auto c4 = parse(std::string(kSmallWmmse) + "threads = 4\n");
  auto t1 = run_experiment(c1), t1b = run_experiment(c1), t4 = run_experiment(c4);
  ASSERT_EQ(t1.rows.size(), 4u * 5u);
  for (std::size_t i = 0; i < t1.rows.size(); ++i) {
    EXPECT_EQ(t1.rows[i].value, t1b.rows[i].value);
    EXPECT_EQ(t1.rows[i].value, t4.rows[i].value);
    EXPECT_EQ(t1.rows[i].method, t4.rows[i].method);
  }
  // all methods start from the same point
  for (const auto& m : c1.methods) EXPECT_EQ(t1.method_rows(m).front().value, t1.rows.front().value);
}

TEST(Experiment, EmitsCsvAndManifest) {
  auto dir = fs::temp_directory_path() / "ssum_emit_test";
  fs::remove_all(dir);
  auto cfg = parse(std::string(kSmallSg) + "record_timing = true\n");
  auto table = run_experiment(cfg);
  auto files = emit_plot_data(table, cfg, dir);
  EXPECT_TRUE(fs::exists(dir / "results.csv"));
  EXPECT_TRUE(fs::exists(dir / "sg.csv"));
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
  std::string results = slurp(dir / "results.csv");
  EXPECT_EQ(results.substr(0, results.find('\n')), "method,iteration,value,stderr");
  std::string manifest = slurp(dir / "manifest.txt");
  EXPECT_EQ(manifest.find("config_hash " + cfg.hash()), 0u);
  EXPECT_NE(manifest.find(sha256_file(dir / "results.csv") + "  results.csv"), std::string::npos);
  EXPECT_EQ(manifest.find("timing.csv"), std::string::npos);

  // identical rerun gives identical bytes
  auto dir2 = fs::temp_directory_path() / "ssum_emit_test2";
  fs::remove_all(dir2);
  emit_plot_data(run_experiment(cfg), cfg, dir2);
  for (const char* name : {"results.csv", "sg.csv", "ssum_sg.csv", "l1_ssum_sg.csv", "manifest.txt"})
    EXPECT_EQ(slurp(dir / name), slurp(dir2 / name)) << name;

  // a different seed changes the recorded hash
  auto other = parse(std::string(kSmallSg) + "seed = 99\n");
  auto dir3 = fs::temp_directory_path() / "ssum_emit_test3";
  emit_plot_data(run_experiment(other), other, dir3);
  EXPECT_NE(slurp(dir / "manifest.txt"), slurp(dir3 / "manifest.txt"));
  for (const auto& d : {dir, dir2, dir3}) fs::remove_all(d);
}

TEST(Experiment, EmptyScheduleWritesOnlyManifest) {
  auto dir = fs::temp_directory_path() / "ssum_emit_empty";
  fs::remove_all(dir);
  auto cfg = parse(
      "scenario = sg\nmethods = [sg]\nr_max = 20\nn_mc = 10\neval_every = 0\n");
  auto table = run_experiment(cfg);
  EXPECT_TRUE(table.rows.empty());
  auto files = emit_plot_data(table, cfg, dir);
  EXPECT_TRUE(files.empty());
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
  EXPECT_FALSE(fs::exists(dir / "results.csv"));
  fs::remove_all(dir);
}

TEST(Experiment, SgAndDictionaryScenariosImprove) {
  auto sg = run_experiment(parse(kSmallSg));
  for (const char* m : {"sg", "ssum_sg", "l1_ssum_sg"})
    EXPECT_LT(sg.final_value(m), sg.method_rows(m).front().value) << m;

  auto d = run_experiment(parse("scenario = dictionary\nr_max = 200\nn_mc = 50\neval_every = 100\n"));
  auto rows = d.method_rows("ssum_dictionary");
  EXPECT_LT(rows.back().value, rows.front().value);
}

TEST(PropertySuite, NegativeControlsAreDetected) {
  auto net = wmmse::NetworkConfig::uniform(3, 1, 2, 2, 1, 1.0, 1.0);
  EXPECT_TRUE(props::wmmse_tightness(net, 40, 1e-7, 1).ok());
  EXPECT_FALSE(props::wmmse_tightness(net, 40, 1e-7, 1, -1000.0).ok());
  EXPECT_TRUE(props::sg_tightness(40, 1e-7, 1).ok());
  EXPECT_FALSE(props::sg_tightness(40, 1e-7, 1, 0.5).ok());
  auto eq = props::sg_equivalence(200, 3);
  EXPECT_LE(eq.max_diff, 1e-10);
  EXPECT_LE(eq.mean_diff, 1e-12);
  EXPECT_LE(eq.l1_diff, 1e-8);
}
