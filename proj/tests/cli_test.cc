#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nested_hinf/plant_io.h"
#include "nested_hinf/plantgen.h"

namespace nested_hinf {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nested_hinf_cli_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the CLI with stdout and stderr captured; returns the exit code.
  int Run(const std::string& args) {
    const std::string cmd = std::string("\"") + CLI_PATH + "\" " + args + " > \"" +
                            Path("stdout.txt") + "\" 2> \"" + Path("stderr.txt") + "\"";
    const int status = std::system(cmd.c_str());
    out_ = Slurp(Path("stdout.txt"));
    err_ = Slurp(Path("stderr.txt"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string WritePlant(const StructuredPlant& sp, const std::string& name = "plant.json") {
    PlantFile f;
    f.plant = sp;
    SavePlantFile(Path(name), f);
    return Path(name);
  }

  fs::path dir_;
  std::string out_, err_;
};

StructuredPlant Random(std::uint64_t seed, int n = 4) {
  GenSpec spec;
  spec.n = n;
  spec.seed = seed;
  return RandomStructuredPlant(spec);
}

TEST_F(Cli, ValidateExitCodes) {
  StructuredPlant sp = Random(1);
  const std::string good = WritePlant(sp);
  EXPECT_EQ(Run("validate " + good), 0) << err_;
  sp.plant.A(0, sp.structure.n.first) = 0.5;
  const std::string bad = WritePlant(sp, "bad.json");
  EXPECT_EQ(Run("validate " + bad), 1);
  EXPECT_NE(out_.find("block (1,2) of A"), std::string::npos) << out_;
  Json j = ReadJsonFile(good);
  j["matrices"].erase("C2");
  WriteFileAtomic(Path("missing.json"), j.dump());
  EXPECT_EQ(Run("validate " + Path("missing.json")), 2);
  EXPECT_NE(err_.find("missing field 'C2'"), std::string::npos) << err_;
  EXPECT_EQ(Run("validate " + Path("nope.json")), 2);
}

TEST_F(Cli, UsageErrorsAreInputErrors) {
  EXPECT_EQ(Run("synthesize"), 2);
  EXPECT_EQ(Run("frobnicate"), 2);
  const std::string plant = WritePlant(Random(2));
  EXPECT_EQ(Run("synthesize " + plant + " --gamma 3 --mode diagonal"), 2);
  EXPECT_EQ(Run("synthesize " + plant + " --gamma -1"), 2);
  EXPECT_EQ(Run("--help"), 0);
}

TEST_F(Cli, SynthesizeStructuredAndInfeasible) {
  const StructuredPlant sp = Random(3);
  const std::string plant = WritePlant(sp);
  ASSERT_EQ(Run("gamma " + plant + " --mode structured --tol 1e-3 --out " + Path("g.json")), 0)
      << err_;
  const Json g = ReadJsonFile(Path("g.json"));
  const double gopt = g["gamma"].get<double>();
  const double gcen = g["gamma_cen"].get<double>();
  EXPECT_GE(gopt, gcen * (1 - 1e-6));

  std::ostringstream args;
  args.precision(17);
  args << "synthesize " << plant << " --gamma " << 2 * gopt << " --mode structured --out "
       << Path("r.json");
  ASSERT_EQ(Run(args.str()), 0) << err_;
  const ResultFile r = LoadResultFile(Path("r.json"));
  EXPECT_EQ(r.status, "ok");
  EXPECT_EQ(r.mode, "structured");
  ASSERT_TRUE(r.controller.has_value());
  EXPECT_EQ(r.controller->num_states(), 2 * sp.plant.num_states());
  EXPECT_TRUE(r.closed_loop_stable.value_or(false));
  EXPECT_LT(r.hinf_norm.value(), 2 * gopt);
  ASSERT_TRUE(r.lemma3.has_value());
  EXPECT_TRUE(r.lemma3->passed);
  ASSERT_TRUE(r.optimality.has_value());
  EXPECT_TRUE(r.optimality->passed);
  EXPECT_TRUE(r.Xhat.has_value());
  EXPECT_LT(r.iterations, 15);

  const std::string trace = Slurp(Path("r.trace.csv"));
  ASSERT_FALSE(trace.empty());
  EXPECT_EQ(trace.substr(0, 8), "k,e_1\n0,");
  const long rows = std::count(trace.begin(), trace.end(), '\n') - 1;
  EXPECT_LT(rows, 15);
  EXPECT_GE(rows, 1);

  std::ostringstream low;
  low.precision(17);
  low << "synthesize " << plant << " --gamma " << 0.5 * gcen << " --out " << Path("low.json");
  EXPECT_EQ(Run(low.str()), 1);
  const ResultFile lr = LoadResultFile(Path("low.json"));
  EXPECT_EQ(lr.status, "infeasible");
  EXPECT_NE(lr.message.find("condition B"), std::string::npos) << lr.message;
  EXPECT_NE(err_.find("condition B"), std::string::npos);
}

TEST_F(Cli, CentralMatchesStructuredOnDecoupledPlant) {
  GenSpec spec;
  spec.n = 4;
  spec.seed = 4;
  const DecoupledPlant dp = RandomDecoupledPlant(spec);
  const std::string plant = WritePlant(dp.plant);
  const double gamma = 2 * std::max(GammaCenInf(dp.first, 1e-6).gamma,
                                    GammaCenInf(dp.second, 1e-6).gamma);
  std::ostringstream a, b;
  a.precision(17);
  b.precision(17);
  a << "synthesize " << plant << " --gamma " << gamma << " --mode central --out " << Path("c.json");
  b << "synthesize " << plant << " --gamma " << gamma << " --mode structured --out " << Path("s.json");
  ASSERT_EQ(Run(a.str()), 0) << err_;
  ASSERT_EQ(Run(b.str()), 0) << err_;
  const ResultFile c = LoadResultFile(Path("c.json"));
  const ResultFile s = LoadResultFile(Path("s.json"));
  ASSERT_TRUE(c.controller && s.controller);
  for (double w : {0.0, 0.5, 3.0}) {
    EXPECT_LT((EvalFreq(*c.controller, w) - EvalFreq(*s.controller, w)).norm(), 1e-6);
  }
  EXPECT_NEAR(*c.hinf_norm, *s.hinf_norm, 1e-6 * *c.hinf_norm);
}

TEST_F(Cli, GammaCentralNestsBrackets) {
  const std::string plant = WritePlant(Random(5));
  ASSERT_EQ(Run("gamma " + plant + " --mode central --tol 1e-2 --out " + Path("a.json")), 0);
  ASSERT_EQ(Run("gamma " + plant + " --mode central --tol 1e-6 --out " + Path("b.json")), 0);
  const Json a = ReadJsonFile(Path("a.json")), b = ReadJsonFile(Path("b.json"));
  EXPECT_LE(b["gamma"].get<double>(), a["gamma"].get<double>());
  EXPECT_GE(b["gamma"].get<double>(), a["lower"].get<double>());
}

TEST_F(Cli, BenchmarkIsDeterministic) {
  const std::string args = "benchmark --n 4,6 --trials 2 --seed 9 --out ";
  ASSERT_EQ(Run(args + Path("b1")), 0) << err_ << out_;
  ASSERT_EQ(Run(args + Path("b2")), 0) << err_;
  for (const char* name : {"benchmark_n4.csv", "benchmark_n6.csv"}) {
    const std::string x = Slurp(Path(std::string("b1/") + name));
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, Slurp(Path(std::string("b2/") + name)));
    EXPECT_EQ(x.substr(0, 10), "k,e_1,e_2\n");
  }
  const Json s = ReadJsonFile(Path("b1/benchmark_summary.json"));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0]["converged"].get<int>(), 2);
  EXPECT_LT(s[1]["max_iterations"].get<int>(), 15);
}

TEST_F(Cli, AnalyzeSystemAndClosedLoop) {
  const StateSpace g(Matrix::Constant(1, 1, -2.0), Matrix::Constant(1, 1, 1.0),
                     Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
  WriteFileAtomic(Path("sys.json"), StateSpaceToJson(g).dump());
  ASSERT_EQ(Run("analyze " + Path("sys.json") + " --gamma 1 --out " + Path("a.json")), 0) << err_;
  const Json a = ReadJsonFile(Path("a.json"));
  EXPECT_NEAR(a["hinf_norm"].get<double>(), 0.5, 1e-7);
  EXPECT_NEAR(a["h2_norm"].get<double>(), 0.5, 1e-12);
  // γ²(a - √(a² - b²/γ²)) with a = 2, b = 1, γ = 1.
  EXPECT_NEAR(a["entropy"].get<double>(), 2 - std::sqrt(3.0), 1e-12);

  const StructuredPlant sp = Random(6);
  const std::string plant = WritePlant(sp);
  const double gcen = GammaCenInf(sp.plant, 1e-6).gamma;
  std::ostringstream s;
  s.precision(17);
  s << "synthesize " << plant << " --gamma " << 3 * gcen << " --mode central --out "
    << Path("r.json");
  ASSERT_EQ(Run(s.str()), 0) << err_;
  ASSERT_EQ(Run("analyze " + plant + " --controller " + Path("r.json") + " --out " +
                Path("cl.json")),
            0)
      << err_;
  const Json cl = ReadJsonFile(Path("cl.json"));
  EXPECT_EQ(cl["source"].get<std::string>(), "closed loop");
  EXPECT_LT(cl["hinf_norm"].get<double>(), 3 * gcen);

  GenSpec spec;
  spec.n = 4;
  spec.seed = 7;
  spec.stable = false;
  WritePlant(RandomStructuredPlant(spec), "unstable.json");
  EXPECT_EQ(Run("analyze " + Path("unstable.json")), 1);
}

TEST_F(Cli, GenerateRoundTripsThroughValidate) {
  ASSERT_EQ(Run("generate --n 8 --seed 3 --out " + Path("p.json")), 0) << err_;
  EXPECT_EQ(Run("validate " + Path("p.json")), 0);
  const PlantFile f = LoadPlantFile(Path("p.json"));
  GenSpec spec;
  spec.n = 8;
  spec.seed = 3;
  EXPECT_EQ(f.plant.plant.A, RandomStructuredPlant(spec).plant.A);
  EXPECT_EQ(Run("generate --n 5"), 2);
}

}  // namespace
}  // namespace nested_hinf
