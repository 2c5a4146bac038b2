// Command-line front end for nested H∞ synthesis.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "nested_hinf/analysis.h"
#include "nested_hinf/pipeline.h"
#include "nested_hinf/plant_io.h"
#include "nested_hinf/plantgen.h"
#include "nested_hinf/structured.h"

namespace nh = nested_hinf;

namespace {

void SetupLogging() {
  auto logger = spdlog::stderr_color_mt("nested_hinf");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("NESTED_HINF_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept the literal "off".
    if (level != spdlog::level::off || std::string(env) == "off") {
      spdlog::set_level(level);
    } else {
      spdlog::warn("NESTED_HINF_LOG: unknown level '{}'", env);
    }
  }
}

struct Flags {
  std::string plant_path;
  std::string out;
  std::string trace_path;
  std::string controller_path;
  std::string mode = "structured";
  double gamma = 0.0;
  double tol = 0.0;
  int max_iter = 200;
  double schedule_ratio = 0.8;
  std::uint64_t seed = 0;
  std::vector<int> n_list{4, 8, 12, 16, 20};
  int trials = 100;
  double gamma_factor = 2.0;
  bool unstable = false;
  int n = 4;
};

nh::ItsOptions ItsFromFlags(const Flags& f) {
  nh::ItsOptions o;
  o.max_iter = f.max_iter;
  o.conv_tol = f.tol;
  o.schedule_ratio = f.schedule_ratio;
  o.allow_escalation = true;
  return o;
}

void Emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    nh::WriteFileAtomic(path, content);
  }
}

std::string TracePathFor(const Flags& f) {
  if (!f.trace_path.empty()) return f.trace_path;
  if (f.out.empty() || f.out == "-") return "";
  std::filesystem::path p(f.out);
  p.replace_extension(".trace.csv");
  return p.string();
}

int CmdValidate(const Flags& f) {
  const nh::PlantFile file = nh::LoadPlantFile(f.plant_path);
  const nh::ValidationReport report =
      nh::ValidateStructuredPlant(file.plant.plant, file.plant.structure);
  for (const auto& item : report.items) {
    std::cout << (item.passed ? "PASS " : "FAIL ") << item.name;
    if (!item.detail.empty()) std::cout << ": " << item.detail;
    std::cout << "\n";
  }
  if (!report.ok()) {
    std::cerr << "invalid plant: " << report.Failures() << "\n";
    return nh::kExitInfeasible;
  }
  return nh::kExitOk;
}

// Loads and validates; a plant that violates the assumptions is input error.
nh::StructuredPlant LoadValidPlant(const std::string& path) {
  const nh::PlantFile file = nh::LoadPlantFile(path);
  const nh::ValidationReport report =
      nh::ValidateStructuredPlant(file.plant.plant, file.plant.structure);
  if (!report.ok()) {
    throw nh::InputError(path + ": invalid plant: " + report.Failures());
  }
  return file.plant;
}

int CmdSynthesize(const Flags& f) {
  if (!(f.gamma > 0)) throw nh::InputError("--gamma must be positive");
  const nh::SynthesisMode mode = nh::ParseSynthesisMode(f.mode);
  const nh::StructuredPlant sp = LoadValidPlant(f.plant_path);
  const nh::SynthesisOutcome out =
      nh::RunSynthesis(sp, f.gamma, mode, ItsFromFlags(f));
  Emit(f.out, nh::ResultFileToJson(out.result).dump(2) + "\n");
  const std::string trace = TracePathFor(f);
  if (!trace.empty() && mode == nh::SynthesisMode::kStructured) {
    nh::WriteFileAtomic(trace, nh::TraceCsv({out.trace}));
  }
  if (out.exit_code != nh::kExitOk) {
    std::cerr << out.result.status << ": " << out.result.message << "\n";
  }
  return out.exit_code;
}

int CmdGamma(const Flags& f) {
  const nh::SynthesisMode mode = nh::ParseSynthesisMode(f.mode);
  const nh::StructuredPlant sp = LoadValidPlant(f.plant_path);
  const double rel_tol = f.tol > 0 ? f.tol : 1e-4;
  nh::Json j;
  try {
    if (mode == nh::SynthesisMode::kCentral) {
      const nh::GammaSearch g = nh::GammaCenInf(sp.plant, rel_tol);
      j = {{"mode", "central"}, {"gamma", g.gamma}, {"lower", g.lower},
           {"rel_tol", rel_tol}};
    } else {
      nh::ItsOptions o = ItsFromFlags(f);
      o.conv_tol = 0.0;
      const nh::StructuredGammaSearch g = nh::GammaOptInf(sp, rel_tol, o);
      j = {{"mode", "structured"},      {"gamma", g.search.gamma},
           {"lower", g.search.lower},   {"gamma_cen", g.central.gamma},
           {"gamma_cen_lower", g.central.lower}, {"rel_tol", rel_tol}};
    }
  } catch (const std::runtime_error& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return nh::kExitInfeasible;
  }
  Emit(f.out, j.dump(2) + "\n");
  return nh::kExitOk;
}

int CmdBenchmark(const Flags& f) {
  nh::BenchmarkOptions o;
  o.trials = f.trials;
  o.gamma_factor = f.gamma_factor;
  o.seed0 = f.seed;
  o.stable = !f.unstable;
  if (f.tol > 0) o.gamma_rel_tol = f.tol;
  o.its.max_iter = f.max_iter;
  o.its.schedule_ratio = f.schedule_ratio;
  const std::string dir = f.out.empty() ? "." : f.out;
  std::filesystem::create_directories(dir);
  bool all_ok = true;
  nh::Json summary = nh::Json::array();
  for (int n : f.n_list) {
    std::vector<std::vector<double>> traces;
    nh::Json trials = nh::Json::array();
    int converged = 0, max_it = 0;
    for (int t = 0; t < f.trials; ++t) {
      const nh::BenchmarkTrial r = nh::RunBenchmarkTrial(n, t, o);
      traces.push_back(r.errors);
      if (r.ok()) {
        ++converged;
        max_it = std::max(max_it, r.iterations);
      }
      trials.push_back({{"trial", t}, {"seed", r.seed}, {"gamma_cen", r.gamma_cen},
                        {"gamma_opt", r.gamma_opt}, {"gamma", r.gamma},
                        {"status", nh::ToString(r.status)}, {"escalated", r.escalated},
                        {"iterations", r.iterations}, {"final_step", r.final_step},
                        {"message", r.message}});
    }
    const std::string stem = dir + "/benchmark_n" + std::to_string(n);
    nh::WriteFileAtomic(stem + ".csv", nh::TraceCsv(traces));
    nh::WriteFileAtomic(stem + ".json", trials.dump(2) + "\n");
    std::cout << "n=" << n << " converged " << converged << "/" << f.trials
              << " max_iterations " << max_it << "\n";
    summary.push_back({{"n", n}, {"converged", converged}, {"trials", f.trials},
                       {"max_iterations", max_it}});
    all_ok = all_ok && converged == f.trials;
  }
  nh::WriteFileAtomic(dir + "/benchmark_summary.json", summary.dump(2) + "\n");
  return all_ok ? nh::kExitOk : nh::kExitInfeasible;
}

int CmdAnalyze(const Flags& f) {
  const nh::Json j = nh::ReadJsonFile(f.plant_path);
  nh::StateSpace sys;
  std::string source;
  if (j.contains("structure")) {
    const nh::PlantFile file = nh::PlantFileFromJson(j);
    const nh::PartitionedPlant& p = file.plant.plant;
    if (!f.controller_path.empty()) {
      const nh::ResultFile r = nh::LoadResultFile(f.controller_path);
      if (!r.controller) throw nh::InputError(f.controller_path + ": no controller");
      sys = nh::CloseLoop(p, *r.controller);
      source = "closed loop";
    } else {
      sys = nh::StateSpace(p.A, p.B1, p.C1,
                           nh::Matrix::Zero(p.num_regulated(), p.num_exogenous()));
      source = "open loop w -> z";
    }
  } else {
    sys = nh::StateSpaceFromJson(j);
    source = "system";
  }
  nh::Json out = {{"source", source}, {"num_states", sys.num_states()}};
  const bool stable = nh::IsHurwitz(sys.A());
  out["stable"] = stable;
  if (!stable) {
    Emit(f.out, out.dump(2) + "\n");
    std::cerr << "unstable system: norms are infinite\n";
    return nh::kExitInfeasible;
  }
  const double hinf = nh::HinfNorm(sys);
  out["hinf_norm"] = hinf;
  if (nh::MaxAbs(sys.D()) == 0.0) {
    out["h2_norm"] = nh::H2Norm(sys);
    if (f.gamma > 0) {
      out["gamma"] = f.gamma;
      try {
        out["entropy"] = nh::Entropy(sys, f.gamma).value;
      } catch (const nh::InfiniteEntropyError&) {
        out["entropy"] = nullptr;
      }
    }
  }
  Emit(f.out, out.dump(2) + "\n");
  return nh::kExitOk;
}

int CmdGenerate(const Flags& f) {
  nh::GenSpec spec;
  spec.n = f.n;
  spec.seed = f.seed;
  spec.stable = !f.unstable;
  nh::PlantFile file;
  try {
    file.plant = nh::RandomStructuredPlant(spec);
  } catch (const std::invalid_argument& e) {
    throw nh::InputError(e.what());
  }
  file.meta.seed = f.seed;
  file.meta.generator = "philox4x32-10";
  file.meta.comment = std::string(spec.stable ? "stable" : "unstable") +
                      " random nested plant, n = " + std::to_string(f.n);
  Emit(f.out, nh::PlantFileToJson(file).dump(2) + "\n");
  return nh::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  SetupLogging();
  CLI::App app{"Minimum-entropy H-infinity synthesis for nested two-block plants"};
  app.require_subcommand(1);
  Flags f;

  auto add_its = [&](CLI::App* cmd) {
    cmd->add_option("--max-iter", f.max_iter, "ITS iteration cap")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--schedule-ratio", f.schedule_ratio,
                    "gamma ratio between continuation stages")
        ->check(CLI::Range(0.0, 1.0));
  };

  auto* validate = app.add_subcommand("validate", "check a plant file");
  validate->add_option("plant", f.plant_path, "plant JSON")->required();

  auto* synth = app.add_subcommand("synthesize", "synthesize a controller at gamma");
  synth->add_option("plant", f.plant_path, "plant JSON")->required();
  synth->add_option("--gamma", f.gamma, "performance level")->required();
  synth->add_option("--mode", f.mode, "central or structured");
  synth->add_option("--tol", f.tol, "ITS step tolerance (0: automatic)");
  synth->add_option("--out", f.out, "result JSON (default stdout)");
  synth->add_option("--trace", f.trace_path,
                    "iteration trace CSV (default next to --out)");
  add_its(synth);

  auto* gamma = app.add_subcommand("gamma", "estimate the infimal gamma");
  gamma->add_option("plant", f.plant_path, "plant JSON")->required();
  gamma->add_option("--mode", f.mode, "central or structured");
  gamma->add_option("--tol", f.tol, "relative bracket width (default 1e-4)");
  gamma->add_option("--out", f.out, "output JSON (default stdout)");
  add_its(gamma);

  auto* bench = app.add_subcommand("benchmark", "random-plant convergence study");
  bench->add_option("--n", f.n_list, "state dimensions")->delimiter(',');
  bench->add_option("--trials", f.trials, "plants per dimension")
      ->check(CLI::PositiveNumber);
  bench->add_option("--gamma-factor", f.gamma_factor,
                    "gamma as a multiple of the gamma_opt estimate");
  bench->add_option("--seed", f.seed, "base seed");
  bench->add_option("--tol", f.tol, "gamma_opt bracket (default 1e-2)");
  bench->add_option("--out", f.out, "output directory (default .)");
  bench->add_flag("--unstable", f.unstable, "reflect two eigenvalues of A");
  add_its(bench);

  auto* analyze = app.add_subcommand("analyze", "norms and entropy of a system");
  analyze->add_option("system", f.plant_path, "system or plant JSON")->required();
  analyze->add_option("--controller", f.controller_path,
                      "result JSON whose controller closes the loop");
  analyze->add_option("--gamma", f.gamma, "entropy level");
  analyze->add_option("--out", f.out, "output JSON (default stdout)");

  auto* generate = app.add_subcommand("generate", "write a random nested plant");
  generate->add_option("--n", f.n, "state dimension (even, >= 4)");
  generate->add_option("--seed", f.seed, "generator seed");
  generate->add_flag("--unstable", f.unstable, "reflect two eigenvalues of A");
  generate->add_option("--out", f.out, "plant JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? nh::kExitOk : nh::kExitInputError;
  }

  try {
    if (*validate) return CmdValidate(f);
    if (*synth) return CmdSynthesize(f);
    if (*gamma) return CmdGamma(f);
    if (*bench) return CmdBenchmark(f);
    if (*analyze) return CmdAnalyze(f);
    if (*generate) return CmdGenerate(f);
  } catch (const nh::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nh::kExitInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nh::kExitInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nh::kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return nh::kExitInfeasible;
  }
  return nh::kExitInputError;
}
