#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nested_hinf/plant_io.h"
#include "nested_hinf/plantgen.h"
#include "nested_hinf/structured.h"

namespace nested_hinf {

enum class SynthesisMode { kCentral, kStructured };

const char* ToString(SynthesisMode mode);
/// "central" or "structured"; throws InputError otherwise.
SynthesisMode ParseSynthesisMode(const std::string& text);

/// CLI exit codes.
constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInputError = 2;

struct SynthesisOutcome {
  ResultFile result;
  std::vector<double> trace;  // e_k of the final ITS run (structured only)
  int exit_code = kExitInfeasible;
};

/// Existence test, controller, bounded-real check and, for the structured
/// mode, the two certificates. Never throws for mathematical failures; the
/// outcome carries status "infeasible" (exit 1, message naming the failed
/// condition) or "inconclusive" (exit 1) instead.
SynthesisOutcome RunSynthesis(const StructuredPlant& sp, double gamma,
                              SynthesisMode mode,
                              const ItsOptions& options = {});

struct BenchmarkOptions {
  int trials = 100;
  double gamma_factor = 2.0;
  std::uint64_t seed0 = 0;
  bool stable = true;
  int unstable_count = 2;
  double gamma_rel_tol = 1e-2;  // γ_opt bracket
  ItsOptions its;               // escalation is enabled for unstable plants
};

struct BenchmarkTrial {
  int n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double gamma_cen = 0.0;
  double gamma_opt = 0.0;
  double gamma = 0.0;
  ItsStatus status = ItsStatus::kMaxIterations;
  bool escalated = false;
  int iterations = 0;
  double final_step = 0.0;
  std::vector<double> errors;
  std::string message;
  bool ok() const { return status == ItsStatus::kConverged; }
};

/// Seed of trial t at size n.
std::uint64_t TrialSeed(std::uint64_t seed0, int n, int trial);

/// Generate, estimate γ_opt, run ITS at gamma_factor·γ_opt.
BenchmarkTrial RunBenchmarkTrial(int n, int trial,
                                 const BenchmarkOptions& options);

}  // namespace nested_hinf
