#include "nested_hinf/pipeline.h"

#include <chrono>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "nested_hinf/analysis.h"
#include "nested_hinf/verify.h"

namespace nested_hinf {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

void RecordCentral(ResultFile& r, const CentralSolution& c,
                   const DgkfOptions& options) {
  const double g2 = c.gamma * c.gamma;
  const double min_x = MinSymmetricEigenvalue(c.X);
  const double min_y = MinSymmetricEigenvalue(c.Y);
  const double rho = CouplingRadius(c.X, c.Y);
  r.conditions.push_back({"B1", true, min_x + options.psd_tol * (1.0 + c.X.norm()),
                          "X = ric(H_X) exists; margin = lambda_min(X) + psd tolerance"});
  r.conditions.push_back({"B2", true, min_y + options.psd_tol * (1.0 + c.Y.norm()),
                          "Y = ric(H_Y) exists; margin = lambda_min(Y) + psd tolerance"});
  r.conditions.push_back({"B3", true, g2 - rho, "margin = gamma^2 - rho(XY)"});
  r.X = c.X;
  r.Y = c.Y;
}

void RecordC2(ResultFile& r, const C2Report& c2, double g2, double bound) {
  r.conditions.push_back({"C2.jx_in_domain", c2.jx_in_domain, c2.jx_in_domain ? 1.0 : -1.0, ""});
  r.conditions.push_back({"C2.jy_in_domain", c2.jy_in_domain, c2.jy_in_domain ? 1.0 : -1.0, ""});
  r.conditions.push_back({"C2.jx_residual", c2.jx_residual <= bound, -c2.jx_residual,
                          "margin = -||ric(J_X) - (Xhat - X)||_F"});
  r.conditions.push_back({"C2.jy_residual", c2.jy_residual <= bound, -c2.jy_residual,
                          "margin = -||ric(J_Y) - (Yhat - Y)||_F"});
  r.conditions.push_back({"C2.xhat_minus_x_psd", c2.min_eig_dx >= -bound, c2.min_eig_dx,
                          "margin = lambda_min(Xhat - X)"});
  r.conditions.push_back({"C2.yhat_minus_y_psd", c2.min_eig_dy >= -bound, c2.min_eig_dy,
                          "margin = lambda_min(Yhat - Y)"});
  r.conditions.push_back({"C2.rho_x_yhat", c2.rho_x_yhat < g2, g2 - c2.rho_x_yhat,
                          "margin = gamma^2 - rho(X Yhat)"});
  r.conditions.push_back({"C2.rho_xhat_y", c2.rho_xhat_y < g2, g2 - c2.rho_xhat_y,
                          "margin = gamma^2 - rho(Xhat Y)"});
}

// Closed-loop stability, H∞ norm and entropy; false when the bounded-real
// check fails.
bool RecordClosedLoop(ResultFile& r, const StructuredPlant& sp,
                      const StateSpace& K, double gamma) {
  const auto t0 = Clock::now();
  const StateSpace cl = CloseLoop(sp.plant, K);
  const bool stable = IsHurwitz(cl.A());
  r.closed_loop_stable = stable;
  bool ok = stable;
  if (stable) {
    r.hinf_norm = HinfNorm(cl);
    ok = *r.hinf_norm < gamma;
    if (ok) {
      try {
        r.entropy = Entropy(cl, gamma).value;
      } catch (const InfiniteEntropyError&) {
        ok = false;
      }
    }
  }
  r.timings["closed_loop"] = Seconds(t0);
  return ok;
}

}  // namespace

const char* ToString(SynthesisMode mode) {
  return mode == SynthesisMode::kCentral ? "central" : "structured";
}

SynthesisMode ParseSynthesisMode(const std::string& text) {
  if (text == "central") return SynthesisMode::kCentral;
  if (text == "structured") return SynthesisMode::kStructured;
  throw InputError("unknown mode '" + text + "' (expected central or structured)");
}

SynthesisOutcome RunSynthesis(const StructuredPlant& sp, double gamma,
                              SynthesisMode mode, const ItsOptions& options) {
  SynthesisOutcome out;
  ResultFile& r = out.result;
  r.gamma = gamma;
  r.mode = ToString(mode);
  const auto start = Clock::now();

  auto t0 = Clock::now();
  const DgkfResult dgkf = DgkfExists(sp.plant, gamma, options.dgkf);
  r.timings["existence"] = Seconds(t0);
  if (!dgkf.feasible) {
    r.status = "infeasible";
    r.message = "condition " + dgkf.failed_condition + " fails: " + dgkf.diagnostic;
    r.conditions.push_back({dgkf.failed_condition, false, -1.0, dgkf.diagnostic});
    r.timings["total"] = Seconds(start);
    return out;
  }
  RecordCentral(r, *dgkf.solution, options.dgkf);

  if (mode == SynthesisMode::kCentral) {
    r.controller = BuildKcen(sp.plant, *dgkf.solution);
    const bool ok = RecordClosedLoop(r, sp, *r.controller, gamma);
    r.status = ok ? "ok" : "inconclusive";
    if (!ok) r.message = "bounded-real check failed on the closed loop";
    out.exit_code = ok ? kExitOk : kExitInfeasible;
    r.timings["total"] = Seconds(start);
    return out;
  }

  t0 = Clock::now();
  ItsOptions its = options;
  ItsResult run;
  try {
    run = SynthesizeStructured(sp, gamma, its);
  } catch (const std::runtime_error& e) {
    run.status = ItsStatus::kNotInDomain;
    run.message = e.what();
  }
  r.timings["its"] = Seconds(t0);
  r.iterations = run.trace.iterations;
  out.trace = run.trace.errors;
  if (!run.solution) {
    r.status = "infeasible";
    r.message = std::string("condition C2 fails (") + ToString(run.status) +
                "): " + run.message;
    r.conditions.push_back({"C2", false, -1.0, r.message});
    r.timings["total"] = Seconds(start);
    return out;
  }
  const StructuredSolution& sol = *run.solution;
  RecordC2(r, run.c2, gamma * gamma,
           options.c2_tol * (1.0 + sol.Xhat.norm() + sol.Yhat.norm()));
  r.Xhat = sol.Xhat;
  r.Yhat = sol.Yhat;
  if (!run.ok()) {
    r.status = "inconclusive";
    r.message = std::string(ToString(run.status)) + ": " + run.message;
    r.timings["total"] = Seconds(start);
    return out;
  }
  r.controller = BuildKme(sp, sol);
  bool ok = RecordClosedLoop(r, sp, *r.controller, gamma);
  std::vector<std::string> problems;
  if (!ok) problems.push_back("bounded-real check failed on the closed loop");

  t0 = Clock::now();
  const Lemma3Report l3 = Lemma3Verify(sp, sol);
  CertificateRecord lemma3;
  lemma3.passed = l3.passed;
  lemma3.values = {{"scale", l3.scale},
                   {"offdiag_x", l3.offdiag_x},
                   {"offdiag_y", l3.offdiag_y},
                   {"err_x", l3.err_x},
                   {"err_xhat", l3.err_xhat},
                   {"err_yhat", l3.err_yhat},
                   {"err_y", l3.err_y},
                   {"min_eig_phi", l3.min_eig_phi},
                   {"min_eig_psi", l3.min_eig_psi}};
  for (const std::string& f : l3.failures) {
    lemma3.detail += (lemma3.detail.empty() ? "" : "; ") + f;
  }
  r.lemma3 = lemma3;
  r.timings["lemma3"] = Seconds(t0);
  if (!l3.passed) problems.push_back("block-diagonal certificate failed: " + lemma3.detail);

  t0 = Clock::now();
  CertificateRecord opt;
  try {
    const YoulaTriple triple = YoulaParams(sp);
    const OptimalityReport rep = OptimalityCheck(
        triple, CloseLoop(sp.plant, *r.controller), gamma, sp.structure);
    opt.passed = rep.passed;
    opt.values = {{"ratio_11", rep.ratio_11},
                  {"ratio_21", rep.ratio_21},
                  {"ratio_22", rep.ratio_22},
                  {"axis_distance", rep.axis_distance},
                  {"num_states", static_cast<double>(rep.num_states)}};
    opt.detail = rep.reason;
  } catch (const std::exception& e) {
    opt.passed = false;
    opt.detail = e.what();
  }
  r.optimality = opt;
  r.timings["optimality"] = Seconds(t0);
  if (!opt.passed) problems.push_back("optimality certificate failed: " + opt.detail);

  ok = problems.empty();
  r.status = ok ? "ok" : "inconclusive";
  for (const std::string& p : problems) {
    r.message += (r.message.empty() ? "" : "; ") + p;
  }
  out.exit_code = ok ? kExitOk : kExitInfeasible;
  r.timings["total"] = Seconds(start);
  return out;
}

std::uint64_t TrialSeed(std::uint64_t seed0, int n, int trial) {
  return seed0 * 1000003ULL + static_cast<std::uint64_t>(n) * 10007ULL +
         static_cast<std::uint64_t>(trial);
}

BenchmarkTrial RunBenchmarkTrial(int n, int trial,
                                 const BenchmarkOptions& options) {
  BenchmarkTrial t;
  t.n = n;
  t.trial = trial;
  t.seed = TrialSeed(options.seed0, n, trial);
  GenSpec spec;
  spec.n = n;
  spec.seed = t.seed;
  spec.stable = options.stable;
  spec.unstable_count = options.unstable_count;
  try {
    const StructuredPlant sp = RandomStructuredPlant(spec);
    const StructuredGammaSearch g =
        GammaOptInf(sp, options.gamma_rel_tol, options.its);
    t.gamma_cen = g.central.gamma;
    t.gamma_opt = g.search.gamma;
    t.gamma = options.gamma_factor * t.gamma_opt;
    ItsOptions its = options.its;
    if (!options.stable) its.allow_escalation = true;
    const ItsResult r = SynthesizeStructured(sp, t.gamma, its, t.gamma_cen);
    t.status = r.status;
    t.escalated = r.escalated;
    t.iterations = r.trace.iterations;
    t.final_step = r.trace.step_norms.empty() ? 0.0 : r.trace.step_norms.back();
    t.errors = r.trace.errors;
    t.message = r.message;
  } catch (const std::exception& e) {
    t.status = ItsStatus::kNotInDomain;
    t.message = e.what();
  }
  spdlog::debug("benchmark n={} trial={} status={} iterations={}", n, trial,
                ToString(t.status), t.iterations);
  return t;
}

}  // namespace nested_hinf
