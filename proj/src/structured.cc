#include "nested_hinf/structured.h"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include <spdlog/spdlog.h>

namespace nested_hinf {

Matrix BlockEmbedding(const BlockSplit& split, int which) {
  const Eigen::Index size = which == 1 ? split.first : split.second;
  Matrix E = Matrix::Zero(split.total(), size);
  E.block(which == 1 ? 0 : split.first, 0, size, size).setIdentity();
  return E;
}

Matrix BlockProjector(const BlockSplit& split, int which) {
  Matrix E = Matrix::Zero(split.total(), split.total());
  if (which == 1) {
    E.topLeftCorner(split.first, split.first).setIdentity();
  } else {
    E.bottomRightCorner(split.second, split.second).setIdentity();
  }
  return E;
}

bool ValidationReport::ok() const {
  for (const auto& item : items) {
    if (!item.passed) return false;
  }
  return true;
}

std::string ValidationReport::Failures() const {
  std::string out;
  for (const auto& item : items) {
    if (item.passed) continue;
    if (!out.empty()) out += ", ";
    out += item.name;
  }
  return out;
}

ValidationReport ValidateStructuredPlant(const PartitionedPlant& plant,
                                         const BlockStructure& s) {
  ValidationReport report;
  const auto add = [&](std::string name, bool passed, double violation,
                       std::string detail = "") {
    report.items.push_back({std::move(name), passed, violation,
                            std::move(detail)});
  };

  const bool dims_ok =
      plant.A.rows() == s.n.total() && plant.A.cols() == s.n.total() &&
      plant.B1.rows() == s.n.total() && plant.B2.rows() == s.n.total() &&
      plant.B2.cols() == s.m.total() && plant.C1.cols() == s.n.total() &&
      plant.C2.rows() == s.k.total() && plant.C2.cols() == s.n.total() &&
      plant.D12.rows() == plant.C1.rows() &&
      plant.D12.cols() == s.m.total() && plant.D21.rows() == s.k.total() &&
      plant.D21.cols() == plant.B1.cols();
  add("dimensions", dims_ok, dims_ok ? 0.0 : 1.0,
      dims_ok ? "" : "matrix sizes disagree with the block structure");
  const bool blocks_ok = s.n.first >= 1 && s.n.second >= 1 &&
                         s.m.first >= 0 && s.m.second >= 0 &&
                         s.k.first >= 0 && s.k.second >= 0;
  add("nonempty state blocks", blocks_ok, blocks_ok ? 0.0 : 1.0);
  if (!dims_ok || !blocks_ok) return report;

  const auto upper_right = [](const Matrix& M, const BlockSplit& rows,
                              const BlockSplit& cols) {
    return MaxAbs(M.block(0, rows.first == 0 ? 0 : cols.first, rows.first,
                          cols.second));
  };
  const double a12 = upper_right(plant.A, s.n, s.n);
  add("A lower triangular", a12 == 0.0, a12,
      a12 == 0.0 ? "" : "block (1,2) of A is nonzero");
  const double b12 = upper_right(plant.B2, s.n, s.m);
  add("B2 lower triangular", b12 == 0.0, b12,
      b12 == 0.0 ? "" : "block (1,2) of B2 is nonzero");
  const double c12 = upper_right(plant.C2, s.k, s.n);
  add("C2 lower triangular", c12 == 0.0, c12,
      c12 == 0.0 ? "" : "block (1,2) of C2 is nonzero");

  const bool a1s = IsStabilizable(plant.A, plant.B1);
  const bool a1d = IsDetectable(plant.C1, plant.A);
  add("A1 (A,B1) stabilizable", a1s, a1s ? 0.0 : 1.0);
  add("A1 (C1,A) detectable", a1d, a1d ? 0.0 : 1.0);
  const bool a2s = IsStabilizable(plant.A, plant.B2);
  const bool a2d = IsDetectable(plant.C2, plant.A);
  add("A2 (A,B2) stabilizable", a2s, a2s ? 0.0 : 1.0);
  add("A2 (C2,A) detectable", a2d, a2d ? 0.0 : 1.0);

  const Eigen::Index nu = s.m.total(), ny = s.k.total();
  Matrix a3(nu, plant.num_states() + nu);
  a3 << plant.D12.transpose() * plant.C1,
      plant.D12.transpose() * plant.D12 - Matrix::Identity(nu, nu);
  const double v3 = MaxAbs(a3);
  add("A3 D12'[C1 D12] = [0 I]", v3 <= 1e-10, v3);
  Matrix a4(ny, plant.num_states() + ny);
  a4 << plant.D21 * plant.B1.transpose(),
      plant.D21 * plant.D21.transpose() - Matrix::Identity(ny, ny);
  const double v4 = MaxAbs(a4);
  add("A4 D21[B1' D21'] = [0 I]", v4 <= 1e-10, v4);
  return report;
}

namespace {

void CheckRadius(const Matrix& P, const Matrix& Q, double gamma, double guard,
                 const char* what) {
  const double rho = CouplingRadius(P, Q);
  if (!(rho < gamma * gamma * (1.0 - guard))) {
    std::ostringstream os;
    os << "coupling radius violated: " << what << " = " << rho
       << " >= gamma^2 = " << gamma * gamma;
    throw CouplingRadiusError(os.str());
  }
}

Matrix Identity(Eigen::Index n) { return Matrix::Identity(n, n); }

}  // namespace

Hamiltonian BuildJX(const StructuredPlant& sp, const CentralSolution& central,
                    const Matrix& Yhat, double radius_guard) {
  const PartitionedPlant& p = sp.plant;
  const double gamma = central.gamma;
  const double g2 = 1.0 / (gamma * gamma);
  CheckRadius(central.X, Yhat, gamma, radius_guard, "rho(X Yhat)");
  const Matrix& X = central.X;
  const Matrix& K = central.K;
  const Matrix E2m = BlockProjector(sp.structure.m, 2);
  const Matrix E1m = BlockProjector(sp.structure.m, 1);
  const Matrix E1k = BlockProjector(sp.structure.k, 1);

  const Matrix ZL = (Identity(p.num_states()) - g2 * Yhat * X).inverse();
  const Matrix Lhat = -Yhat * p.C2.transpose() * E1k;
  const Matrix B1B1 = p.B1 * p.B1.transpose();
  const Matrix ZLLhat = ZL * Lhat;
  Matrix AX = p.A + p.B2 * E2m * K + ZLLhat * p.C2 + g2 * B1B1 * X;
  Matrix RX = g2 * (B1B1 + ZLLhat * ZLLhat.transpose()) -
              p.B2 * E2m * p.B2.transpose();
  Matrix QX = K.transpose() * E1m * K;
  return Hamiltonian(std::move(AX), Symmetrize(RX), Symmetrize(QX));
}

Hamiltonian BuildJY(const StructuredPlant& sp, const CentralSolution& central,
                    const Matrix& Xhat, double radius_guard) {
  const PartitionedPlant& p = sp.plant;
  const double gamma = central.gamma;
  const double g2 = 1.0 / (gamma * gamma);
  CheckRadius(Xhat, central.Y, gamma, radius_guard, "rho(Xhat Y)");
  const Matrix& Y = central.Y;
  const Matrix& L = central.L;
  const Matrix E2m = BlockProjector(sp.structure.m, 2);
  const Matrix E1k = BlockProjector(sp.structure.k, 1);
  const Matrix E2k = BlockProjector(sp.structure.k, 2);

  const Matrix ZK = (Identity(p.num_states()) - g2 * Y * Xhat).inverse();
  const Matrix Khat = -E2m * p.B2.transpose() * Xhat;
  const Matrix C1C1 = p.C1.transpose() * p.C1;
  const Matrix KhatZK = Khat * ZK;
  const Matrix AY = p.A + p.B2 * KhatZK + L * E1k * p.C2 + g2 * Y * C1C1;
  Matrix RY = g2 * (C1C1 + KhatZK.transpose() * KhatZK) -
              p.C2.transpose() * E1k * p.C2;
  Matrix QY = L * E2k * L.transpose();
  return Hamiltonian(AY.transpose(), Symmetrize(RY), Symmetrize(QY));
}

StructuredSolution MakeStructuredSolution(const StructuredPlant& sp,
                                          const CentralSolution& central,
                                          const Matrix& Xhat,
                                          const Matrix& Yhat) {
  const PartitionedPlant& p = sp.plant;
  const double g2 = 1.0 / (central.gamma * central.gamma);
  const Eigen::Index n = p.num_states();
  StructuredSolution sol;
  sol.central = central;
  sol.gamma = central.gamma;
  sol.Xhat = Xhat;
  sol.Yhat = Yhat;
  sol.Khat = -BlockProjector(sp.structure.m, 2) * p.B2.transpose() * Xhat;
  sol.Lhat = -Yhat * p.C2.transpose() * BlockProjector(sp.structure.k, 1);
  sol.ZK = (Identity(n) - g2 * central.Y * Xhat).inverse();
  sol.ZL = (Identity(n) - g2 * Yhat * central.X).inverse();
  return sol;
}

C2Report CheckC2(const StructuredPlant& sp, const CentralSolution& central,
                 const Matrix& Xhat, const Matrix& Yhat, double tol,
                 const RiccatiOptions& riccati) {
  C2Report r;
  const double gamma = central.gamma;
  const double scale = 1.0 + Xhat.norm() + Yhat.norm();
  const Matrix dX = Xhat - central.X;
  const Matrix dY = Yhat - central.Y;
  r.rho_x_yhat = CouplingRadius(central.X, Yhat);
  r.rho_xhat_y = CouplingRadius(Xhat, central.Y);
  r.min_eig_dx = MinSymmetricEigenvalue(dX);
  r.min_eig_dy = MinSymmetricEigenvalue(dY);
  std::vector<std::string> failures;
  const double g2 = gamma * gamma;
  if (!(r.rho_x_yhat < g2) || !(r.rho_xhat_y < g2)) {
    r.reason = "spectral radius condition fails";
    return r;
  }
  RiccatiOutcome jx = TrySolveRiccati(BuildJX(sp, central, Yhat, 0.0), riccati);
  r.jx_in_domain = static_cast<bool>(jx);
  if (jx) r.jx_residual = (jx.solution->X - dX).norm();
  RiccatiOutcome jy = TrySolveRiccati(BuildJY(sp, central, Xhat, 0.0), riccati);
  r.jy_in_domain = static_cast<bool>(jy);
  if (jy) r.jy_residual = (jy.solution->X - dY).norm();

  if (!r.jx_in_domain) failures.push_back("J_X " + jx.failure);
  if (!r.jy_in_domain) failures.push_back("J_Y " + jy.failure);
  if (r.jx_in_domain && !(r.jx_residual <= tol * scale)) {
    failures.push_back("Xhat - X differs from ric(J_X(Yhat))");
  }
  if (r.jy_in_domain && !(r.jy_residual <= tol * scale)) {
    failures.push_back("Yhat - Y differs from ric(J_Y(Xhat))");
  }
  if (!(r.min_eig_dx >= -tol * scale)) failures.push_back("Xhat - X not PSD");
  if (!(r.min_eig_dy >= -tol * scale)) failures.push_back("Yhat - Y not PSD");
  r.holds = failures.empty();
  for (const auto& f : failures) {
    if (!r.reason.empty()) r.reason += "; ";
    r.reason += f;
  }
  return r;
}

const char* ToString(ItsStatus status) {
  switch (status) {
    case ItsStatus::kConverged: return "converged";
    case ItsStatus::kInconclusive: return "inconclusive";
    case ItsStatus::kCentralInfeasible: return "central problem infeasible";
    case ItsStatus::kNotInDomain: return "not in dom(Ric)";
    case ItsStatus::kCouplingViolated: return "coupling radius violated";
    case ItsStatus::kMaxIterations: return "maximum iterations exceeded";
  }
  return "unknown";
}

namespace {

void FinishTrace(IterationTrace& trace) {
  trace.errors.clear();
  if (trace.xhat.empty()) return;
  const Matrix& xf = trace.xhat.back();
  const Matrix& yf = trace.yhat.back();
  const double n = static_cast<double>(xf.rows());
  for (std::size_t i = 0; i < trace.xhat.size(); ++i) {
    trace.errors.push_back(std::sqrt((trace.xhat[i] - xf).squaredNorm() +
                                     (trace.yhat[i] - yf).squaredNorm()) /
                           n);
  }
}

ItsResult RunIterations(const StructuredPlant& sp,
                        const CentralSolution& central, const Matrix& Yhat0,
                        const ItsOptions& options) {
  ItsResult result;
  IterationTrace& trace = result.trace;
  const double n = static_cast<double>(sp.plant.num_states());
  Matrix Xk = central.X;
  Matrix Yk = Symmetrize(Yhat0);
  double best_step = INFINITY;
  int best_it = 0;

  for (int it = 1; it <= options.max_iter; ++it) {
    try {
      RiccatiOutcome jx = TrySolveRiccati(
          BuildJX(sp, central, Yk, options.radius_guard), options.riccati);
      if (!jx) {
        result.status = ItsStatus::kNotInDomain;
        result.failed_iterate = it - 1;
        result.message = "J_X(Yhat_" + std::to_string(it - 1) + ") " +
                         jx.failure;
        break;
      }
      Matrix Xn = Symmetrize(central.X + jx.solution->X);
      RiccatiOutcome jy = TrySolveRiccati(
          BuildJY(sp, central, Xn, options.radius_guard), options.riccati);
      if (!jy) {
        result.status = ItsStatus::kNotInDomain;
        result.failed_iterate = it;
        result.message = "J_Y(Xhat_" + std::to_string(it) + ") " + jy.failure;
        break;
      }
      Matrix Yn = Symmetrize(central.Y + jy.solution->X);
      const double step =
          std::sqrt((Xn - Xk).squaredNorm() + (Yn - Yk).squaredNorm()) / n;
      Xk = std::move(Xn);
      Yk = std::move(Yn);
      trace.xhat.push_back(Xk);
      trace.yhat.push_back(Yk);
      trace.step_norms.push_back(step);
      trace.iterations = it;
      const double tol = options.conv_tol > 0
                             ? options.conv_tol
                             : 1e-12 * (1.0 + Xk.norm() + Yk.norm());
      if (step < tol) {
        trace.converged = true;
        break;
      }
      if (step < best_step) {
        best_step = step;
        best_it = it;
      }
      if (options.stagnation_tol > 0 && it - best_it >= 10 &&
          best_step < options.stagnation_tol *
                          (1.0 + Xk.norm() + Yk.norm())) {
        trace.xhat.resize(best_it);
        trace.yhat.resize(best_it);
        trace.step_norms.resize(best_it);
        trace.iterations = best_it;
        Xk = trace.xhat.back();
        Yk = trace.yhat.back();
        trace.converged = true;
        break;
      }
      if (options.predictive_stop && it >= 30) {
        const auto& steps = trace.step_norms;
        const double rate =
            std::pow(steps[it - 1] / steps[it - 11], 1.0 / 10.0);
        const double remaining =
            rate < 1.0 ? std::log(tol / step) / std::log(rate) : INFINITY;
        if (!(it + remaining <= options.max_iter)) {
          result.status = ItsStatus::kMaxIterations;
          result.message = "projected to exceed " +
                           std::to_string(options.max_iter) +
                           " iterations (linear rate " +
                           std::to_string(rate) + ")";
          break;
        }
      }
    } catch (const CouplingRadiusError& e) {
      result.status = ItsStatus::kCouplingViolated;
      result.failed_iterate = it;
      result.message = e.what();
      break;
    }
  }
  FinishTrace(trace);
  spdlog::trace("ITS at gamma = {:.10g}: {} iterations, {}", central.gamma,
                trace.iterations,
                trace.converged ? "converged" : result.message);
  if (!trace.converged) {
    if (result.message.empty()) {
      result.status = ItsStatus::kMaxIterations;
      result.message = "no convergence within " +
                       std::to_string(options.max_iter) + " iterations";
    }
    return result;
  }
  // Post-checks: X̂ >= X, Ŷ >= Y, both radii, and the fixed point itself.
  result.c2 = CheckC2(sp, central, Xk, Yk, options.c2_tol, options.riccati);
  result.status =
      result.c2.holds ? ItsStatus::kConverged : ItsStatus::kInconclusive;
  if (!result.c2.holds) result.message = "inconclusive: " + result.c2.reason;
  result.solution = MakeStructuredSolution(sp, central, Xk, Yk);
  return result;
}

}  // namespace

ItsResult ItsIterate(const StructuredPlant& sp, const CentralSolution& central,
                     const Matrix& Yhat0, const ItsOptions& options) {
  ItsResult result = RunIterations(sp, central, Yhat0, options);
  if (result.ok() || !options.allow_escalation) return result;

  // γ may be too close to γ_opt for this initialization; walk down from the
  // large-γ limit instead.
  const double gamma = central.gamma;
  ItsOptions inner = options;
  inner.allow_escalation = false;
  try {
    const H2LimitInit init = ComputeH2LimitInit(sp, gamma, 0.0, inner);
    ContinuationResult cont = WarmStartContinuation(
        sp, GeometricSchedule(init.gamma_init, gamma, options.schedule_ratio),
        init.Yhat0, inner);
    if (cont.ok()) {
      ItsResult escalated = std::move(cont.stages.back().result);
      escalated.escalated = true;
      cont.stages.pop_back();
      escalated.stages = std::move(cont.stages);
      return escalated;
    }
    result.message += "; continuation failed: " + cont.message;
  } catch (const std::runtime_error& e) {
    result.message += std::string("; continuation failed: ") + e.what();
  }
  return result;
}

ItsResult ItsIterate(const StructuredPlant& sp, double gamma,
                     const Matrix& Yhat0, const ItsOptions& options) {
  DgkfResult dgkf = DgkfExists(sp.plant, gamma, options.dgkf);
  if (!dgkf.feasible) {
    ItsResult result;
    result.status = ItsStatus::kCentralInfeasible;
    result.message = dgkf.failed_condition + " fails: " + dgkf.diagnostic;
    return result;
  }
  return ItsIterate(sp, *dgkf.solution, Yhat0, options);
}

H2LimitInit ComputeH2LimitInit(const StructuredPlant& sp, double gamma_cen,
                               double gamma_init, const ItsOptions& options) {
  H2LimitInit init;
  init.gamma_init =
      gamma_init > 0 ? gamma_init : 1e6 * std::max(1.0, gamma_cen);
  ItsOptions inner = options;
  inner.allow_escalation = false;
  const auto start_from_y = [&](double gamma) {
    ItsResult run;
    DgkfResult dgkf = DgkfExists(sp.plant, gamma, options.dgkf);
    if (!dgkf.feasible) {
      run.status = ItsStatus::kCentralInfeasible;
      run.message = "central problem infeasible (" + dgkf.diagnostic + ")";
      return run;
    }
    return ItsIterate(sp, *dgkf.solution, dgkf.solution->Y, inner);
  };

  init.run = start_from_y(init.gamma_init);
  if (!init.run.ok() && init.run.status != ItsStatus::kCentralInfeasible) {
    // With Ŷ₀ = Y the first-block estimator may be unstable; the γ⁻² terms
    // then only barely keep J_X in dom(Ric). Find a smaller γ where the
    // start works and walk back up.
    const double floor = 2.0 * std::max(1.0, gamma_cen);
    for (double g = init.gamma_init / 10.0; g >= floor; g /= 10.0) {
      ItsResult run = start_from_y(g);
      if (!run.ok()) continue;
      std::vector<double> schedule;
      for (double up = g * 10.0; up < init.gamma_init * (1.0 - 1e-12);
           up *= 10.0) {
        schedule.push_back(up);
      }
      schedule.push_back(init.gamma_init);
      ContinuationResult cont = WarmStartContinuation(
          sp, schedule, run.solution->Yhat, inner);
      if (cont.ok()) {
        init.run = std::move(cont.stages.back().result);
        break;
      }
    }
  }
  if (!init.run.ok()) {
    throw std::runtime_error("H2-limit initialization unavailable: " +
                             init.run.message);
  }
  spdlog::debug("H2-limit initialization at gamma = {:.6g}: {} iterations",
                init.gamma_init, init.run.trace.iterations);
  init.Yhat0 = init.run.solution->Yhat;
  return init;
}

std::vector<double> GeometricSchedule(double gamma_start, double gamma_target,
                                      double ratio) {
  if (!(ratio > 0 && ratio < 1)) {
    throw std::invalid_argument("GeometricSchedule: ratio must be in (0,1)");
  }
  std::vector<double> out;
  for (double g = gamma_start; g > gamma_target * (1.0 + 1e-12); g *= ratio) {
    out.push_back(g);
  }
  out.push_back(gamma_target);
  return out;
}

ContinuationResult WarmStartContinuation(const StructuredPlant& sp,
                                         const std::vector<double>& schedule,
                                         const Matrix& Yhat0,
                                         const ItsOptions& options) {
  ContinuationResult out;
  if (schedule.empty()) {
    throw std::invalid_argument("WarmStartContinuation: empty schedule");
  }
  ItsOptions inner = options;
  inner.allow_escalation = false;
  Matrix yhat = Yhat0;
  // After the first stage the start is Y(γ) plus the previous offset Ŷ - Y,
  // so blocks of Ŷ that track Y follow the new central solution exactly.
  std::optional<Matrix> offset;

  const auto run_stage = [&](double gamma) -> bool {
    ContinuationStage stage;
    stage.gamma = gamma;
    const DgkfResult dgkf = DgkfExists(sp.plant, gamma, inner.dgkf);
    if (offset && dgkf.feasible) {
      stage.result = ItsIterate(sp, *dgkf.solution,
                                dgkf.solution->Y + *offset, inner);
      if (!stage.result.ok()) {
        out.total_iterations += stage.result.trace.iterations;
        stage.result = ItsIterate(sp, *dgkf.solution, yhat, inner);
      }
    } else if (dgkf.feasible) {
      stage.result = ItsIterate(sp, *dgkf.solution, yhat, inner);
    } else {
      stage.result = ItsIterate(sp, gamma, yhat, inner);
    }
    out.total_iterations += stage.result.trace.iterations;
    const bool ok = stage.result.ok();
    if (ok) {
      yhat = stage.result.solution->Yhat;
      offset = yhat - stage.result.solution->central.Y;
    }
    out.stages.push_back(std::move(stage));
    return ok;
  };
  // Moves from γ_from (already solved) to γ_to, halving the log-step on
  // failure.
  std::function<bool(double, double, int)> advance =
      [&](double from, double to, int depth) -> bool {
    const Matrix saved = yhat;
    const std::optional<Matrix> saved_offset = offset;
    if (run_stage(to)) return true;
    yhat = saved;
    offset = saved_offset;
    if (depth <= 0) return false;
    const double mid = std::sqrt(from * to);
    return advance(from, mid, depth - 1) && advance(mid, to, depth - 1);
  };

  if (!run_stage(schedule.front())) {
    out.failed_gamma = schedule.front();
  } else {
    for (std::size_t i = 1; i < schedule.size(); ++i) {
      if (!advance(schedule[i - 1], schedule[i],
                   options.continuation_refinements)) {
        out.failed_gamma = schedule[i];
        break;
      }
    }
  }
  if (out.failed_gamma > 0) {
    std::ostringstream os;
    os << "continuation broke at gamma = " << out.failed_gamma << " ("
       << out.stages.back().result.message
       << "); decrease gamma more slowly (larger schedule ratio)";
    out.message = os.str();
    return out;
  }
  out.solution = out.stages.back().result.solution;
  return out;
}

StructuredGammaSearch GammaOptInf(const StructuredPlant& sp, double rel_tol,
                                  const ItsOptions& options) {
  StructuredGammaSearch out;
  out.central = GammaCenInf(sp.plant, std::min(1e-6, 0.1 * rel_tol),
                            options.dgkf);
  ItsOptions inner = options;
  inner.allow_escalation = false;
  inner.max_iter = std::max(options.max_iter, options.search_max_iter);
  inner.predictive_stop = true;
  inner.stagnation_tol = 1e-7;

  H2LimitInit init;
  try {
    init = ComputeH2LimitInit(sp, out.central.gamma, 0.0, inner);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("infeasible");
  }
  double hi = init.gamma_init;
  Matrix yhat_hi = init.Yhat0;
  Matrix y_hi = init.run.solution->central.Y;
  out.solution = init.run.solution;
  out.search.history.emplace_back(hi, true);

  // Feasibility of C1 ∧ C2 at γ, warm-started from the feasible upper
  // bracket; a failed direct run is retried through a short continuation.
  const auto test = [&](double gamma) -> std::optional<StructuredSolution> {
    DgkfResult dgkf = DgkfExists(sp.plant, gamma, options.dgkf);
    if (!dgkf.feasible) return std::nullopt;
    const Matrix& y = dgkf.solution->Y;
    ItsResult shifted = ItsIterate(sp, *dgkf.solution, y + yhat_hi - y_hi, inner);
    if (shifted.ok()) return shifted.solution;
    ItsResult direct = ItsIterate(sp, *dgkf.solution, yhat_hi, inner);
    if (direct.ok()) return direct.solution;
    if (direct.status == ItsStatus::kCouplingViolated) {
      // Ŷ from the upper bracket is too large for this γ; Y is not.
      ItsResult from_y =
          ItsIterate(sp, *dgkf.solution, dgkf.solution->Y, inner);
      if (from_y.ok()) return from_y.solution;
    }
    std::vector<double> schedule =
        GeometricSchedule(hi, gamma, std::pow(gamma / hi, 0.25) * 0.999);
    schedule.erase(schedule.begin());
    ContinuationResult cont =
        WarmStartContinuation(sp, schedule, yhat_hi, inner);
    if (cont.ok()) return cont.solution;
    return std::nullopt;
  };
  const auto record = [&](double gamma,
                          const std::optional<StructuredSolution>& sol) {
    spdlog::debug("gamma_opt search: gamma = {:.10g} {}", gamma,
                  sol ? "feasible" : "infeasible");
    out.search.history.emplace_back(gamma, sol.has_value());
    if (sol) {
      hi = gamma;
      yhat_hi = sol->Yhat;
      y_hi = sol->central.Y;
      out.solution = sol;
    }
    return sol.has_value();
  };

  double lo = out.central.lower;
  while (hi * 0.5 > out.central.gamma) {
    const double gamma = hi * 0.5;
    if (!record(gamma, test(gamma))) {
      lo = gamma;
      break;
    }
  }
  if (lo < out.central.lower) lo = out.central.lower;
  if (hi * 0.5 <= out.central.gamma && lo == out.central.lower) {
    // Every halving succeeded; the bracket is [γ_cen lower bound, hi].
    const double gamma = out.central.gamma;
    if (gamma < hi) {
      if (!record(gamma, test(gamma))) lo = gamma;
    }
  }
  while (hi / lo - 1.0 > rel_tol) {
    const double mid = std::sqrt(lo * hi);
    if (!record(mid, test(mid))) lo = mid;
  }
  out.search.gamma = hi;
  out.search.lower = lo;
  return out;
}

StateSpace BuildKme(const StructuredPlant& sp, const StructuredSolution& sol) {
  const PartitionedPlant& p = sp.plant;
  const CentralSolution& c = sol.central;
  const Eigen::Index n = p.num_states();
  const double g2 = 1.0 / (sol.gamma * sol.gamma);
  const Matrix Zinv = Identity(n) - g2 * c.Y * c.X;
  const Matrix A1 = p.A + p.B2 * c.K + sol.ZL * sol.Lhat * p.C2 +
                    g2 * p.B1 * p.B1.transpose() * c.X;
  const Matrix KhatZK = sol.Khat * sol.ZK;
  const Matrix A2 = p.A + p.B2 * KhatZK + c.L * p.C2 +
                    g2 * c.Y * p.C1.transpose() * p.C1;
  const Matrix F = c.K - KhatZK * Zinv;
  Matrix A = Matrix::Zero(2 * n, 2 * n);
  A.topLeftCorner(n, n) = A1;
  A.bottomLeftCorner(n, n) = p.B2 * F;
  A.bottomRightCorner(n, n) = A2;
  Matrix B(2 * n, p.num_measurements());
  B << -sol.ZL * sol.Lhat, -c.L;
  Matrix C(p.num_controls(), 2 * n);
  C << F, KhatZK;
  return StateSpace(A, B, C,
                    Matrix::Zero(p.num_controls(), p.num_measurements()));
}

StateSpace BuildKrn(const StructuredPlant& sp, const StructuredSolution& sol) {
  const PartitionedPlant& p = sp.plant;
  const CentralSolution& c = sol.central;
  const Eigen::Index n = p.num_states();
  Matrix A = Matrix::Zero(2 * n, 2 * n);
  A.topLeftCorner(n, n) = p.A + p.B2 * c.K + sol.Lhat * p.C2;
  A.bottomLeftCorner(n, n) = p.B2 * (c.K - sol.Khat);
  A.bottomRightCorner(n, n) = p.A + p.B2 * sol.Khat + c.L * p.C2;
  Matrix B(2 * n, p.num_measurements());
  B << -sol.Lhat, -c.L;
  Matrix C(p.num_controls(), 2 * n);
  C << c.K - sol.Khat, sol.Khat;
  return StateSpace(A, B, C,
                    Matrix::Zero(p.num_controls(), p.num_measurements()));
}

ItsResult SynthesizeStructured(const StructuredPlant& sp, double gamma,
                               const ItsOptions& options, double gamma_cen) {
  DgkfResult dgkf = DgkfExists(sp.plant, gamma, options.dgkf);
  if (!dgkf.feasible) {
    ItsResult result;
    result.status = ItsStatus::kCentralInfeasible;
    result.message = dgkf.failed_condition + " fails: " + dgkf.diagnostic;
    return result;
  }
  if (gamma_cen <= 0) gamma_cen = GammaCenInf(sp.plant, 1e-3).gamma;
  Matrix yhat0 = dgkf.solution->Y;
  try {
    yhat0 = ComputeH2LimitInit(sp, gamma_cen, 0.0, options).Yhat0;
  } catch (const std::runtime_error&) {
    // Fall back to Ŷ₀ = Y.
  }
  return ItsIterate(sp, *dgkf.solution, yhat0, options);
}

}  // namespace nested_hinf
