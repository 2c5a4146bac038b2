#include "nested_hinf/centralized.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nested_hinf {

double CouplingRadius(const Matrix& P, const Matrix& Q) {
  if (P.size() == 0) return 0.0;
  const ComplexVector eig = (P * Q).eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < eig.size(); ++i) {
    if (std::abs(eig(i)) > std::abs(eig(best))) best = i;
  }
  return eig(best).real();
}

std::pair<Hamiltonian, Hamiltonian> BuildCentralHamiltonians(
    const PartitionedPlant& plant, double gamma) {
  plant.CheckDimensions();
  const double g2 = 1.0 / (gamma * gamma);
  const Matrix& B1 = plant.B1;
  const Matrix& B2 = plant.B2;
  const Matrix& C1 = plant.C1;
  const Matrix& C2 = plant.C2;
  Hamiltonian hx(plant.A, g2 * B1 * B1.transpose() - B2 * B2.transpose(),
                 C1.transpose() * C1);
  Hamiltonian hy(plant.A.transpose(),
                 g2 * C1.transpose() * C1 - C2.transpose() * C2,
                 B1 * B1.transpose());
  return {std::move(hx), std::move(hy)};
}

DgkfResult DgkfExists(const PartitionedPlant& plant, double gamma,
                      const DgkfOptions& options) {
  DgkfResult result;
  auto [hx, hy] = BuildCentralHamiltonians(plant, gamma);

  const auto solve_psd = [&](const Hamiltonian& H, const char* name,
                             const char* label) -> std::optional<Matrix> {
    RiccatiOutcome outcome = TrySolveRiccati(H, options.riccati);
    if (!outcome) {
      result.failed_condition = name;
      result.diagnostic = std::string(label) + " " + outcome.failure;
      return std::nullopt;
    }
    const Matrix& S = outcome.solution->X;
    const double min_eig = MinSymmetricEigenvalue(S);
    if (min_eig < -options.psd_tol * (1.0 + S.norm())) {
      std::ostringstream os;
      os << label << " is not PSD (min eigenvalue " << min_eig << ")";
      result.failed_condition = name;
      result.diagnostic = os.str();
      return std::nullopt;
    }
    return S;
  };

  const std::optional<Matrix> X = solve_psd(hx, "B1", "X");
  if (!X) return result;
  const std::optional<Matrix> Y = solve_psd(hy, "B2", "Y");
  if (!Y) return result;

  result.rho_xy = CouplingRadius(*X, *Y);
  const double bound = gamma * gamma * (1.0 - options.radius_guard);
  if (!(result.rho_xy < bound)) {
    std::ostringstream os;
    os << "rho(XY) = " << result.rho_xy << " >= gamma^2 = " << gamma * gamma;
    result.failed_condition = "B3";
    result.diagnostic = os.str();
    return result;
  }

  const Eigen::Index n = plant.num_states();
  CentralSolution sol;
  sol.X = *X;
  sol.Y = *Y;
  sol.gamma = gamma;
  sol.Z = (Matrix::Identity(n, n) - (*Y) * (*X) / (gamma * gamma)).inverse();
  sol.K = -plant.B2.transpose() * sol.X;
  sol.L = -sol.Y * plant.C2.transpose();
  result.feasible = true;
  result.solution = std::move(sol);
  return result;
}

StateSpace BuildKcen(const PartitionedPlant& plant, const CentralSolution& sol) {
  const double g2 = 1.0 / (sol.gamma * sol.gamma);
  const Matrix A_hat = plant.A + plant.B2 * sol.K + sol.Z * sol.L * plant.C2 +
                       g2 * plant.B1 * plant.B1.transpose() * sol.X;
  return StateSpace(A_hat, -sol.Z * sol.L, sol.K,
                    Matrix::Zero(plant.num_controls(),
                                 plant.num_measurements()));
}

StateSpace BuildKcenDual(const PartitionedPlant& plant,
                         const CentralSolution& sol) {
  const double g2 = 1.0 / (sol.gamma * sol.gamma);
  const Matrix A_dual = plant.A + plant.B2 * sol.K * sol.Z + sol.L * plant.C2 +
                        g2 * sol.Y * plant.C1.transpose() * plant.C1;
  return StateSpace(A_dual, -sol.L, sol.K * sol.Z,
                    Matrix::Zero(plant.num_controls(),
                                 plant.num_measurements()));
}

GammaSearch GammaCenInf(const PartitionedPlant& plant, double rel_tol,
                        const DgkfOptions& options) {
  GammaSearch search;
  const auto feasible = [&](double gamma) {
    const bool ok = DgkfExists(plant, gamma, options).feasible;
    search.history.emplace_back(gamma, ok);
    return ok;
  };
  double lo = 0.0, hi = 0.0;
  if (feasible(1.0)) {
    hi = 1.0;
    lo = 0.5;
    while (feasible(lo)) {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-12) {
        search.gamma = hi;
        search.lower = 0.0;
        return search;
      }
    }
  } else {
    lo = 1.0;
    hi = 2.0;
    while (!feasible(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e8) throw std::runtime_error("infeasible problem");
    }
  }
  while (hi / lo - 1.0 > rel_tol) {
    const double mid = std::sqrt(lo * hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  search.gamma = hi;
  search.lower = lo;
  return search;
}

}  // namespace nested_hinf
