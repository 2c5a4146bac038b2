#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nested_hinf/lti.h"
#include "nested_hinf/riccati.h"

namespace nested_hinf {

/// Products of the two-Riccati solution of the unstructured problem.
struct CentralSolution {
  Matrix X;  // ric(H_X)
  Matrix Y;  // ric(H_Y)
  Matrix Z;  // (I - γ⁻² Y X)⁻¹
  Matrix K;  // -B2ᵀ X
  Matrix L;  // -Y C2ᵀ
  double gamma = 0.0;
};

struct DgkfOptions {
  RiccatiOptions riccati;
  /// X, Y >= 0 is tested as λ_min >= -psd_tol·(1 + ‖·‖_F).
  double psd_tol = 1e-8;
  /// ρ(XY) < γ²(1 - radius_guard).
  double radius_guard = 1e-9;
};

/// Outcome of testing B1-B3. When infeasible, `failed_condition` is "B1",
/// "B2" or "B3" and `diagnostic` explains the offending quantity.
struct DgkfResult {
  bool feasible = false;
  std::optional<CentralSolution> solution;
  std::string failed_condition;
  std::string diagnostic;
  double rho_xy = 0.0;  // populated once X and Y exist
};

std::pair<Hamiltonian, Hamiltonian> BuildCentralHamiltonians(
    const PartitionedPlant& plant, double gamma);

DgkfResult DgkfExists(const PartitionedPlant& plant, double gamma,
                      const DgkfOptions& options = {});

/// Realization (Â, -Z L, K, 0) with Â = A + B2 K + Z L C2 + γ⁻² B1 B1ᵀ X.
StateSpace BuildKcen(const PartitionedPlant& plant, const CentralSolution& sol);

/// The same controller in ζ = Z⁻¹ξ coordinates:
/// (A + B2 K Z + L C2 + γ⁻² Y C1ᵀ C1, -L, K Z, 0).
StateSpace BuildKcenDual(const PartitionedPlant& plant,
                         const CentralSolution& sol);

/// Record of a bracketing search over γ.
struct GammaSearch {
  double gamma = 0.0;  // smallest γ verified feasible
  double lower = 0.0;  // largest γ verified infeasible
  std::vector<std::pair<double, bool>> history;  // (γ, feasible) in test order
};

/// Geometric bisection on DgkfExists. Throws std::runtime_error("infeasible
/// problem") if nothing below 1e8 is feasible.
GammaSearch GammaCenInf(const PartitionedPlant& plant, double rel_tol = 1e-6,
                        const DgkfOptions& options = {});

/// ρ(M) computed as the real part of the largest-magnitude eigenvalue of M.
/// For M a product of PSD matrices the spectrum is real and non-negative.
double CouplingRadius(const Matrix& P, const Matrix& Q);

}  // namespace nested_hinf
