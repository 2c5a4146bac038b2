#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nested_hinf/structured.h"

namespace nested_hinf {

enum class Coordinates { kM, kX, kY };

const char* ToString(Coordinates which);

/// Maps the natural closed-loop state (x, ξ¹, ζ²) of plant + K_me to
///   m: (ξ¹, x - ξ¹, x - ζ²)
///   x: (x, x - ξ¹, x - ξ²),  ξ² = Z_K (ζ² - (Z⁻¹ - Z_K⁻¹) ξ¹)
///   y: (ζ¹, ζ² - ζ¹, x - ζ²), ζ¹ = Z_L⁻¹ ξ¹
struct CoordinateMap {
  Coordinates which = Coordinates::kM;
  Matrix T;
};

/// Throws std::domain_error naming the matrix whose inverse is singular.
CoordinateMap CoordinateTransform(const StructuredSolution& sol,
                                  Coordinates which);

/// close_loop(plant, K_me) in the coordinates of `map` (3n states).
StateSpace ClosedLoopInCoordinates(const StructuredPlant& sp,
                                   const StateSpace& kme,
                                   const CoordinateMap& map);

struct Lemma3Report {
  bool passed = false;
  bool hx_in_domain = false;
  bool hy_in_domain = false;
  double scale = 0.0;  // 1 + ‖X̂‖_F + ‖Ŷ‖_F
  // Largest off-diagonal n×n block (Frobenius) of ric(H̄_X), ric(H̄_Y).
  double offdiag_x = INFINITY;
  double offdiag_y = INFINITY;
  // Frobenius mismatch of the named diagonal blocks.
  double err_x = INFINITY;       // block 1 of ric(H̄_X) vs X
  double err_xhat = INFINITY;    // block 2 of ric(H̄_X) vs X̂ - X
  double err_yhat = INFINITY;    // block 2 of ric(H̄_Y) vs Ŷ - Y
  double err_y = INFINITY;       // block 3 of ric(H̄_Y) vs Y
  double min_eig_phi = -INFINITY;
  double min_eig_psi = -INFINITY;
  std::vector<std::string> failures;
};

/// Block-diagonal ARE certificate: ric(H̄_X) = diag(X, X̂ - X, Φ) and
/// ric(H̄_Y) = diag(Ψ, Ŷ - Y, Y) with Φ, Ψ >= 0, all to tol·scale.
Lemma3Report Lemma3Verify(const StructuredPlant& sp,
                          const StructuredSolution& sol, double tol = 1e-6);

/// Block-diagonal gains; see YoulaParams.
struct BlockGains {
  Matrix Kd;  // m×n, diag(K₁, K₂)
  Matrix Ld;  // n×k, diag(L₁, L₂)
};

/// LQR/filter gains from unit-weight AREs on each diagonal subsystem
/// (A_ii, B2_ii, C2_ii).
BlockGains DefaultBlockGains(const StructuredPlant& sp);

struct YoulaTriple {
  StateSpace T1, T2, T3;
  BlockGains gains;
};

/// T1 = [[A_Kd, -B2 Kd], [0, A_Ld]] with input [B1; B_Ld] and output
/// [C_Kd, -D12 Kd]; T2 = (A_Kd, B2, C_Kd, D12); T3 = (A_Ld, B_Ld, C2, D21),
/// where A_Kd = A + B2 Kd, A_Ld = A + Ld C2, C_Kd = C1 + D12 Kd and
/// B_Ld = B1 + Ld D21. Throws std::invalid_argument if the gains are not
/// block diagonal or do not stabilize.
YoulaTriple YoulaParams(const StructuredPlant& sp, const BlockGains& gains);
YoulaTriple YoulaParams(const StructuredPlant& sp);

/// Observer-based controller K0 = (A + B2 Kd + Ld C2, -Ld, Kd, 0).
StateSpace ObserverController(const StructuredPlant& sp,
                              const BlockGains& gains);

/// Controller whose closed loop is T1 + T2 Q T3: the observer of
/// ObserverController with u = Kd x̂ + Q (y - C2 x̂).
StateSpace ControllerFromYoula(const StructuredPlant& sp,
                               const BlockGains& gains, const StateSpace& Q);

/// T_cl + ε T2 ΔQ T3, the closed loop of the Youla parameter moved by ε ΔQ.
StateSpace PerturbClosedLoop(const YoulaTriple& triple,
                             const StateSpace& T_cl, const StateSpace& dQ,
                             double epsilon);

/// Thrown when (I - γ⁻² T_cl~ T_cl) is not positive on the imaginary axis.
class GammaTooSmallError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct OptimalityReport {
  bool passed = false;
  /// ‖stable part of M_ij‖₂ / ‖M‖₂ for blocks (1,1), (2,1), (2,2).
  double ratio_11 = INFINITY;
  double ratio_21 = INFINITY;
  double ratio_22 = INFINITY;
  /// Smallest |Re λ| over the realization of M, relative to 1 + ‖A_M‖.
  double axis_distance = 0.0;
  int num_states = 0;
  std::string reason;
};

/// Builds M = T2~ T_cl (I - γ⁻² T_cl~ T_cl)⁻¹ T3~ and splits it into stable
/// and antistable parts. Blocks (1,1), (2,1), (2,2) of the (m, k) grid pass
/// when their stable part is below tol relative to ‖M‖₂; block (1,2) passes
/// when M has no poles within 1e-6 (1 + ‖A_M‖) of the imaginary axis.
/// Throws GammaTooSmallError("gamma too small for optimality test").
OptimalityReport OptimalityCheck(const YoulaTriple& triple,
                                 const StateSpace& T_cl, double gamma,
                                 const BlockStructure& structure,
                                 double tol = 1e-6);

/// Stable and antistable additive parts of a system without imaginary-axis
/// poles; D goes to the stable part. Throws std::domain_error otherwise.
std::pair<StateSpace, StateSpace> StableAntistableSplit(const StateSpace& sys,
                                                        double axis_tol = 1e-6);

/// [[K11, 0], [K21, K22]]: K with block (1,2) removed, realized with two
/// copies of K's state.
StateSpace ProjectToStructure(const StateSpace& K, const BlockSplit& m,
                              const BlockSplit& k);

}  // namespace nested_hinf
