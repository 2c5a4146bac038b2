#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nested_hinf/centralized.h"
#include "nested_hinf/lti.h"
#include "nested_hinf/riccati.h"

namespace nested_hinf {

/// A two-way split of a dimension.
struct BlockSplit {
  Eigen::Index first = 0;
  Eigen::Index second = 0;
  Eigen::Index total() const { return first + second; }
  bool operator==(const BlockSplit&) const = default;
};

/// E₁ = [I; 0] (which = 1) or E₂ = [0; I] (which = 2).
Matrix BlockEmbedding(const BlockSplit& split, int which);
/// E¹ = diag(I, 0) (which = 1) or E² = diag(0, I) (which = 2).
Matrix BlockProjector(const BlockSplit& split, int which);

/// Partition of the state (n), control input (m) and measurement (k).
struct BlockStructure {
  BlockSplit n, m, k;
  bool operator==(const BlockStructure&) const = default;
};

/// A plant with lower-triangular (A, B2, C2) under `structure`.
struct StructuredPlant {
  PartitionedPlant plant;
  BlockStructure structure;
};

struct ValidationReport {
  struct Item {
    std::string name;
    bool passed = false;
    double violation = 0.0;
    std::string detail;
  };
  std::vector<Item> items;

  bool ok() const;
  /// Names of failing checks, comma separated.
  std::string Failures() const;
};

/// Checks block dimensions, exact zeros in the (1,2) blocks of A, B2 and C2,
/// assumptions A1-A4 (A3/A4 to 1e-10 in max-abs), and non-empty state blocks.
ValidationReport ValidateStructuredPlant(const PartitionedPlant& plant,
                                         const BlockStructure& structure);

/// Thrown when ρ(X Ŷ) or ρ(X̂ Y) reaches γ².
class CouplingRadiusError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// J_X(Ŷ) with the helper quantities A_X, R_X, L̂, Z_L.
Hamiltonian BuildJX(const StructuredPlant& sp, const CentralSolution& central,
                    const Matrix& Yhat, double radius_guard = 1e-9);
/// J_Y(X̂) with the helper quantities A_Y, R_Y, K̂, Z_K.
Hamiltonian BuildJY(const StructuredPlant& sp, const CentralSolution& central,
                    const Matrix& Xhat, double radius_guard = 1e-9);

/// All synthesis products for one (plant, γ).
struct StructuredSolution {
  CentralSolution central;
  Matrix Xhat, Yhat;
  Matrix Khat;  // -E² B2ᵀ X̂
  Matrix Lhat;  // -Ŷ C2ᵀ E¹
  Matrix ZK;    // (I - γ⁻² Y X̂)⁻¹
  Matrix ZL;    // (I - γ⁻² Ŷ X)⁻¹
  double gamma = 0.0;
};

StructuredSolution MakeStructuredSolution(const StructuredPlant& sp,
                                          const CentralSolution& central,
                                          const Matrix& Xhat,
                                          const Matrix& Yhat);

/// Measured quantities of the fixed-point conditions.
struct C2Report {
  bool holds = false;
  bool jx_in_domain = false;
  bool jy_in_domain = false;
  double jx_residual = INFINITY;  // ‖ric(J_X(Ŷ)) - (X̂ - X)‖_F
  double jy_residual = INFINITY;  // ‖ric(J_Y(X̂)) - (Ŷ - Y)‖_F
  double min_eig_dx = -INFINITY;  // λ_min(X̂ - X)
  double min_eig_dy = -INFINITY;  // λ_min(Ŷ - Y)
  double rho_x_yhat = INFINITY;   // ρ(X Ŷ)
  double rho_xhat_y = INFINITY;   // ρ(X̂ Y)
  std::string reason;
};

/// Tolerances are relative to scale = 1 + ‖X̂‖_F + ‖Ŷ‖_F.
C2Report CheckC2(const StructuredPlant& sp, const CentralSolution& central,
                 const Matrix& Xhat, const Matrix& Yhat, double tol = 1e-8,
                 const RiccatiOptions& riccati = {});

struct ItsOptions {
  int max_iter = 200;
  /// Step-norm threshold; <= 0 selects 1e-12 (1 + ‖X̂‖_F + ‖Ŷ‖_F).
  double conv_tol = 0.0;
  double radius_guard = 1e-9;
  double c2_tol = 1e-8;
  RiccatiOptions riccati;
  DgkfOptions dgkf;
  /// On failure, retry through γ-continuation from the large-γ limit.
  bool allow_escalation = false;
  double schedule_ratio = 0.8;
  /// Times a failed continuation step is split in two before giving up.
  int continuation_refinements = 3;
  /// Abort early when the observed linear rate cannot reach conv_tol within
  /// max_iter (or the steps grow).
  bool predictive_stop = false;
  /// When > 0: if the step has not improved for 10 iterations and the best
  /// step is below stagnation_tol·(1 + ‖X̂‖_F + ‖Ŷ‖_F), the best iterate is
  /// accepted (it still has to pass CheckC2). Near γ_cen the Riccati solves
  /// are ill-conditioned and the steps stall at a noise floor.
  double stagnation_tol = 0.0;
  /// Iteration cap for the feasibility tests inside GammaOptInf, which run
  /// with predictive_stop and stagnation_tol = 1e-7.
  int search_max_iter = 500;
};

enum class ItsStatus {
  kConverged,           // converged and C2 verified
  kInconclusive,        // converged but a post-check failed
  kCentralInfeasible,   // C1 fails at γ
  kNotInDomain,         // J_X or J_Y left dom(Ric)
  kCouplingViolated,    // ρ(XŶ) or ρ(X̂Y) reached γ²
  kMaxIterations,
};

const char* ToString(ItsStatus status);

/// Iterates of one ITS run. errors[k] is e_k against the final iterate.
struct IterationTrace {
  std::vector<Matrix> xhat;
  std::vector<Matrix> yhat;
  std::vector<double> step_norms;
  std::vector<double> errors;
  bool converged = false;
  int iterations = 0;
};

struct ContinuationStage;

struct ItsResult {
  ItsStatus status = ItsStatus::kMaxIterations;
  std::optional<StructuredSolution> solution;
  IterationTrace trace;
  C2Report c2;
  std::string message;
  int failed_iterate = -1;
  /// Populated when the run fell back to γ-continuation.
  bool escalated = false;
  std::vector<ContinuationStage> stages;

  bool ok() const { return status == ItsStatus::kConverged; }
};

struct ContinuationStage {
  double gamma = 0.0;
  ItsResult result;
};

/// X̂_{k+1} = X + ric(J_X(Ŷ_k)), Ŷ_{k+1} = Y + ric(J_Y(X̂_{k+1})).
ItsResult ItsIterate(const StructuredPlant& sp, const CentralSolution& central,
                     const Matrix& Yhat0, const ItsOptions& options = {});

/// Same, computing the central solution at γ first.
ItsResult ItsIterate(const StructuredPlant& sp, double gamma,
                     const Matrix& Yhat0, const ItsOptions& options = {});

struct H2LimitInit {
  Matrix Yhat0;
  double gamma_init = 0.0;
  ItsResult run;
};

/// Ŷ fixed point at γ_init = 1e6·max(1, γ_cen), started from Ŷ₀ = Y. A
/// non-positive gamma_init selects that default, which needs gamma_cen.
/// Throws std::runtime_error("H2-limit initialization unavailable").
H2LimitInit ComputeH2LimitInit(const StructuredPlant& sp, double gamma_cen,
                               double gamma_init = 0.0,
                               const ItsOptions& options = {});

/// Decreasing γ values from start to target by `ratio` (target included).
std::vector<double> GeometricSchedule(double gamma_start, double gamma_target,
                                      double ratio);

struct ContinuationResult {
  std::optional<StructuredSolution> solution;
  std::vector<ContinuationStage> stages;
  double failed_gamma = 0.0;
  std::string message;
  int total_iterations = 0;
  bool ok() const { return solution.has_value(); }
};

/// Chains ITS runs along `schedule`, threading the converged Ŷ forward.
ContinuationResult WarmStartContinuation(const StructuredPlant& sp,
                                         const std::vector<double>& schedule,
                                         const Matrix& Yhat0,
                                         const ItsOptions& options = {});

struct StructuredGammaSearch {
  GammaSearch search;  // over C1 ∧ C2
  GammaSearch central;
  std::optional<StructuredSolution> solution;  // at search.gamma
};

/// Infimal γ for which C1 and C2 hold, by warm-started bisection. Throws
/// std::runtime_error("infeasible") if no γ below 1e8 works.
StructuredGammaSearch GammaOptInf(const StructuredPlant& sp,
                                  double rel_tol = 1e-4,
                                  const ItsOptions& options = {});

/// The 2n-state minimum-entropy controller in (ξ¹, ζ²) coordinates.
StateSpace BuildKme(const StructuredPlant& sp, const StructuredSolution& sol);

/// The limiting controller with Z = Z_K = Z_L = I, built from the gains of a
/// large-γ solution.
StateSpace BuildKrn(const StructuredPlant& sp, const StructuredSolution& sol);

/// Full structured pipeline at γ: C1, large-γ initialization, ITS with
/// escalation. `gamma_cen` only sizes the initialization (<= 0: computed).
ItsResult SynthesizeStructured(const StructuredPlant& sp, double gamma,
                               const ItsOptions& options = {},
                               double gamma_cen = 0.0);

}  // namespace nested_hinf
