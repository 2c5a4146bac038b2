#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "nested_hinf/linalg.h"

namespace nested_hinf {

/// H = [A R; -Q -Aᵀ] with R and Q symmetric. Its ARE is
/// Aᵀ X + X A + Q + X R X = 0.
class Hamiltonian {
 public:
  /// Throws std::invalid_argument on non-square/non-conforming blocks or when
  /// R or Q is not symmetric to within 1e-9 relative.
  Hamiltonian(Matrix A, Matrix R, Matrix Q);

  const Matrix& A() const { return A_; }
  const Matrix& R() const { return R_; }
  const Matrix& Q() const { return Q_; }
  Eigen::Index size() const { return A_.rows(); }

  /// The 2n x 2n matrix [A R; -Q -Aᵀ].
  Matrix Assemble() const;

 private:
  Matrix A_, R_, Q_;
};

struct RiccatiOptions {
  /// Eigenvalues with |Re λ| <= axis_tol·(1 + ‖H‖_F) count as imaginary.
  double axis_tol = 1e-9;
  /// dom(Ric) rejects stable subspaces whose top block U₁ has cond(U₁) above
  /// this cap.
  double complementarity_cap = 1e8;
};

struct RiccatiSolution {
  Matrix X;
  double residual = 0.0;            // ‖AᵀX + XA + Q + XRX‖_F
  double closed_loop_margin = 0.0;  // -max Re λ(A + R X)
};

/// Result of a dom(Ric) membership test; `reason` is empty on success.
struct DomainCheck {
  bool in_domain = false;
  std::string reason;
  explicit operator bool() const { return in_domain; }
};

/// Either a solution or the reason it does not exist.
struct RiccatiOutcome {
  std::optional<RiccatiSolution> solution;
  std::string failure;
  explicit operator bool() const { return solution.has_value(); }
};

class RiccatiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

DomainCheck InDomRic(const Hamiltonian& H, const RiccatiOptions& options = {});

/// Stabilizing solution from the ordered real Schur form. Never throws for
/// mathematical failures; those come back in RiccatiOutcome::failure.
RiccatiOutcome TrySolveRiccati(const Hamiltonian& H,
                               const RiccatiOptions& options = {});

/// Throws RiccatiError("not in dom(Ric): ...") or
/// RiccatiError("ill-conditioned ARE: ...").
RiccatiSolution Ric(const Hamiltonian& H, const RiccatiOptions& options = {});

double AreResidual(const Hamiltonian& H, const Matrix& X);

}  // namespace nested_hinf
