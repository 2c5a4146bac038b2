#pragma once

#include "nested_hinf/linalg.h"

namespace nested_hinf {

/// A real realization G(s) = D + C (sI - A)⁻¹ B. A zero-state system encodes
/// the static gain D.
class StateSpace {
 public:
  StateSpace() = default;
  /// Throws std::invalid_argument if the four matrices do not conform.
  StateSpace(Matrix A, Matrix B, Matrix C, Matrix D);

  /// Static gain with no states.
  static StateSpace Static(const Matrix& D);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }
  const Matrix& D() const { return D_; }

  Eigen::Index num_states() const { return A_.rows(); }
  Eigen::Index num_inputs() const { return B_.cols(); }
  Eigen::Index num_outputs() const { return C_.rows(); }

 private:
  Matrix A_{0, 0};
  Matrix B_{0, 0};
  Matrix C_{0, 0};
  Matrix D_{0, 0};
};

/// Generalized plant
///
///   ẋ = A x + B1 w + B2 u
///   z = C1 x        + D12 u
///   y = C2 x + D21 w
///
/// The P11 and P22 feedthrough terms are identically zero.
struct PartitionedPlant {
  Matrix A, B1, B2, C1, C2, D12, D21;

  Eigen::Index num_states() const { return A.rows(); }
  Eigen::Index num_exogenous() const { return B1.cols(); }
  Eigen::Index num_controls() const { return B2.cols(); }
  Eigen::Index num_regulated() const { return C1.rows(); }
  Eigen::Index num_measurements() const { return C2.rows(); }

  /// Throws std::invalid_argument on inconsistent dimensions.
  void CheckDimensions() const;

  /// The full plant with inputs (w, u) and outputs (z, y).
  StateSpace ToStateSpace() const;
};

/// D + C (jωI - A)⁻¹ B. Throws std::runtime_error("pole on evaluation
/// frequency") when jωI - A is numerically singular.
ComplexMatrix EvalFreq(const StateSpace& sys, double omega);
ComplexMatrix EvalAt(const StateSpace& sys, Complex s);

/// 1e-8 (1 + max|A_ij|).
double DefaultStabilityTolerance(const Matrix& A);

/// max Re λ(A) < -tol. A negative tol selects DefaultStabilityTolerance.
bool IsHurwitz(const Matrix& A, double tol = -1.0);

/// PBH tests. Each eigenvalue with Re λ >= -tol is checked for rank
/// [A - λI, B] = n, with rank decided by singular values above tol·σ_max.
/// A negative tol selects DefaultStabilityTolerance(A).
bool IsStabilizable(const Matrix& A, const Matrix& B, double tol = -1.0);
bool IsDetectable(const Matrix& C, const Matrix& A, double tol = -1.0);

/// P11 + P12 K (I - P22 K)⁻¹ P21 with state ordering (x_plant, x_K).
StateSpace CloseLoop(const PartitionedPlant& plant, const StateSpace& K);

/// (T A T⁻¹, T B, C T⁻¹, D). Throws std::invalid_argument if T is singular.
StateSpace SimilarityTransform(const StateSpace& sys, const Matrix& T);

/// Removes uncontrollable then unobservable states. Subspace ranks are
/// decided with the threshold tol·max(‖B‖ or ‖C‖ of sys, largest singular
/// value seen so far).
StateSpace MinimalRealization(const StateSpace& sys, double tol = 1e-8);

/// Realization of G~(s) = G(-s)ᵀ: (-Aᵀ, -Cᵀ, Bᵀ, Dᵀ).
StateSpace Adjoint(const StateSpace& sys);

/// Product lhs·rhs (rhs acts first); stacked state (x_lhs, x_rhs).
StateSpace Multiply(const StateSpace& lhs, const StateSpace& rhs);
StateSpace Add(const StateSpace& lhs, const StateSpace& rhs);
StateSpace Scale(const StateSpace& sys, double factor);
/// G⁻¹ for square G with invertible D.
StateSpace Inverse(const StateSpace& sys);
/// Rows [row0, row0+rows) and columns [col0, col0+cols) of the transfer.
StateSpace SubSystem(const StateSpace& sys, Eigen::Index row0,
                     Eigen::Index rows, Eigen::Index col0, Eigen::Index cols);

}  // namespace nested_hinf
