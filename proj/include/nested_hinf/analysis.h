#pragma once

#include <stdexcept>

#include "nested_hinf/lti.h"

namespace nested_hinf {

enum class EntropyMethod { kRiccati, kQuadrature };

struct EntropyResult {
  double value = 0.0;
  EntropyMethod method = EntropyMethod::kRiccati;
  double gamma = 0.0;
};

/// Thrown when ‖G‖∞ >= γ, where the entropy integral diverges.
class InfiniteEntropyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// H∞ norm of a stable system. Bisection on the level γ using imaginary-axis
/// eigenvalues of the bounded-real Hamiltonian, with each crossing level
/// raising the lower bound to the largest σ̄ found between crossings. The true
/// norm lies within a factor (1 ± rel_tol) of the result.
/// Throws std::domain_error("unstable system") if A is not Hurwitz.
double HinfNorm(const StateSpace& sys, double rel_tol = 1e-8);

/// √trace(Bᵀ L_o B). Requires A Hurwitz and D = 0 (std::domain_error).
double H2Norm(const StateSpace& sys);

/// trace(Bᵀ X B) with X the stabilizing solution of
/// Aᵀ X + X A + CᵀC + γ⁻² X B Bᵀ X = 0.
EntropyResult Entropy(const StateSpace& sys, double gamma);

/// -Σ log(1 - σᵢ(G(jω))²/γ²); the entropy is γ²/(2π) times its integral.
double EntropyIntegrand(const StateSpace& sys, double gamma, double omega);

struct QuadratureOptions {
  double abs_tol = 1e-10;
  /// Integrate over (-∞, ∞) directly instead of doubling the half line.
  bool full_line = false;
};

/// Direct adaptive-Simpson evaluation of the entropy integral. The
/// frequency axis is compactified by ω = w₀ tan θ, split at resonance peaks,
/// and truncated where the ‖C‖‖B‖/(|ω| - ‖A‖) tail bound is below abs_tol/2.
double EntropyQuadrature(const StateSpace& sys, double gamma,
                         const QuadratureOptions& options = {});

/// A Hurwitz and ‖G‖∞ < γ (1 - tol).
bool BoundedRealCheck(const StateSpace& sys, double gamma, double tol = 1e-9);

}  // namespace nested_hinf
