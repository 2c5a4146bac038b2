#include "nested_hinf/riccati.h"

#include <cmath>
#include <sstream>

namespace nested_hinf {

Hamiltonian::Hamiltonian(Matrix A, Matrix R, Matrix Q)
    : A_(std::move(A)), R_(std::move(R)), Q_(std::move(Q)) {
  const Eigen::Index n = A_.rows();
  if (A_.cols() != n || R_.rows() != n || R_.cols() != n || Q_.rows() != n ||
      Q_.cols() != n) {
    throw std::invalid_argument("Hamiltonian: blocks must be n x n");
  }
  const auto symmetric = [](const Matrix& M) {
    return MaxAbs(M - M.transpose()) <= 1e-9 * (1.0 + MaxAbs(M));
  };
  if (!symmetric(R_) || !symmetric(Q_)) {
    throw std::invalid_argument("Hamiltonian: R and Q must be symmetric");
  }
  R_ = Symmetrize(R_);
  Q_ = Symmetrize(Q_);
}

Matrix Hamiltonian::Assemble() const {
  const Eigen::Index n = size();
  Matrix H(2 * n, 2 * n);
  H << A_, R_, -Q_, -A_.transpose();
  return H;
}

double AreResidual(const Hamiltonian& H, const Matrix& X) {
  return (H.A().transpose() * X + X * H.A() + H.Q() + X * H.R() * X).norm();
}

namespace {

struct StableSubspace {
  Matrix U1, U2;
  Eigen::PartialPivLU<Matrix> lu;  // of U1ᵀ
  double stable_margin = 0.0;      // -max Re of the selected eigenvalues
  std::string failure;
};

StableSubspace ComputeStableSubspace(const Hamiltonian& H,
                                     const RiccatiOptions& options) {
  const Eigen::Index n = H.size();
  const Matrix M = H.Assemble();
  const double scale = 1.0 + M.norm();
  const OrderedSchur schur = OrderedRealSchur(M, 0.0);
  StableSubspace out;
  const double min_real = schur.eigenvalues.real().cwiseAbs().minCoeff();
  if (min_real <= options.axis_tol * scale || schur.num_selected != n) {
    std::ostringstream os;
    os << "imaginary-axis eigenvalue (min |Re λ| = " << min_real
       << ", threshold " << options.axis_tol * scale << ")";
    out.failure = os.str();
    return out;
  }
  out.U1 = schur.U.topLeftCorner(n, n);
  out.U2 = schur.U.bottomLeftCorner(n, n);
  out.stable_margin = -schur.eigenvalues.head(n).real().maxCoeff();
  // [U1; U2] has orthonormal columns; the LU's 1-norm condition estimate
  // stands in for cond(U1).
  out.lu.compute(out.U1.transpose());
  const double rcond = out.lu.rcond();
  const double cond = rcond > 0 ? 1.0 / rcond : INFINITY;
  if (!(cond < options.complementarity_cap)) {
    std::ostringstream os;
    os << "complementarity fails (cond(U1) = " << cond << ")";
    out.failure = os.str();
  }
  return out;
}

}  // namespace

DomainCheck InDomRic(const Hamiltonian& H, const RiccatiOptions& options) {
  if (H.size() == 0) return {true, ""};
  StableSubspace sub = ComputeStableSubspace(H, options);
  return {sub.failure.empty(), sub.failure};
}

RiccatiOutcome TrySolveRiccati(const Hamiltonian& H,
                               const RiccatiOptions& options) {
  const Eigen::Index n = H.size();
  RiccatiOutcome out;
  if (n == 0) {
    out.solution = RiccatiSolution{Matrix(0, 0), 0.0, INFINITY};
    return out;
  }
  StableSubspace sub = ComputeStableSubspace(H, options);
  if (!sub.failure.empty()) {
    out.failure = "not in dom(Ric): " + sub.failure;
    return out;
  }
  // X U1 = U2.
  Matrix X = sub.lu.solve(sub.U2.transpose()).transpose();
  X = Symmetrize(X);

  const double target =
      1e-8 * (1.0 + H.Q().norm() + X.squaredNorm() * H.R().norm());
  double residual = AreResidual(H, X);
  double margin = sub.stable_margin;
  if (residual > target) {
    const Matrix closed = H.A() + H.R() * X;
    // Newton correction: (A+RX)ᵀ Δ + Δ (A+RX) + Res = 0.
    const Matrix res = H.A().transpose() * X + X * H.A() + H.Q() +
                       X * H.R() * X;
    try {
      X = Symmetrize(X + SolveLyapunov(closed, res));
    } catch (const std::runtime_error&) {
    }
    residual = AreResidual(H, X);
    margin = -MaxRealPart(H.A() + H.R() * X);
  }
  if (!(residual <= target)) {
    std::ostringstream os;
    os << "ill-conditioned ARE: residual " << residual << " exceeds "
       << target;
    out.failure = os.str();
    return out;
  }
  if (!(margin > 0)) {
    out.failure = "ill-conditioned ARE: solution is not stabilizing";
    return out;
  }
  out.solution = RiccatiSolution{std::move(X), residual, margin};
  return out;
}

RiccatiSolution Ric(const Hamiltonian& H, const RiccatiOptions& options) {
  RiccatiOutcome outcome = TrySolveRiccati(H, options);
  if (!outcome) throw RiccatiError(outcome.failure);
  return std::move(*outcome.solution);
}

}  // namespace nested_hinf
