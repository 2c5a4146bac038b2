#include "nested_hinf/lti.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nested_hinf {

StateSpace::StateSpace(Matrix A, Matrix B, Matrix C, Matrix D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
  const Eigen::Index n = A_.rows();
  if (A_.cols() != n || B_.rows() != n || C_.cols() != n ||
      D_.rows() != C_.rows() || D_.cols() != B_.cols()) {
    throw std::invalid_argument(
        "StateSpace: inconsistent dimensions A " + std::to_string(A_.rows()) +
        "x" + std::to_string(A_.cols()) + ", B " + std::to_string(B_.rows()) +
        "x" + std::to_string(B_.cols()) + ", C " + std::to_string(C_.rows()) +
        "x" + std::to_string(C_.cols()) + ", D " + std::to_string(D_.rows()) +
        "x" + std::to_string(D_.cols()));
  }
}

StateSpace StateSpace::Static(const Matrix& D) {
  return StateSpace(Matrix(0, 0), Matrix(0, D.cols()), Matrix(D.rows(), 0), D);
}

void PartitionedPlant::CheckDimensions() const {
  const Eigen::Index n = A.rows();
  const bool ok = A.cols() == n && B1.rows() == n && B2.rows() == n &&
                  C1.cols() == n && C2.cols() == n &&
                  D12.rows() == C1.rows() && D12.cols() == B2.cols() &&
                  D21.rows() == C2.rows() && D21.cols() == B1.cols();
  if (!ok) {
    throw std::invalid_argument("PartitionedPlant: inconsistent dimensions");
  }
}

StateSpace PartitionedPlant::ToStateSpace() const {
  CheckDimensions();
  const Eigen::Index nw = num_exogenous(), nu = num_controls();
  const Eigen::Index nz = num_regulated(), ny = num_measurements();
  Matrix B(num_states(), nw + nu);
  B << B1, B2;
  Matrix C(nz + ny, num_states());
  C << C1, C2;
  Matrix D = Matrix::Zero(nz + ny, nw + nu);
  D.topRightCorner(nz, nu) = D12;
  D.bottomLeftCorner(ny, nw) = D21;
  return StateSpace(A, B, C, D);
}

ComplexMatrix EvalAt(const StateSpace& sys, Complex s) {
  const Eigen::Index n = sys.num_states();
  ComplexMatrix out = sys.D().cast<Complex>();
  if (n == 0) return out;
  ComplexMatrix M = -sys.A().cast<Complex>();
  M.diagonal().array() += s;
  Eigen::PartialPivLU<ComplexMatrix> lu(M);
  if (!(lu.rcond() > 1e-13)) {
    throw std::runtime_error("pole on evaluation frequency");
  }
  out += sys.C().cast<Complex>() * lu.solve(sys.B().cast<Complex>());
  return out;
}

ComplexMatrix EvalFreq(const StateSpace& sys, double omega) {
  return EvalAt(sys, Complex(0.0, omega));
}

double DefaultStabilityTolerance(const Matrix& A) {
  return 1e-8 * (1.0 + MaxAbs(A));
}

bool IsHurwitz(const Matrix& A, double tol) {
  if (A.rows() != A.cols()) {
    throw std::invalid_argument("IsHurwitz: matrix must be square");
  }
  if (A.size() == 0) return true;
  if (tol < 0) tol = DefaultStabilityTolerance(A);
  return MaxRealPart(A) < -tol;
}

bool IsStabilizable(const Matrix& A, const Matrix& B, double tol) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n) {
    throw std::invalid_argument("IsStabilizable: dimension mismatch");
  }
  if (n == 0) return true;
  if (tol < 0) tol = DefaultStabilityTolerance(A);
  const ComplexVector eig = A.eigenvalues();
  ComplexMatrix pencil(n, n + B.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (eig(i).real() < -tol) continue;
    pencil.leftCols(n) = A.cast<Complex>();
    pencil.leftCols(n).diagonal().array() -= eig(i);
    pencil.rightCols(B.cols()) = B.cast<Complex>();
    Eigen::JacobiSVD<ComplexMatrix> svd(pencil);
    const Vector& sv = svd.singularValues();
    if (sv.size() < n || sv(0) == 0.0) return false;
    const Eigen::Index rank = (sv.array() > tol * sv(0)).count();
    if (rank < n) return false;
  }
  return true;
}

bool IsDetectable(const Matrix& C, const Matrix& A, double tol) {
  return IsStabilizable(A.transpose(), C.transpose(), tol);
}

StateSpace CloseLoop(const PartitionedPlant& plant, const StateSpace& K) {
  plant.CheckDimensions();
  if (K.num_inputs() != plant.num_measurements() ||
      K.num_outputs() != plant.num_controls()) {
    throw std::invalid_argument("CloseLoop: controller dimension mismatch");
  }
  const Eigen::Index n = plant.num_states();
  const Eigen::Index nk = K.num_states();
  const Matrix& DK = K.D();
  Matrix A(n + nk, n + nk);
  A << plant.A + plant.B2 * DK * plant.C2, plant.B2 * K.C(),
      K.B() * plant.C2, K.A();
  Matrix B(n + nk, plant.num_exogenous());
  B << plant.B1 + plant.B2 * DK * plant.D21, K.B() * plant.D21;
  Matrix C(plant.num_regulated(), n + nk);
  C << plant.C1 + plant.D12 * DK * plant.C2, plant.D12 * K.C();
  Matrix D = plant.D12 * DK * plant.D21;
  return StateSpace(A, B, C, D);
}

StateSpace SimilarityTransform(const StateSpace& sys, const Matrix& T) {
  const Eigen::Index n = sys.num_states();
  if (T.rows() != n || T.cols() != n) {
    throw std::invalid_argument("SimilarityTransform: T has wrong size");
  }
  Eigen::FullPivLU<Matrix> lu(T);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    throw std::invalid_argument("SimilarityTransform: T is singular");
  }
  const Matrix Tinv = lu.inverse();
  return StateSpace(T * sys.A() * Tinv, T * sys.B(), sys.C() * Tinv, sys.D());
}

namespace {

// Orthonormal basis for the Krylov space spanned by B, AB, A²B, ... built
// block by block (staircase form).
// `scale` floors the rank reference so that a B made of rounding noise is
// recognized as zero.
Matrix KrylovBasis(const Matrix& A, const Matrix& B, double tol, double scale) {
  const Eigen::Index n = A.rows();
  Matrix V(n, 0);
  if (n == 0 || B.cols() == 0) return V;
  double reference = scale;
  Matrix block = B;
  while (V.cols() < n) {
    // Project out the current basis twice for orthogonality.
    for (int pass = 0; pass < 2 && V.cols() > 0; ++pass) {
      block -= V * (V.transpose() * block);
    }
    if (block.cols() == 0) break;
    Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0) break;
    reference = std::max(reference, sv(0));
    if (reference == 0.0) break;
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > tol * reference) ++rank;
    rank = std::min<Eigen::Index>(rank, n - V.cols());
    if (rank == 0) break;
    Matrix next(n, V.cols() + rank);
    next << V, svd.matrixU().leftCols(rank);
    V = std::move(next);
    block = A * V.rightCols(rank);
  }
  return V;
}

}  // namespace

StateSpace MinimalRealization(const StateSpace& sys, double tol) {
  const double scale_b = sys.B().size() ? MaxSingularValue(sys.B()) : 0.0;
  const double scale_c = sys.C().size() ? MaxSingularValue(sys.C()) : 0.0;
  const Matrix Vc = KrylovBasis(sys.A(), sys.B(), tol, scale_b);
  const Matrix Ac = Vc.transpose() * sys.A() * Vc;
  const Matrix Bc = Vc.transpose() * sys.B();
  const Matrix Cc = sys.C() * Vc;
  const Matrix Vo = KrylovBasis(Ac.transpose(), Cc.transpose(), tol, scale_c);
  return StateSpace(Vo.transpose() * Ac * Vo, Vo.transpose() * Bc, Cc * Vo,
                    sys.D());
}

StateSpace Adjoint(const StateSpace& sys) {
  return StateSpace(-sys.A().transpose(), -sys.C().transpose(),
                    sys.B().transpose(), sys.D().transpose());
}

StateSpace Multiply(const StateSpace& lhs, const StateSpace& rhs) {
  if (lhs.num_inputs() != rhs.num_outputs()) {
    throw std::invalid_argument("Multiply: inner dimension mismatch");
  }
  const Eigen::Index n1 = lhs.num_states(), n2 = rhs.num_states();
  Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = lhs.A();
  A.topRightCorner(n1, n2) = lhs.B() * rhs.C();
  A.bottomRightCorner(n2, n2) = rhs.A();
  Matrix B(n1 + n2, rhs.num_inputs());
  B << lhs.B() * rhs.D(), rhs.B();
  Matrix C(lhs.num_outputs(), n1 + n2);
  C << lhs.C(), lhs.D() * rhs.C();
  return StateSpace(A, B, C, lhs.D() * rhs.D());
}

StateSpace Add(const StateSpace& lhs, const StateSpace& rhs) {
  if (lhs.num_inputs() != rhs.num_inputs() ||
      lhs.num_outputs() != rhs.num_outputs()) {
    throw std::invalid_argument("Add: dimension mismatch");
  }
  Matrix B(lhs.num_states() + rhs.num_states(), lhs.num_inputs());
  B << lhs.B(), rhs.B();
  Matrix C(lhs.num_outputs(), lhs.num_states() + rhs.num_states());
  C << lhs.C(), rhs.C();
  return StateSpace(BlockDiagonal({lhs.A(), rhs.A()}), B, C,
                    lhs.D() + rhs.D());
}

StateSpace Scale(const StateSpace& sys, double factor) {
  return StateSpace(sys.A(), sys.B(), factor * sys.C(), factor * sys.D());
}

StateSpace Inverse(const StateSpace& sys) {
  if (sys.num_inputs() != sys.num_outputs()) {
    throw std::invalid_argument("Inverse: system is not square");
  }
  Eigen::FullPivLU<Matrix> lu(sys.D());
  if (!lu.isInvertible()) {
    throw std::invalid_argument("Inverse: feedthrough D is singular");
  }
  const Matrix Dinv = lu.inverse();
  return StateSpace(sys.A() - sys.B() * Dinv * sys.C(), sys.B() * Dinv,
                    -Dinv * sys.C(), Dinv);
}

StateSpace SubSystem(const StateSpace& sys, Eigen::Index row0,
                     Eigen::Index rows, Eigen::Index col0, Eigen::Index cols) {
  return StateSpace(sys.A(), sys.B().middleCols(col0, cols),
                    sys.C().middleRows(row0, rows),
                    sys.D().block(row0, col0, rows, cols));
}

}  // namespace nested_hinf
