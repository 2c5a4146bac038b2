#include "nested_hinf/linalg.h"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

extern "C" {
void dgees_(const char* jobvs, const char* sort,
            int (*select)(const double*, const double*), const int* n,
            double* a, const int* lda, int* sdim, double* wr, double* wi,
            double* vs, const int* ldvs, double* work, const int* lwork,
            int* bwork, int* info);
}

namespace nested_hinf {
namespace {

// dgees only accepts a plain function pointer; the shift is passed through a
// thread-local so concurrent calls on different threads stay independent.
thread_local double select_shift = 0.0;

int SelectLeftOfShift(const double* wr, const double* /*wi*/) {
  return *wr < select_shift ? 1 : 0;
}

}  // namespace

OrderedSchur OrderedRealSchur(const Matrix& M, double shift) {
  if (M.rows() != M.cols()) {
    throw std::invalid_argument("OrderedRealSchur: matrix must be square");
  }
  const int n = static_cast<int>(M.rows());
  OrderedSchur out;
  if (n == 0) {
    out.U = Matrix(0, 0);
    out.T = Matrix(0, 0);
    out.eigenvalues = ComplexVector(0);
    return out;
  }
  Matrix a = M;
  Matrix vs(n, n);
  std::vector<double> wr(n), wi(n);
  std::vector<int> bwork(n);
  int sdim = 0;
  int info = 0;
  int lwork = -1;
  double work_query = 0.0;
  select_shift = shift;
  const char jobvs = 'V';
  const char sort = 'S';
  dgees_(&jobvs, &sort, &SelectLeftOfShift, &n, a.data(), &n, &sdim, wr.data(),
         wi.data(), vs.data(), &n, &work_query, &lwork, bwork.data(), &info);
  lwork = std::max(1, static_cast<int>(work_query));
  std::vector<double> work(lwork);
  dgees_(&jobvs, &sort, &SelectLeftOfShift, &n, a.data(), &n, &sdim, wr.data(),
         wi.data(), vs.data(), &n, work.data(), &lwork, bwork.data(), &info);
  // info = n+1 (reordering refused) or n+2 (roundoff moved an eigenvalue
  // across the shift) still leave a valid Schur form; only the leading count
  // needs to be recomputed.
  if (info != 0 && info != n + 1 && info != n + 2) {
    throw std::runtime_error("OrderedRealSchur: dgees failed with info=" +
                             std::to_string(info));
  }
  out.U = std::move(vs);
  out.T = std::move(a);
  out.eigenvalues.resize(n);
  for (int i = 0; i < n; ++i) out.eigenvalues(i) = Complex(wr[i], wi[i]);
  out.num_selected = sdim;
  if (info != 0) {
    int leading = 0;
    while (leading < n && wr[leading] < shift) ++leading;
    out.num_selected = leading;
  }
  return out;
}

Matrix SolveSylvester(const Matrix& A, const Matrix& B, const Matrix& C) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || C.rows() != A.rows() ||
      C.cols() != B.rows()) {
    throw std::invalid_argument("SolveSylvester: dimension mismatch");
  }
  const Eigen::Index na = A.rows();
  const Eigen::Index nb = B.rows();
  if (na == 0 || nb == 0) return Matrix::Zero(na, nb);

  Eigen::ComplexSchur<ComplexMatrix> schur_a(A.cast<Complex>());
  Eigen::ComplexSchur<ComplexMatrix> schur_b(B.cast<Complex>());
  const ComplexMatrix& Ua = schur_a.matrixU();
  const ComplexMatrix& Ta = schur_a.matrixT();
  const ComplexMatrix& Ub = schur_b.matrixU();
  const ComplexMatrix& Tb = schur_b.matrixT();

  const ComplexMatrix F = Ua.adjoint() * C.cast<Complex>() * Ub;
  ComplexMatrix Y(na, nb);
  const double scale = 1.0 + Ta.norm() + Tb.norm();
  for (Eigen::Index j = 0; j < nb; ++j) {
    ComplexVector rhs = F.col(j);
    for (Eigen::Index i = 0; i < j; ++i) rhs -= Tb(i, j) * Y.col(i);
    ComplexMatrix lhs = Ta;
    lhs.diagonal().array() += Tb(j, j);
    const double min_diag = lhs.diagonal().cwiseAbs().minCoeff();
    if (min_diag <= 1e3 * std::numeric_limits<double>::epsilon() * scale) {
      throw std::runtime_error(
          "SolveSylvester: spectra of A and -B intersect (singular operator)");
    }
    Y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  return (Ua * Y * Ub.adjoint()).real();
}

Matrix SolveLyapunov(const Matrix& A, const Matrix& Q) {
  return Symmetrize(SolveSylvester(A.transpose(), A, -Q));
}

double SpectralRadius(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

double MaxRealPart(const Matrix& M) {
  if (M.size() == 0) return -std::numeric_limits<double>::infinity();
  return M.eigenvalues().real().maxCoeff();
}

double MinSymmetricEigenvalue(const Matrix& S) {
  if (S.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(Symmetrize(S),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double MaxAbs(const Matrix& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

double MaxSingularValue(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

double MaxSingularValue(const ComplexMatrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(M);
  return svd.singularValues()(0);
}

Matrix BlockDiagonal(std::initializer_list<Matrix> blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace nested_hinf
