#pragma once

#include <complex>
#include <initializer_list>

#include <Eigen/Dense>

namespace nested_hinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Real Schur form M = U T Uᵀ with the eigenvalues satisfying Re λ < shift
/// ordered into the leading block of T.
struct OrderedSchur {
  Matrix U;
  Matrix T;
  ComplexVector eigenvalues;  // in the order they appear on T's diagonal
  int num_selected = 0;
};

/// Throws std::runtime_error if LAPACK fails to converge or to reorder.
OrderedSchur OrderedRealSchur(const Matrix& M, double shift = 0.0);

/// Solves A X + X B = C by the complex Bartels-Stewart method.
Matrix SolveSylvester(const Matrix& A, const Matrix& B, const Matrix& C);

/// Solves Aᵀ X + X A + Q = 0; the result is symmetrized.
Matrix SolveLyapunov(const Matrix& A, const Matrix& Q);

double SpectralRadius(const Matrix& M);
double MaxRealPart(const Matrix& M);

/// Smallest eigenvalue of the symmetric part of S; +inf for an empty matrix.
double MinSymmetricEigenvalue(const Matrix& S);

inline Matrix Symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

/// Largest absolute entry; 0 for empty matrices.
double MaxAbs(const Matrix& M);

double MaxSingularValue(const Matrix& M);
double MaxSingularValue(const ComplexMatrix& M);

Matrix BlockDiagonal(std::initializer_list<Matrix> blocks);

}  // namespace nested_hinf
