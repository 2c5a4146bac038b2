// Reference computations that share no code with the library's solvers.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nested_hinf/lti.h"
#include "nested_hinf/random.h"

namespace oracle {

using nested_hinf::ComplexMatrix;
using nested_hinf::Matrix;
using nested_hinf::StateSpace;

// Solves Aᵀ X + X A + Q = 0 through the n²×n² Kronecker system.
inline Matrix KroneckerLyapunov(const Matrix& A, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  Matrix K = Matrix::Zero(n * n, n * n);
  const Matrix I = Matrix::Identity(n, n);
  // vec(AᵀX) = (I ⊗ Aᵀ) vec X, vec(XA) = (Aᵀ ⊗ I) vec X.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
      K.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  }
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  const Eigen::VectorXd x = K.fullPivLu().solve(-q);
  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

// Kleinman iteration for Aᵀ X + X A + Q - X B Bᵀ X = 0 from a stabilizing
// gain F (A - B F Hurwitz).
inline Matrix KleinmanNewton(const Matrix& A, const Matrix& B, const Matrix& Q,
                             Matrix F, int iterations = 60) {
  Matrix X;
  for (int k = 0; k < iterations; ++k) {
    const Matrix Ak = A - B * F;
    X = KroneckerLyapunov(Ak, Q + F.transpose() * F);
    F = B.transpose() * X;
  }
  return X;
}

// Stabilizing ARE solution from complex eigenvectors of the assembled
// Hamiltonian [A R; -Q -Aᵀ] (no Schur ordering involved).
inline Matrix EigenvectorAre(const Matrix& A, const Matrix& R, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  Matrix H(2 * n, 2 * n);
  H << A, R, -Q, -A.transpose();
  Eigen::EigenSolver<Matrix> es(H);
  ComplexMatrix U(2 * n, n);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()(i).real() < 0 && col < n) {
      U.col(col++) = es.eigenvectors().col(i);
    }
  }
  const ComplexMatrix U1 = U.topRows(n), U2 = U.bottomRows(n);
  const ComplexMatrix X = U2 * U1.inverse();
  const Matrix Xr = X.real();
  return 0.5 * (Xr + Xr.transpose());
}

inline ComplexMatrix Freq(const StateSpace& s, double w) {
  const Eigen::Index n = s.num_states();
  const std::complex<double> jw(0.0, w);
  ComplexMatrix M = jw * ComplexMatrix::Identity(n, n) - s.A().cast<std::complex<double>>();
  return s.D().cast<std::complex<double>>() +
         s.C().cast<std::complex<double>>() *
             M.partialPivLu().solve(s.B().cast<std::complex<double>>());
}

// P11 + P12 K (I - P22 K)⁻¹ P21 evaluated from the parts' responses.
inline ComplexMatrix LftAt(const nested_hinf::PartitionedPlant& p,
                           const StateSpace& K, double w) {
  const Eigen::Index n = p.num_states();
  const auto part = [&](const Matrix& B, const Matrix& C, const Matrix& D) {
    return Freq(StateSpace(p.A, B, C, D), w);
  };
  const ComplexMatrix P11 = part(p.B1, p.C1, Matrix::Zero(p.C1.rows(), p.B1.cols()));
  const ComplexMatrix P12 = part(p.B2, p.C1, p.D12);
  const ComplexMatrix P21 = part(p.B1, p.C2, p.D21);
  const ComplexMatrix P22 = part(p.B2, p.C2, Matrix::Zero(p.C2.rows(), p.B2.cols()));
  const ComplexMatrix Kw = Freq(K, w);
  const Eigen::Index k = p.C2.rows();
  (void)n;
  const ComplexMatrix I = ComplexMatrix::Identity(k, k);
  return P11 + P12 * Kw * (I - P22 * Kw).partialPivLu().solve(P21);
}

inline double SigmaMax(const ComplexMatrix& G) {
  if (G.size() == 0) return 0.0;
  return Eigen::JacobiSVD<ComplexMatrix>(G).singularValues()(0);
}

// Dense log grid plus golden-section refinement around the best sample.
inline double GridHinf(const StateSpace& s, int points = 4000) {
  double best = SigmaMax(Freq(s, 0.0)), best_w = 0.0;
  for (int i = 0; i < points; ++i) {
    const double w = std::pow(10.0, -4.0 + 8.0 * i / (points - 1));
    const double v = SigmaMax(Freq(s, w));
    if (v > best) {
      best = v;
      best_w = w;
    }
  }
  if (best_w > 0) {
    double a = best_w / 1.01, b = best_w * 1.01;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
      const double c = b - g * (b - a), d = a + g * (b - a);
      if (SigmaMax(Freq(s, c)) > SigmaMax(Freq(s, d))) b = d; else a = c;
    }
    best = std::max(best, SigmaMax(Freq(s, 0.5 * (a + b))));
  }
  return best;
}

// Random stable system with state matrix S - (max Re λ(S) + margin) I.
inline StateSpace RandomStable(std::uint64_t seed, int n, int p, int q,
                               double margin = 0.5) {
  nested_hinf::Philox rng(seed);
  Matrix S = rng.NormalMatrix(n, n) / std::sqrt(static_cast<double>(n));
  const double shift = S.eigenvalues().real().maxCoeff() + margin;
  S -= shift * Matrix::Identity(n, n);
  return StateSpace(S, rng.NormalMatrix(n, q), rng.NormalMatrix(p, n),
                    Matrix::Zero(p, q));
}

}  // namespace oracle
