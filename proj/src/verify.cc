#include "nested_hinf/verify.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nested_hinf/analysis.h"

namespace nested_hinf {
namespace {

Matrix Identity(Eigen::Index n) { return Matrix::Identity(n, n); }

Matrix Inverted(const Matrix& M, const char* name) {
  const Eigen::PartialPivLU<Matrix> lu(M);
  if (!(lu.rcond() > 1e-14)) {
    throw std::domain_error(std::string("coordinate map: ") + name +
                            " is singular");
  }
  return lu.inverse();
}

// Largest Frobenius norm over the off-diagonal n×n blocks of a 3n×3n matrix.
double OffDiagonal(const Matrix& P, Eigen::Index n) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) worst = std::max(worst, P.block(i * n, j * n, n, n).norm());
    }
  }
  return worst;
}

Matrix DiagBlock(const Matrix& P, Eigen::Index n, int i) {
  return P.block(i * n, i * n, n, n);
}

bool BlockDiagonalGain(const Matrix& G, const BlockSplit& rows,
                       const BlockSplit& cols) {
  return MaxAbs(G.topRightCorner(rows.first, cols.second)) == 0.0 &&
         MaxAbs(G.bottomLeftCorner(rows.second, cols.first)) == 0.0;
}

double StrictH2(const StateSpace& sys) {
  if (sys.num_states() == 0) return 0.0;
  return H2Norm(StateSpace(sys.A(), sys.B(), sys.C(),
                           Matrix::Zero(sys.num_outputs(), sys.num_inputs())));
}

}  // namespace

const char* ToString(Coordinates which) {
  switch (which) {
    case Coordinates::kM: return "m";
    case Coordinates::kX: return "x";
    case Coordinates::kY: return "y";
  }
  return "?";
}

CoordinateMap CoordinateTransform(const StructuredSolution& sol,
                                  Coordinates which) {
  const Eigen::Index n = sol.Xhat.rows();
  const Matrix I = Identity(n);
  const Matrix O = Matrix::Zero(n, n);
  CoordinateMap map;
  map.which = which;
  map.T.resize(3 * n, 3 * n);
  switch (which) {
    case Coordinates::kM:
      map.T << O, I, O,
               I, -I, O,
               I, O, -I;
      break;
    case Coordinates::kX: {
      const Matrix Zinv = Inverted(sol.central.Z, "Z");
      map.T << I, O, O,
               I, -I, O,
               I, sol.ZK * Zinv - I, -sol.ZK;
      break;
    }
    case Coordinates::kY: {
      const Matrix ZLinv = Inverted(sol.ZL, "Z_L");
      map.T << O, ZLinv, O,
               O, -ZLinv, I,
               I, O, -I;
      break;
    }
  }
  return map;
}

StateSpace ClosedLoopInCoordinates(const StructuredPlant& sp,
                                   const StateSpace& kme,
                                   const CoordinateMap& map) {
  return SimilarityTransform(CloseLoop(sp.plant, kme), map.T);
}

Lemma3Report Lemma3Verify(const StructuredPlant& sp,
                          const StructuredSolution& sol, double tol) {
  Lemma3Report report;
  const Eigen::Index n = sp.plant.num_states();
  const double g2 = 1.0 / (sol.gamma * sol.gamma);
  report.scale = 1.0 + sol.Xhat.norm() + sol.Yhat.norm();
  const double bound = tol * report.scale;
  const StateSpace kme = BuildKme(sp, sol);
  const CentralSolution& c = sol.central;

  const StateSpace clx =
      ClosedLoopInCoordinates(sp, kme, CoordinateTransform(sol, Coordinates::kX));
  const Hamiltonian hx(clx.A(), Symmetrize(g2 * clx.B() * clx.B().transpose()),
                       Symmetrize(clx.C().transpose() * clx.C()));
  const RiccatiOutcome ox = TrySolveRiccati(hx);
  report.hx_in_domain = static_cast<bool>(ox);
  if (!ox) report.failures.push_back("H_X not in dom(Ric): " + ox.failure);

  const StateSpace cly =
      ClosedLoopInCoordinates(sp, kme, CoordinateTransform(sol, Coordinates::kY));
  const Hamiltonian hy(cly.A().transpose(),
                       Symmetrize(g2 * cly.C().transpose() * cly.C()),
                       Symmetrize(cly.B() * cly.B().transpose()));
  const RiccatiOutcome oy = TrySolveRiccati(hy);
  report.hy_in_domain = static_cast<bool>(oy);
  if (!oy) report.failures.push_back("H_Y not in dom(Ric): " + oy.failure);

  const auto check = [&](double value, const char* name) {
    if (!(value <= bound)) {
      std::ostringstream os;
      os << name << " = " << value << " exceeds " << bound;
      report.failures.push_back(os.str());
    }
  };
  if (ox) {
    const Matrix& P = ox.solution->X;
    report.offdiag_x = OffDiagonal(P, n);
    report.err_x = (DiagBlock(P, n, 0) - c.X).norm();
    report.err_xhat = (DiagBlock(P, n, 1) - (sol.Xhat - c.X)).norm();
    report.min_eig_phi = MinSymmetricEigenvalue(DiagBlock(P, n, 2));
    check(report.offdiag_x, "off-diagonal of ric(H_X)");
    check(report.err_x, "X block error");
    check(report.err_xhat, "Xhat - X block error");
    check(-report.min_eig_phi, "-lambda_min(Phi)");
  }
  if (oy) {
    const Matrix& P = oy.solution->X;
    report.offdiag_y = OffDiagonal(P, n);
    report.err_yhat = (DiagBlock(P, n, 1) - (sol.Yhat - c.Y)).norm();
    report.err_y = (DiagBlock(P, n, 2) - c.Y).norm();
    report.min_eig_psi = MinSymmetricEigenvalue(DiagBlock(P, n, 0));
    check(report.offdiag_y, "off-diagonal of ric(H_Y)");
    check(report.err_yhat, "Yhat - Y block error");
    check(report.err_y, "Y block error");
    check(-report.min_eig_psi, "-lambda_min(Psi)");
  }
  report.passed = report.failures.empty();
  return report;
}

BlockGains DefaultBlockGains(const StructuredPlant& sp) {
  const PartitionedPlant& p = sp.plant;
  const BlockStructure& s = sp.structure;
  BlockGains gains;
  gains.Kd = Matrix::Zero(p.num_controls(), p.num_states());
  gains.Ld = Matrix::Zero(p.num_states(), p.num_measurements());
  const BlockSplit& n = s.n;
  const BlockSplit& m = s.m;
  const BlockSplit& k = s.k;
  for (int i = 0; i < 2; ++i) {
    const Eigen::Index r0 = i == 0 ? 0 : n.first;
    const Eigen::Index ni = i == 0 ? n.first : n.second;
    const Eigen::Index u0 = i == 0 ? 0 : m.first;
    const Eigen::Index mi = i == 0 ? m.first : m.second;
    const Eigen::Index y0 = i == 0 ? 0 : k.first;
    const Eigen::Index ki = i == 0 ? k.first : k.second;
    const Matrix Aii = p.A.block(r0, r0, ni, ni);
    const Matrix Bii = p.B2.block(r0, u0, ni, mi);
    const Matrix Cii = p.C2.block(y0, r0, ki, ni);
    const Matrix P = Ric(Hamiltonian(Aii, Symmetrize(-Bii * Bii.transpose()),
                                     Identity(ni)))
                         .X;
    const Matrix Q =
        Ric(Hamiltonian(Aii.transpose(), Symmetrize(-Cii.transpose() * Cii),
                        Identity(ni)))
            .X;
    gains.Kd.block(u0, r0, mi, ni) = -Bii.transpose() * P;
    gains.Ld.block(r0, y0, ni, ki) = -Q * Cii.transpose();
  }
  return gains;
}

YoulaTriple YoulaParams(const StructuredPlant& sp, const BlockGains& gains) {
  const PartitionedPlant& p = sp.plant;
  const BlockStructure& s = sp.structure;
  const Eigen::Index n = p.num_states();
  if (gains.Kd.rows() != p.num_controls() || gains.Kd.cols() != n ||
      gains.Ld.rows() != n || gains.Ld.cols() != p.num_measurements()) {
    throw std::invalid_argument("Youla gains: dimension mismatch");
  }
  if (!BlockDiagonalGain(gains.Kd, s.m, s.n) ||
      !BlockDiagonalGain(gains.Ld, s.n, s.k)) {
    throw std::invalid_argument("Youla gains must be block diagonal");
  }
  const Matrix AK = p.A + p.B2 * gains.Kd;
  const Matrix AL = p.A + gains.Ld * p.C2;
  if (!IsHurwitz(AK)) throw std::invalid_argument("A + B2 Kd is not Hurwitz");
  if (!IsHurwitz(AL)) throw std::invalid_argument("A + Ld C2 is not Hurwitz");
  const Matrix CK = p.C1 + p.D12 * gains.Kd;
  const Matrix BL = p.B1 + gains.Ld * p.D21;

  YoulaTriple t;
  t.gains = gains;
  const Matrix BKd = p.B2 * gains.Kd;
  Matrix A1 = Matrix::Zero(2 * n, 2 * n);
  A1.topLeftCorner(n, n) = AK;
  A1.topRightCorner(n, n) = -BKd;
  A1.bottomRightCorner(n, n) = AL;
  Matrix B1(2 * n, p.num_exogenous());
  B1 << p.B1, BL;
  Matrix C1(p.num_regulated(), 2 * n);
  C1 << CK, -p.D12 * gains.Kd;
  t.T1 = StateSpace(A1, B1, C1,
                    Matrix::Zero(p.num_regulated(), p.num_exogenous()));
  t.T2 = StateSpace(AK, p.B2, CK, p.D12);
  t.T3 = StateSpace(AL, BL, p.C2, p.D21);
  return t;
}

YoulaTriple YoulaParams(const StructuredPlant& sp) {
  return YoulaParams(sp, DefaultBlockGains(sp));
}

StateSpace ObserverController(const StructuredPlant& sp,
                              const BlockGains& gains) {
  const PartitionedPlant& p = sp.plant;
  return StateSpace(p.A + p.B2 * gains.Kd + gains.Ld * p.C2, -gains.Ld,
                    gains.Kd,
                    Matrix::Zero(p.num_controls(), p.num_measurements()));
}

StateSpace ControllerFromYoula(const StructuredPlant& sp,
                               const BlockGains& gains, const StateSpace& Q) {
  const PartitionedPlant& p = sp.plant;
  const Eigen::Index n = p.num_states();
  const Eigen::Index nq = Q.num_states();
  if (Q.num_outputs() != p.num_controls() ||
      Q.num_inputs() != p.num_measurements()) {
    throw std::invalid_argument("Youla parameter: dimension mismatch");
  }
  const Matrix BD = p.B2 * Q.D() - gains.Ld;
  Matrix A(n + nq, n + nq);
  A << p.A + p.B2 * gains.Kd - BD * p.C2, p.B2 * Q.C(),
       -Q.B() * p.C2, Q.A();
  Matrix B(n + nq, p.num_measurements());
  B << BD, Q.B();
  Matrix C(p.num_controls(), n + nq);
  C << gains.Kd - Q.D() * p.C2, Q.C();
  return StateSpace(A, B, C, Q.D());
}

StateSpace PerturbClosedLoop(const YoulaTriple& triple,
                             const StateSpace& T_cl, const StateSpace& dQ,
                             double epsilon) {
  return Add(T_cl,
             Scale(Multiply(triple.T2, Multiply(dQ, triple.T3)), epsilon));
}

std::pair<StateSpace, StateSpace> StableAntistableSplit(const StateSpace& sys,
                                                        double axis_tol) {
  const Eigen::Index n = sys.num_states();
  const Eigen::Index p = sys.num_outputs();
  const Eigen::Index q = sys.num_inputs();
  if (n == 0) {
    return {sys, StateSpace(Matrix(0, 0), Matrix(0, q), Matrix(p, 0),
                            Matrix::Zero(p, q))};
  }
  const double limit = axis_tol * (1.0 + MaxSingularValue(sys.A()));
  const OrderedSchur schur = OrderedRealSchur(sys.A(), 0.0);
  for (Eigen::Index i = 0; i < schur.eigenvalues.size(); ++i) {
    if (std::abs(schur.eigenvalues(i).real()) <= limit) {
      throw std::domain_error("stable/antistable split: imaginary-axis pole");
    }
  }
  const Eigen::Index ns = schur.num_selected;
  const Eigen::Index nu = n - ns;
  const Matrix& T = schur.T;
  const Matrix Bt = schur.U.transpose() * sys.B();
  const Matrix Ct = sys.C() * schur.U;
  Matrix S = Matrix::Zero(ns, nu);
  if (ns > 0 && nu > 0) {
    S = SolveSylvester(T.topLeftCorner(ns, ns), -T.bottomRightCorner(nu, nu),
                       -T.topRightCorner(ns, nu));
  }
  const Matrix B1 = Bt.topRows(ns) - S * Bt.bottomRows(nu);
  const Matrix C2 = Ct.leftCols(ns) * S + Ct.rightCols(nu);
  StateSpace stable(T.topLeftCorner(ns, ns), B1, Ct.leftCols(ns), sys.D());
  StateSpace anti(T.bottomRightCorner(nu, nu), Bt.bottomRows(nu), C2,
                  Matrix::Zero(p, q));
  return {std::move(stable), std::move(anti)};
}

OptimalityReport OptimalityCheck(const YoulaTriple& triple,
                                 const StateSpace& T_cl, double gamma,
                                 const BlockStructure& structure, double tol) {
  OptimalityReport report;
  const Eigen::Index nw = T_cl.num_inputs();
  const StateSpace TT = Multiply(Adjoint(T_cl), T_cl);
  const StateSpace I_w(Matrix(0, 0), Matrix(0, nw), Matrix(nw, 0),
                       Matrix::Identity(nw, nw));
  const StateSpace R = Inverse(Add(I_w, Scale(TT, -1.0 / (gamma * gamma))));
  const StateSpace M =
      Multiply(Adjoint(triple.T2),
               Multiply(T_cl, Multiply(R, Adjoint(triple.T3))));
  report.num_states = static_cast<int>(M.num_states());

  const ComplexVector eig = M.A().eigenvalues();
  double closest = INFINITY;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    closest = std::min(closest, std::abs(eig(i).real()));
  }
  report.axis_distance = closest / (1.0 + MaxSingularValue(M.A()));
  if (report.axis_distance <= 1e-6) {
    throw GammaTooSmallError("gamma too small for optimality test");
  }
  auto [stable, anti] = StableAntistableSplit(M, 1e-6);

  const double hs = StrictH2(stable);
  const double hu = StrictH2(Adjoint(anti));
  const double total = std::sqrt(hs * hs + hu * hu);
  const BlockSplit& m = structure.m;
  const BlockSplit& k = structure.k;
  const auto ratio = [&](int i, int j) {
    const Eigen::Index r0 = i == 1 ? 0 : m.first;
    const Eigen::Index rs = i == 1 ? m.first : m.second;
    const Eigen::Index c0 = j == 1 ? 0 : k.first;
    const Eigen::Index cs = j == 1 ? k.first : k.second;
    if (rs == 0 || cs == 0) return 0.0;
    const double part = StrictH2(SubSystem(stable, r0, rs, c0, cs));
    return total > 0.0 ? part / total : part;
  };
  report.ratio_11 = ratio(1, 1);
  report.ratio_21 = ratio(2, 1);
  report.ratio_22 = ratio(2, 2);
  std::ostringstream os;
  const auto flag = [&](double value, const char* name) {
    if (!(value <= tol)) {
      if (os.tellp() > 0) os << ", ";
      os << "block " << name << " stable part " << value << " > " << tol;
    }
  };
  flag(report.ratio_11, "(1,1)");
  flag(report.ratio_21, "(2,1)");
  flag(report.ratio_22, "(2,2)");
  report.reason = os.str();
  report.passed = report.reason.empty();
  return report;
}

StateSpace ProjectToStructure(const StateSpace& K, const BlockSplit& m,
                              const BlockSplit& k) {
  if (K.num_outputs() != m.total() || K.num_inputs() != k.total()) {
    throw std::invalid_argument("ProjectToStructure: dimension mismatch");
  }
  const Eigen::Index nk = K.num_states();
  const Matrix A = BlockDiagonal({K.A(), K.A()});
  Matrix B = Matrix::Zero(2 * nk, k.total());
  B.topLeftCorner(nk, k.first) = K.B().leftCols(k.first);
  B.bottomRightCorner(nk, k.second) = K.B().rightCols(k.second);
  Matrix C = Matrix::Zero(m.total(), 2 * nk);
  C.topLeftCorner(m.first, nk) = K.C().topRows(m.first);
  C.bottomLeftCorner(m.second, nk) = K.C().bottomRows(m.second);
  C.bottomRightCorner(m.second, nk) = K.C().bottomRows(m.second);
  Matrix D = K.D();
  D.topRightCorner(m.first, k.second).setZero();
  return StateSpace(A, B, C, D);
}

}  // namespace nested_hinf
