#include "nested_hinf/plantgen.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nested_hinf {
namespace {

constexpr int kMaxAttempts = 10;

bool FullRank(const Matrix& M) {
  if (M.size() == 0) return true;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 1e-8 * s(0);
}

Matrix StableBlock(Philox& rng, Eigen::Index size, double margin) {
  const Matrix S =
      rng.NormalMatrix(size, size) / std::sqrt(static_cast<double>(size));
  const double shift = MaxRealPart(S) + margin;
  return S - shift * Matrix::Identity(size, size);
}

// Moves exactly `count` eigenvalues of a Hurwitz A into the right half-plane
// by mirroring whole Schur blocks. Returns false if no block combination has
// that count.
bool ReflectModes(Matrix& A, int count) {
  if (count == 0) return true;
  Eigen::RealSchur<Matrix> schur(A);
  Matrix T = schur.matrixT();
  const Matrix& U = schur.matrixU();
  const Eigen::Index n = T.rows();
  int remaining = count;
  for (Eigen::Index i = 0; i < n && remaining > 0;) {
    const bool pair = i + 1 < n && T(i + 1, i) != 0.0;
    if (pair) {
      if (remaining >= 2) {
        const double alpha = 0.5 * (T(i, i) + T(i + 1, i + 1));
        T(i, i) -= 2.0 * alpha;
        T(i + 1, i + 1) -= 2.0 * alpha;
        remaining -= 2;
      }
      i += 2;
    } else {
      T(i, i) = -T(i, i);
      remaining -= 1;
      i += 1;
    }
  }
  if (remaining != 0) return false;
  A = U * T * U.transpose();
  return true;
}

struct Subsystem {
  Matrix A, B2, C2;
};

}  // namespace

BlockSplit ChannelSplit(int n) {
  const int half = n / 2;
  const int first = (half + 1) / 2;
  return {first, half - first};
}

Feedthrough OrthonormalFeedthrough(const Matrix& C1_raw, const Matrix& B1_raw,
                                   Eigen::Index m, Eigen::Index k,
                                   Eigen::Index p1, Eigen::Index q1) {
  const Eigen::Index n = C1_raw.cols();
  if (p1 < C1_raw.rows() + m) {
    throw std::invalid_argument(
        "regulated output dimension too small: need at least " +
        std::to_string(C1_raw.rows() + m));
  }
  if (q1 < B1_raw.cols() + k) {
    throw std::invalid_argument(
        "exogenous input dimension too small: need at least " +
        std::to_string(B1_raw.cols() + k));
  }
  Feedthrough f;
  f.C1 = Matrix::Zero(p1, n);
  f.C1.topRows(C1_raw.rows()) = C1_raw;
  f.D12 = Matrix::Zero(p1, m);
  f.D12.bottomRows(m).setIdentity();
  f.B1 = Matrix::Zero(B1_raw.rows(), q1);
  f.B1.leftCols(B1_raw.cols()) = B1_raw;
  f.D21 = Matrix::Zero(k, q1);
  f.D21.rightCols(k).setIdentity();
  return f;
}

Feedthrough OrthonormalFeedthrough(const Matrix& C1_raw, const Matrix& B1_raw,
                                   Eigen::Index m, Eigen::Index k) {
  return OrthonormalFeedthrough(C1_raw, B1_raw, m, k, C1_raw.rows() + m,
                                B1_raw.cols() + k);
}

StructuredPlant RandomStructuredPlant(const GenSpec& spec) {
  if (spec.n < 4 || spec.n % 2 != 0) {
    throw std::invalid_argument("GenSpec: n must be even and >= 4");
  }
  if (!spec.stable && (spec.unstable_count < 0 ||
                       spec.unstable_count > spec.n)) {
    throw std::invalid_argument("GenSpec: unstable_count out of range");
  }
  const Eigen::Index n = spec.n, h = n / 2;
  const BlockSplit ns{h, h};
  const BlockSplit ms = ChannelSplit(spec.n);
  const BlockSplit ks = ms;
  const double scale =
      spec.scale_b1c1 > 0 ? spec.scale_b1c1 : 1.0 / std::sqrt(double(n));
  const int reflect1 = spec.stable ? 0 : (spec.unstable_count + 1) / 2;
  const int reflect2 = spec.stable ? 0 : spec.unstable_count / 2;

  Philox rng(spec.seed);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Subsystem s1{StableBlock(rng, h, spec.margin),
                 rng.NormalMatrix(h, ms.first), rng.NormalMatrix(ks.first, h)};
    Subsystem s2{StableBlock(rng, h, spec.margin),
                 rng.NormalMatrix(h, ms.second),
                 rng.NormalMatrix(ks.second, h)};
    const Matrix A21 = rng.NormalMatrix(h, h);
    const Matrix B21 = rng.NormalMatrix(h, ms.first);
    const Matrix C21 = rng.NormalMatrix(ks.second, h);
    const Matrix B1raw = scale * rng.NormalMatrix(n, n);
    const Matrix C1raw = scale * rng.NormalMatrix(n, n);
    if (!ReflectModes(s1.A, reflect1) || !ReflectModes(s2.A, reflect2)) {
      continue;
    }
    if (!FullRank(s1.B2) || !FullRank(s1.C2) || !FullRank(s2.B2) ||
        !FullRank(s2.C2)) {
      continue;
    }

    StructuredPlant sp;
    sp.structure = {ns, ms, ks};
    PartitionedPlant& p = sp.plant;
    p.A = Matrix::Zero(n, n);
    p.A.topLeftCorner(h, h) = s1.A;
    p.A.bottomLeftCorner(h, h) = A21;
    p.A.bottomRightCorner(h, h) = s2.A;
    p.B2 = Matrix::Zero(n, ms.total());
    p.B2.topLeftCorner(h, ms.first) = s1.B2;
    p.B2.bottomLeftCorner(h, ms.first) = B21;
    p.B2.bottomRightCorner(h, ms.second) = s2.B2;
    p.C2 = Matrix::Zero(ks.total(), n);
    p.C2.topLeftCorner(ks.first, h) = s1.C2;
    p.C2.bottomLeftCorner(ks.second, h) = C21;
    p.C2.bottomRightCorner(ks.second, h) = s2.C2;
    Feedthrough f =
        OrthonormalFeedthrough(C1raw, B1raw, ms.total(), ks.total());
    p.B1 = std::move(f.B1);
    p.C1 = std::move(f.C1);
    p.D12 = std::move(f.D12);
    p.D21 = std::move(f.D21);

    // The structured problem needs each diagonal subsystem to be
    // stabilizable and detectable on its own.
    if (!IsStabilizable(s1.A, s1.B2) || !IsDetectable(s1.C2, s1.A) ||
        !IsStabilizable(s2.A, s2.B2) || !IsDetectable(s2.C2, s2.A)) {
      continue;
    }
    if (!ValidateStructuredPlant(p, sp.structure).ok()) continue;
    return sp;
  }
  throw std::runtime_error("plant generation failed after " +
                           std::to_string(kMaxAttempts) + " attempts");
}

StructuredPlant BlockDiagonalPlant(const PartitionedPlant& a,
                                   const PartitionedPlant& b) {
  StructuredPlant sp;
  sp.structure.n = {a.num_states(), b.num_states()};
  sp.structure.m = {a.num_controls(), b.num_controls()};
  sp.structure.k = {a.num_measurements(), b.num_measurements()};
  PartitionedPlant& p = sp.plant;
  p.A = BlockDiagonal({a.A, b.A});
  p.B1 = BlockDiagonal({a.B1, b.B1});
  p.B2 = BlockDiagonal({a.B2, b.B2});
  p.C1 = BlockDiagonal({a.C1, b.C1});
  p.C2 = BlockDiagonal({a.C2, b.C2});
  p.D12 = BlockDiagonal({a.D12, b.D12});
  p.D21 = BlockDiagonal({a.D21, b.D21});
  return sp;
}

DecoupledPlant RandomDecoupledPlant(const GenSpec& spec) {
  if (spec.n < 4 || spec.n % 2 != 0) {
    throw std::invalid_argument("GenSpec: n must be even and >= 4");
  }
  const Eigen::Index h = spec.n / 2;
  const BlockSplit ms = ChannelSplit(spec.n);
  const double scale =
      spec.scale_b1c1 > 0 ? spec.scale_b1c1 : 1.0 / std::sqrt(double(spec.n));
  Philox rng(spec.seed);
  const auto subsystem = [&](Eigen::Index ch) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      PartitionedPlant p;
      p.A = StableBlock(rng, h, spec.margin);
      p.B2 = rng.NormalMatrix(h, ch);
      p.C2 = rng.NormalMatrix(ch, h);
      Feedthrough f = OrthonormalFeedthrough(scale * rng.NormalMatrix(h, h),
                                             scale * rng.NormalMatrix(h, h),
                                             ch, ch);
      p.B1 = std::move(f.B1);
      p.C1 = std::move(f.C1);
      p.D12 = std::move(f.D12);
      p.D21 = std::move(f.D21);
      if (FullRank(p.B2) && FullRank(p.C2) &&
          IsStabilizable(p.A, p.B1) && IsDetectable(p.C1, p.A)) {
        return p;
      }
    }
    throw std::runtime_error("plant generation failed after " +
                             std::to_string(kMaxAttempts) + " attempts");
  };
  DecoupledPlant out;
  out.first = subsystem(ms.first);
  out.second = subsystem(ms.second);
  out.plant = BlockDiagonalPlant(out.first, out.second);
  return out;
}

}  // namespace nested_hinf
