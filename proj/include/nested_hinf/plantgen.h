#pragma once

#include <cstdint>

#include "nested_hinf/random.h"
#include "nested_hinf/structured.h"

namespace nested_hinf {

struct GenSpec {
  int n = 4;  // even, >= 4
  std::uint64_t seed = 0;
  bool stable = true;
  /// Right half-plane eigenvalues of A when !stable, split over A11 and A22.
  int unstable_count = 2;
  /// Scale of the B1 and C1 draws; <= 0 selects 1/√n.
  double scale_b1c1 = 0.0;
  /// Diagonal blocks are A_ii = S - (max Re λ(S) + margin) I with S Gaussian
  /// of variance 1/n_i.
  double margin = 0.3;
};

/// Control/measurement split (m₁, m₂) used for n/2 channels.
BlockSplit ChannelSplit(int n);

/// Random plant with lower-triangular (A, B2, C2), regulated output of size
/// n + m and exogenous input of size n + k. Degenerate draws are redrawn up
/// to 10 times, then std::runtime_error.
StructuredPlant RandomStructuredPlant(const GenSpec& spec);

struct Feedthrough {
  Matrix C1, D12, B1, D21;
};

/// C1 = [C1_raw; 0], D12 = [0; I_m], B1 = [B1_raw, 0], D21 = [0, I_k], with
/// the zero padding sized by the regulated/exogenous dimensions. Throws
/// std::invalid_argument when p1 < m or q1 < k.
Feedthrough OrthonormalFeedthrough(const Matrix& C1_raw, const Matrix& B1_raw,
                                   Eigen::Index m, Eigen::Index k);
/// Same, with explicit totals p1 (rows of C1) and q1 (columns of B1).
Feedthrough OrthonormalFeedthrough(const Matrix& C1_raw, const Matrix& B1_raw,
                                   Eigen::Index m, Eigen::Index k,
                                   Eigen::Index p1, Eigen::Index q1);

/// Block-diagonal combination of two plants: all cross terms are zero.
StructuredPlant BlockDiagonalPlant(const PartitionedPlant& first,
                                   const PartitionedPlant& second);

struct DecoupledPlant {
  StructuredPlant plant;
  PartitionedPlant first, second;
};

/// Two independent stable subsystems of size n/2 combined block-diagonally.
DecoupledPlant RandomDecoupledPlant(const GenSpec& spec);

}  // namespace nested_hinf
