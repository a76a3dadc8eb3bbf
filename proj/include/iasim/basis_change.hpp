#pragma once

#include <array>

#include "iasim/channel.hpp"
#include "iasim/types.hpp"

namespace iasim {

/// Banded mask of allowed (nonzero) antenna positions for the two cross
/// channels seen by a receiver, in receiver-relative coordinates:
/// "left" is the channel from transmitter j-1, "right" from j+1.
/// Rows q and columns r are 1-based antenna indices.
struct ZeroPattern {
  int p = 0;

  // Left (H_{j,j-1}): row 1 keeps only column 1; row q in [2,p] keeps
  // columns q..p; row p+1 is all zero.
  bool allowed_left(int q, int r) const {
    if (q == 1) return r == 1;
    if (q <= p) return r >= q;
    return false;
  }

  // Right (H_{j,j+1}): row 1 is all zero; row q in [2,p] keeps columns
  // 1..q-1; row p+1 keeps only column p.
  bool allowed_right(int q, int r) const {
    if (q == 1) return false;
    if (q <= p) return r <= q - 1;
    return r == p;
  }

  /// (p+1) x 2p mask over the concatenation [H_{j,j-1} | H_{j,j+1}].
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask() const;
};

ZeroPattern target_pattern(int p);

/// Invertible per-receiver and per-transmitter complex transformations that
/// force the target zero pattern on the cross channels.
struct BasisChange {
  int p = 0;
  std::array<CMat, 3> r;     // (p+1) x (p+1) receive transformations
  std::array<CMat, 3> tmat;  // p x p transmit transformations
  double pattern_residual = 0.0;

  const CMat& R(int j) const { return r[j - 1]; }
  const CMat& Tmat(int i) const { return tmat[i - 1]; }
};

/// Builds the change of basis for one draw. Construction is deterministic:
///  1. row 1 / row p+1 of each R(j) are unit left-null vectors of the two
///     cross channels seen by receiver j;
///  2. each Tmat(i) has its middle columns in the joint null space of the
///     two row constraints propagated from neighbours, and its first/last
///     columns in one null space each with maximal remaining component;
///  3. the middle rows of each R(j) null out the forbidden transformed
///     cross-channel columns row by row.
/// All null vectors are unit-normalized and phase-fixed.
BasisChange build_cb(const ChannelDraw& draw);

/// Post-CB equivalent channels with forbidden entries clamped to exact zero,
/// plus their lifted forms for the requested mode.
struct StructuredChannels {
  int p = 0;
  ExtensionMode mode;
  std::array<CMat, 9> g;        // complex equivalents R H T, clamped
  std::array<Mat, 9> lift_r;    // ACS lifts (filled when mode is ACS)
  std::array<CMat, 9> lift_c;   // complex lifts (filled when time-only)

  const CMat& G(int j, int i) const { return g[3 * (j - 1) + (i - 1)]; }
  const Mat& L(int j, int i) const { return lift_r[3 * (j - 1) + (i - 1)]; }
  const CMat& Lc(int j, int i) const { return lift_c[3 * (j - 1) + (i - 1)]; }
};

StructuredChannels apply_cb(const ChannelDraw& draw, const BasisChange& cb,
                            ExtensionMode mode);

}  // namespace iasim
