#pragma once

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "iasim/basis_change.hpp"
#include "iasim/types.hpp"

namespace iasim {

/// Index bookkeeping for one alignment chain: the transmitter owning each of
/// the p sub-blocks and the receiver hosting each of the p-1 pairwise
/// conditions. Sub-block t belongs to user wrap3(k+1-t); condition t sits at
/// receiver wrap3(k+2-t) and aligns sub-blocks t and t+1 there.
struct ChainSpec {
  int p = 0;
  int k = 0;                    // chain index, 1..3
  std::vector<int> users;       // users[t-1], t = 1..p
  std::vector<int> receivers;   // receivers[t-1], t = 1..p-1
  std::vector<int> occurrence;  // running count of users[t-1] so far

  /// Number of sub-blocks of user i in this chain: ceil((p - <k-i>)/3).
  int sub_blocks(int i) const { return (p - mod3(k - i) + 2) / 3; }
};

ChainSpec chain_spec(int p, int k);

/// Identifies one block column of the chain system.
struct BlockLabel {
  int user = 0;         // transmitter owning the block
  int occurrence = 0;   // which sub-block of that user within the chain
  int sub_block = 0;    // chain position t, 1..p
  int antenna_row = 0;  // 1..p
};

/// The per-antenna-row expansion of one chain's matrix equation E.F = 0.
/// Block rows are the (p-1)(p+1) scalar alignment conditions, block columns
/// the p*p antenna-row blocks of the chain's sub-blocks. Entries of `e` are
/// the signed post-CB channel coefficients (+ for sub-block t, - for t+1);
/// `support` marks which of them the zero pattern allows to be nonzero.
struct BlockSystem {
  ChainSpec chain;
  ExtensionMode mode;
  int p = 0;

  CMat e;  // (p-1)(p+1) x p*p complex scalar coefficients
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support;
  std::vector<BlockLabel> labels;
  std::vector<bool> zeroed;
  std::vector<std::pair<int, int>> zp_steps;  // (row, col) eliminations, 0-based

  int block_rows() const { return (p - 1) * (p + 1); }
  int block_cols() const { return p * p; }

  /// Lifted numeric materializations of `e` (zeroed columns cleared).
  Mat e_scalar_acs() const;
  CMat e_scalar_time() const;
};

BlockSystem build_block_system(const ChainSpec& chain,
                               const StructuredChannels& sc);

/// Zero propagation: repeatedly locate a block row whose support holds a
/// single entry (r*, c*), force block c* of F to zero, and clear row r* and
/// column c*. Terminates at a fixed point; the zeroed set is independent of
/// the scan order.
BlockSystem zero_propagation(const BlockSystem& sys);
BlockSystem zero_propagation(const BlockSystem& sys,
                             const std::vector<int>& scan_order);

/// Column index sets into the orthonormal basis B used to build the three
/// support precoding blocks (1-based).
struct IndexSets {
  std::vector<int> z, x1, x2, y1, y2;
};

/// The three support precoding blocks A_1 = [B_Z B_X1 B_X2],
/// A_2 = [B_Z B_Y1 B_Y2], A_3 = [B_X1 B_Y1], each with orthonormal columns.
struct SupportBlocks {
  int p = 0;
  ExtensionMode mode;
  IndexSets sets;
  Mat b_r;
  CMat b_c;
  std::array<Mat, 3> a_r;
  std::array<CMat, 3> a_c;

  const Mat& A(int i) const { return a_r[i - 1]; }
  const CMat& Ac(int i) const { return a_c[i - 1]; }
};

/// ACS design: B must be real orthonormal 2T x 2T.
SupportBlocks spb_design(int p, const Mat& b);
/// Time-only design: B must be complex unitary T x T; the sets are the
/// complex-dimension analogue of the ACS layout (Z shrinks to one column).
SupportBlocks spb_design(int p, const CMat& b);
/// Seeded default: Haar-random orthonormal basis for the mode.
SupportBlocks default_spb(int p, ExtensionMode mode, uint64_t seed);

/// Complex coefficients theta_c for every non-zeroed block of a reduced
/// system, normalized so the pinned block has coefficient 1. Because every
/// lifted block equation acts per complex coefficient, the stacked
/// least-squares system {E_scalar.x = 0, x_pin = a} decouples into one
/// complex system shared by all columns a; its minimum-norm solution is the
/// block map c -> lift(theta_c).A.
struct ChainSolution {
  std::map<int, cplx> theta;  // block column -> coefficient (zeroed omitted)
  int pin = -1;
  double residual = 0.0;
};

ChainSolution solve_chain_coeffs(const BlockSystem& reduced, int pin);

/// Materialized solve: every block id of the chain mapped to its 2T x 2(p+1)
/// matrix (zeroed blocks are exact zero). Throws "pin_infeasible" when the
/// constrained solve cannot reach the residual tolerance.
std::map<int, Mat> solve_chain(const BlockSystem& reduced, int pin,
                               const Mat& a);
std::map<int, CMat> solve_chain(const BlockSystem& reduced, int pin,
                                const CMat& a);

/// Provenance of one precoder column group (one sub-block).
struct ColumnGroup {
  int chain = 0;
  int occurrence = 0;
  int sub_block = 0;       // position t within the chain
  int spb = 0;             // SPB index assigned to the chain
  int pinned_block = -1;   // flat block id pinned during the solve
  double solve_residual = 0.0;
};

/// The three extended precoders with chain/SPB provenance.
struct PrecoderSet {
  int p = 0;
  ExtensionMode mode;
  std::array<Mat, 3> v_r;
  std::array<CMat, 3> v_c;
  std::array<std::vector<ColumnGroup>, 3> groups;  // per user, column order
  double max_align_residual = 0.0;
  double min_rank_sigma = 0.0;

  const Mat& V(int i) const { return v_r[i - 1]; }
  const CMat& Vc(int i) const { return v_c[i - 1]; }
  int columns() const { return 2 * p * (p + 1) / (mode.is_acs() ? 1 : 2); }
};

/// Runs the three chains end to end: block system, zero propagation, pinned
/// solve with SPB A_k, sub-block stacking, and per-user concatenation in
/// chain order. On any alignment-residual, rank, or (ACS) signal-space
/// full-rank failure, falls back over the six chain-to-SPB assignments and
/// alternative pins before giving up.
PrecoderSet assemble_precoders(const StructuredChannels& sc,
                               const SupportBlocks& spb);

}  // namespace iasim
