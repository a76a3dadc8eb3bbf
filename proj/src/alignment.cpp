#include "iasim/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iasim/numeric.hpp"
#include "iasim/rng.hpp"

namespace iasim {

ChainSpec chain_spec(int p, int k) {
  if (p < 2 || k < 1 || k > 3) {
    throw StructuredError("bad_parameter", "chain_spec needs p >= 2, k in 1..3")
        .with("p", p)
        .with("k", k);
  }
  ChainSpec spec;
  spec.p = p;
  spec.k = k;
  std::array<int, 3> seen{0, 0, 0};
  for (int t = 1; t <= p; ++t) {
    int user = wrap3(k + 1 - t);
    spec.users.push_back(user);
    spec.occurrence.push_back(++seen[user - 1]);
  }
  for (int t = 1; t <= p - 1; ++t) {
    spec.receivers.push_back(wrap3(k + 2 - t));
  }
  return spec;
}

BlockSystem build_block_system(const ChainSpec& chain,
                               const StructuredChannels& sc) {
  const int p = chain.p;
  const ZeroPattern pat = target_pattern(p);
  BlockSystem sys;
  sys.chain = chain;
  sys.mode = sc.mode;
  sys.p = p;
  sys.e = CMat::Zero(sys.block_rows(), sys.block_cols());
  sys.support.setConstant(sys.block_rows(), sys.block_cols(), false);
  sys.zeroed.assign(sys.block_cols(), false);
  for (int c = 0; c < sys.block_cols(); ++c) {
    int t = c / p + 1;
    sys.labels.push_back(BlockLabel{chain.users[t - 1],
                                    chain.occurrence[t - 1], t, c % p + 1});
  }

  // Condition t aligns sub-blocks t (+H_{r,u}) and t+1 (-H_{r,v}) at
  // receiver r; u is always r's "j-1" neighbour and v its "j+1" neighbour,
  // so the allowed positions come straight from the banded pattern.
  for (int t = 1; t <= p - 1; ++t) {
    int rj = chain.receivers[t - 1];
    int u = chain.users[t - 1];
    int v = chain.users[t];
    const CMat& gl = sc.G(rj, u);
    const CMat& gr = sc.G(rj, v);
    for (int q = 1; q <= p + 1; ++q) {
      int row = (t - 1) * (p + 1) + (q - 1);
      for (int r = 1; r <= p; ++r) {
        if (pat.allowed_left(q, r)) {
          int col = (t - 1) * p + (r - 1);
          sys.e(row, col) = gl(q - 1, r - 1);
          sys.support(row, col) = true;
        }
        if (pat.allowed_right(q, r)) {
          int col = t * p + (r - 1);
          sys.e(row, col) = -gr(q - 1, r - 1);
          sys.support(row, col) = true;
        }
      }
    }
  }
  return sys;
}

Mat BlockSystem::e_scalar_acs() const {
  return lift_matrix_acs(e, mode.extensions);
}

CMat BlockSystem::e_scalar_time() const {
  return lift_matrix_time(e, mode.extensions);
}

BlockSystem zero_propagation(const BlockSystem& sys) {
  std::vector<int> order(sys.block_rows());
  std::iota(order.begin(), order.end(), 0);
  return zero_propagation(sys, order);
}

BlockSystem zero_propagation(const BlockSystem& sys,
                             const std::vector<int>& scan_order) {
  BlockSystem out = sys;
  out.zp_steps.clear();
  for (;;) {
    int hit_row = -1;
    int hit_col = -1;
    for (int row : scan_order) {
      int count = 0;
      int col = -1;
      for (int c = 0; c < out.block_cols(); ++c) {
        if (out.support(row, c)) {
          ++count;
          col = c;
          if (count > 1) break;
        }
      }
      if (count == 1) {
        hit_row = row;
        hit_col = col;
        break;
      }
    }
    if (hit_row < 0) break;
    out.zp_steps.emplace_back(hit_row, hit_col);
    out.zeroed[hit_col] = true;
    for (int c = 0; c < out.block_cols(); ++c) {
      out.support(hit_row, c) = false;
      out.e(hit_row, c) = cplx(0.0, 0.0);
    }
    for (int r = 0; r < out.block_rows(); ++r) {
      out.support(r, hit_col) = false;
      out.e(r, hit_col) = cplx(0.0, 0.0);
    }
  }
  return out;
}

namespace {

IndexSets acs_sets(int p) {
  IndexSets s;
  auto fill = [](std::vector<int>& v, int lo, int hi) {
    for (int i = lo; i <= hi; ++i) v.push_back(i);
  };
  fill(s.z, 1, 2);
  fill(s.x1, 3, p + 3);
  fill(s.x2, p + 4, 2 * p + 2);
  fill(s.y1, 2 * p + 3, 3 * p + 3);
  fill(s.y2, 3 * p + 4, 4 * p + 2);
  return s;
}

// Complex-dimension analogue over T = 2p+1 columns: Z shrinks to a single
// column and the X/Y halves split p+1 columns between A_3's two slices.
IndexSets time_sets(int p) {
  IndexSets s;
  int a1 = (p + 2) / 2;  // ceil((p+1)/2)
  int a2 = (p + 1) - a1;
  int cursor = 1;
  auto take = [&cursor](std::vector<int>& v, int n) {
    for (int i = 0; i < n; ++i) v.push_back(cursor++);
  };
  take(s.z, 1);
  take(s.x1, a1);
  take(s.x2, p - a1);
  take(s.y1, a2);
  take(s.y2, p - a2);
  return s;
}

template <class MatT>
MatT pick_columns(const MatT& b, const std::vector<const std::vector<int>*>& sets) {
  int total = 0;
  for (const auto* s : sets) total += static_cast<int>(s->size());
  MatT out(b.rows(), total);
  int c = 0;
  for (const auto* s : sets) {
    for (int idx : *s) out.col(c++) = b.col(idx - 1);
  }
  return out;
}

template <class MatT>
void check_orthonormal(const MatT& b, int expect_dim) {
  if (b.rows() != expect_dim || b.cols() != expect_dim) {
    throw StructuredError("spb_bad_shape", "basis has wrong dimensions")
        .with("rows", static_cast<int>(b.rows()))
        .with("cols", static_cast<int>(b.cols()))
        .with("expected", expect_dim);
  }
  MatT gram = b.adjoint() * b;
  double dev = (gram - MatT::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-12) {
    throw StructuredError("spb_not_orthonormal",
                          "basis columns are not orthonormal to 1e-12")
        .with("deviation", dev);
  }
}

}  // namespace

SupportBlocks spb_design(int p, const Mat& b) {
  ExtensionMode mode = ExtensionMode::acs(p);
  check_orthonormal(b, mode.block_dim());
  SupportBlocks spb;
  spb.p = p;
  spb.mode = mode;
  spb.sets = acs_sets(p);
  spb.b_r = b;
  spb.a_r[0] = pick_columns(b, {&spb.sets.z, &spb.sets.x1, &spb.sets.x2});
  spb.a_r[1] = pick_columns(b, {&spb.sets.z, &spb.sets.y1, &spb.sets.y2});
  spb.a_r[2] = pick_columns(b, {&spb.sets.x1, &spb.sets.y1});
  return spb;
}

SupportBlocks spb_design(int p, const CMat& b) {
  ExtensionMode mode = ExtensionMode::time_only(p);
  check_orthonormal(b, mode.block_dim());
  SupportBlocks spb;
  spb.p = p;
  spb.mode = mode;
  spb.sets = time_sets(p);
  spb.b_c = b;
  spb.a_c[0] = pick_columns(b, {&spb.sets.z, &spb.sets.x1, &spb.sets.x2});
  spb.a_c[1] = pick_columns(b, {&spb.sets.z, &spb.sets.y1, &spb.sets.y2});
  spb.a_c[2] = pick_columns(b, {&spb.sets.x1, &spb.sets.y1});
  return spb;
}

SupportBlocks default_spb(int p, ExtensionMode mode, uint64_t seed) {
  RandomStream rs(seed, substream(0x737062ull /*"spb"*/, 0));
  if (mode.is_acs()) {
    return spb_design(p, numeric::random_orthogonal(mode.block_dim(), rs));
  }
  return spb_design(p, numeric::random_unitary(mode.block_dim(), rs));
}

ChainSolution solve_chain_coeffs(const BlockSystem& reduced, int pin) {
  if (pin < 0 || pin >= reduced.block_cols() || reduced.zeroed[pin]) {
    throw StructuredError("bad_pin", "pin must be a non-zeroed block")
        .with("pin", pin);
  }
  std::vector<int> cols;
  for (int c = 0; c < reduced.block_cols(); ++c) {
    if (!reduced.zeroed[c]) cols.push_back(c);
  }
  std::vector<int> rows;
  for (int r = 0; r < reduced.block_rows(); ++r) {
    for (int c : cols) {
      if (reduced.support(r, c)) {
        rows.push_back(r);
        break;
      }
    }
  }

  const int nr = static_cast<int>(rows.size());
  const int nc = static_cast<int>(cols.size());
  CMat a = CMat::Zero(nr + 1, nc);
  for (int ri = 0; ri < nr; ++ri) {
    for (int ci = 0; ci < nc; ++ci) a(ri, ci) = reduced.e(rows[ri], cols[ci]);
  }
  int pin_idx = static_cast<int>(
      std::find(cols.begin(), cols.end(), pin) - cols.begin());
  a(nr, pin_idx) = cplx(1.0, 0.0);
  CMat rhs = CMat::Zero(nr + 1, 1);
  rhs(nr, 0) = cplx(1.0, 0.0);

  CMat theta = numeric::min_norm_solve(a, rhs);
  double res = (a * theta - rhs).norm() / (a.norm() * theta.norm() + 1.0);

  ChainSolution sol;
  sol.pin = pin;
  sol.residual = res;
  for (int ci = 0; ci < nc; ++ci) sol.theta[cols[ci]] = theta(ci, 0);
  return sol;
}

namespace {

// (I_T (x) M) a for M = [[re,-im],[im,re]]: the ACS lift of theta applied to
// a 2T-row matrix without forming the 2T x 2T operator.
Mat lift_apply_acs(cplx theta, const Mat& a) {
  Mat out(a.rows(), a.cols());
  const double re = theta.real();
  const double im = theta.imag();
  for (Eigen::Index t = 0; 2 * t < a.rows(); ++t) {
    out.row(2 * t) = re * a.row(2 * t) - im * a.row(2 * t + 1);
    out.row(2 * t + 1) = im * a.row(2 * t) + re * a.row(2 * t + 1);
  }
  return out;
}

}  // namespace

std::map<int, Mat> solve_chain(const BlockSystem& reduced, int pin,
                               const Mat& a) {
  ChainSolution sol = solve_chain_coeffs(reduced, pin);
  if (sol.residual > tol::kSolve) {
    throw StructuredError("pin_infeasible",
                          "constrained chain solve residual above tolerance")
        .with("pin", pin)
        .with("residual", sol.residual);
  }
  std::map<int, Mat> blocks;
  for (int c = 0; c < reduced.block_cols(); ++c) {
    if (reduced.zeroed[c]) {
      blocks[c] = Mat::Zero(a.rows(), a.cols());
    } else {
      blocks[c] = lift_apply_acs(sol.theta.at(c), a);
    }
  }
  return blocks;
}

std::map<int, CMat> solve_chain(const BlockSystem& reduced, int pin,
                                const CMat& a) {
  ChainSolution sol = solve_chain_coeffs(reduced, pin);
  if (sol.residual > tol::kSolve) {
    throw StructuredError("pin_infeasible",
                          "constrained chain solve residual above tolerance")
        .with("pin", pin)
        .with("residual", sol.residual);
  }
  std::map<int, CMat> blocks;
  for (int c = 0; c < reduced.block_cols(); ++c) {
    if (reduced.zeroed[c]) {
      blocks[c] = CMat::Zero(a.rows(), a.cols());
    } else {
      blocks[c] = sol.theta.at(c) * a;
    }
  }
  return blocks;
}

namespace {

// First chain position of user i in chain k (positions advance by 3).
int first_position(int k, int i) {
  int m = mod3(k + 1 - i);
  return m == 0 ? 3 : m;
}

struct AssemblyAttempt {
  std::array<int, 3> spb_of_chain;  // chain k -> SPB index
  std::array<int, 3> pin;           // chain k -> pinned flat block id
};

// Signal-space full-rank probe used as the arbiter of the fallback search
// (ACS mode only; the time-only scheme is expected to be rank deficient).
bool acs_signal_space_ok(const StructuredChannels& sc, const PrecoderSet& prec) {
  for (int j = 1; j <= 3; ++j) {
    int prev = wrap3(j - 1);
    int next = wrap3(j + 1);
    Mat k(sc.L(j, prev).rows(), prec.V(prev).cols() + prec.V(next).cols());
    k << sc.L(j, prev) * prec.V(prev), sc.L(j, next) * prec.V(next);
    auto [basis, comp] = numeric::colspace_split(k);
    Mat desired = sc.L(j, j) * prec.V(j);
    for (Eigen::Index c = 0; c < desired.cols(); ++c) {
      desired.col(c) /= desired.col(c).norm();
    }
    Mat g(k.rows(), desired.cols() + basis.cols());
    g << desired, basis;
    if (numeric::rank_info(g).sigma_min_rel <= tol::kRank) return false;
  }
  return true;
}

}  // namespace

PrecoderSet assemble_precoders(const StructuredChannels& sc,
                               const SupportBlocks& spb) {
  const int p = sc.p;
  const ExtensionMode mode = sc.mode;
  if (spb.p != p || spb.mode.kind != mode.kind) {
    throw StructuredError("mode_mismatch",
                          "support blocks do not match the channel mode");
  }

  std::array<ChainSpec, 3> specs;
  std::array<BlockSystem, 3> reduced;
  std::array<std::vector<int>, 3> pin_candidates;
  for (int k = 1; k <= 3; ++k) {
    specs[k - 1] = chain_spec(p, k);
    reduced[k - 1] = zero_propagation(build_block_system(specs[k - 1], sc));
    // Default pin: user k's first sub-block (position 1), largest-index
    // non-zeroed antenna row first.
    for (int r = p; r >= 1; --r) {
      int c = r - 1;  // position t = 1
      if (!reduced[k - 1].zeroed[c]) pin_candidates[k - 1].push_back(c);
    }
    if (pin_candidates[k - 1].empty()) {
      throw StructuredError("no_pin", "no non-zeroed block available to pin")
          .with("chain", k);
    }
  }

  const std::array<std::array<int, 3>, 6> perms = {{{1, 2, 3},
                                                    {1, 3, 2},
                                                    {2, 1, 3},
                                                    {2, 3, 1},
                                                    {3, 1, 2},
                                                    {3, 2, 1}}};
  nlohmann::json diagnostics = nlohmann::json::array();

  for (const auto& perm : perms) {
    // Pin combinations ordered by total displacement from the default.
    std::vector<std::array<int, 3>> combos;
    int max_idx = 0;
    for (const auto& cands : pin_candidates) {
      max_idx = std::max(max_idx, static_cast<int>(cands.size()) - 1);
    }
    for (int d = 0; d <= 3 * max_idx && combos.size() < 24; ++d) {
      for (int i0 = 0; i0 <= d; ++i0) {
        for (int i1 = 0; i1 + i0 <= d; ++i1) {
          int i2 = d - i0 - i1;
          if (i0 < static_cast<int>(pin_candidates[0].size()) &&
              i1 < static_cast<int>(pin_candidates[1].size()) &&
              i2 < static_cast<int>(pin_candidates[2].size())) {
            combos.push_back({i0, i1, i2});
          }
        }
      }
    }

    for (const auto& combo : combos) {
      AssemblyAttempt attempt;
      for (int k = 0; k < 3; ++k) {
        attempt.spb_of_chain[k] = perm[k];
        attempt.pin[k] = pin_candidates[k][combo[k]];
      }

      std::array<ChainSolution, 3> sols;
      bool solve_ok = true;
      for (int k = 0; k < 3 && solve_ok; ++k) {
        sols[k] = solve_chain_coeffs(reduced[k], attempt.pin[k]);
        if (sols[k].residual > tol::kSolve) {
          diagnostics.push_back({{"stage", "solve"},
                                 {"chain", k + 1},
                                 {"pin", attempt.pin[k]},
                                 {"residual", sols[k].residual}});
          solve_ok = false;
        }
      }
      if (!solve_ok) continue;

      // Materialize sub-blocks per chain.
      std::array<std::vector<Mat>, 3> subs_r;
      std::array<std::vector<CMat>, 3> subs_c;
      for (int k = 0; k < 3; ++k) {
        for (int t = 1; t <= p; ++t) {
          if (mode.is_acs()) {
            const Mat& a = spb.A(attempt.spb_of_chain[k]);
            Mat sub(a.rows() * p, a.cols());
            for (int r = 1; r <= p; ++r) {
              int c = (t - 1) * p + (r - 1);
              if (reduced[k].zeroed[c]) {
                sub.middleRows((r - 1) * a.rows(), a.rows()).setZero();
              } else {
                sub.middleRows((r - 1) * a.rows(), a.rows()) =
                    lift_apply_acs(sols[k].theta.at(c), a);
              }
            }
            subs_r[k].push_back(std::move(sub));
          } else {
            const CMat& a = spb.Ac(attempt.spb_of_chain[k]);
            CMat sub(a.rows() * p, a.cols());
            for (int r = 1; r <= p; ++r) {
              int c = (t - 1) * p + (r - 1);
              if (reduced[k].zeroed[c]) {
                sub.middleRows((r - 1) * a.rows(), a.rows()).setZero();
              } else {
                sub.middleRows((r - 1) * a.rows(), a.rows()) =
                    sols[k].theta.at(c) * a;
              }
            }
            subs_c[k].push_back(std::move(sub));
          }
        }
      }

      // Alignment-condition residuals.
      double max_res = 0.0;
      for (int k = 0; k < 3; ++k) {
        const ChainSpec& spec = specs[k];
        for (int t = 1; t <= p - 1; ++t) {
          int rj = spec.receivers[t - 1];
          int u = spec.users[t - 1];
          int v = spec.users[t];
          double res;
          if (mode.is_acs()) {
            Mat lhs = sc.L(rj, u) * subs_r[k][t - 1];
            Mat rhs = sc.L(rj, v) * subs_r[k][t];
            res = (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1e-300);
          } else {
            CMat lhs = sc.Lc(rj, u) * subs_c[k][t - 1];
            CMat rhs = sc.Lc(rj, v) * subs_c[k][t];
            res = (lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1e-300);
          }
          max_res = std::max(max_res, res);
        }
      }
      if (max_res > tol::kSolve) {
        diagnostics.push_back({{"stage", "alignment"}, {"residual", max_res}});
        continue;
      }

      // Concatenate each user's sub-blocks. A user owns exactly one
      // sub-block per chain position value t in 1..p (the chains cover the
      // residues of t mod 3); ordering the column groups by descending t
      // gives every user the same zero layout, which fixes the column
      // permutation to identity.
      PrecoderSet prec;
      prec.p = p;
      prec.mode = mode;
      prec.max_align_residual = max_res;
      int bd = mode.block_dim();
      int width = mode.is_acs() ? 2 * (p + 1) : p + 1;
      for (int i = 1; i <= 3; ++i) {
        if (mode.is_acs()) {
          prec.v_r[i - 1] = Mat::Zero(bd * p, width * p);
        } else {
          prec.v_c[i - 1] = CMat::Zero(bd * p, width * p);
        }
        int group = 0;
        for (int t = p; t >= 1; --t) {
          int k = wrap3(i + t - 1);  // the chain holding user i at position t
          int s = (t - first_position(k, i)) / 3 + 1;
          if (mode.is_acs()) {
            prec.v_r[i - 1].middleCols(group * width, width) =
                subs_r[k - 1][t - 1];
          } else {
            prec.v_c[i - 1].middleCols(group * width, width) =
                subs_c[k - 1][t - 1];
          }
          prec.groups[i - 1].push_back(
              ColumnGroup{k, s, t, attempt.spb_of_chain[k - 1],
                          attempt.pin[k - 1], sols[k - 1].residual});
          ++group;
        }
      }

      prec.min_rank_sigma = 1.0;
      for (int i = 1; i <= 3; ++i) {
        double sig = mode.is_acs() ? numeric::sigma_min_rel(prec.V(i))
                                   : numeric::sigma_min_rel(prec.Vc(i));
        prec.min_rank_sigma = std::min(prec.min_rank_sigma, sig);
      }
      if (prec.min_rank_sigma < tol::kRank) {
        diagnostics.push_back(
            {{"stage", "rank"}, {"sigma_min_rel", prec.min_rank_sigma}});
        continue;
      }

      if (mode.is_acs() && !acs_signal_space_ok(sc, prec)) {
        diagnostics.push_back({{"stage", "signal_space"},
                               {"assignment", attempt.spb_of_chain},
                               {"pins", attempt.pin}});
        continue;
      }
      return prec;
    }
  }

  StructuredError err("assembly_exhausted",
                      "no chain-to-SPB assignment produced valid precoders");
  err.with("p", p).with("attempts", diagnostics);
  throw err;
}

}  // namespace iasim
