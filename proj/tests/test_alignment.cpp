#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "iasim/alignment.hpp"
#include "iasim/numeric.hpp"
#include "iasim/rng.hpp"

using namespace iasim;

namespace {

StructuredChannels structured(int p, uint64_t seed, ExtensionMode mode) {
  ChannelDraw draw = draw_channels(p, seed);
  return apply_cb(draw, build_cb(draw), mode);
}

std::set<int> zeroed_set(const BlockSystem& sys) {
  std::set<int> s;
  for (int c = 0; c < sys.block_cols(); ++c) {
    if (sys.zeroed[c]) s.insert(c + 1);  // 1-based
  }
  return s;
}

// Least-squares fit of b ~ lift(theta) * a. The two real parameters come out
// in closed form because <a, Ja> = 0 for the quarter-turn operator J.
double spb_fit_residual(const Mat& b, const Mat& a) {
  Mat ja(a.rows(), a.cols());
  for (Eigen::Index t = 0; 2 * t < a.rows(); ++t) {
    ja.row(2 * t) = -a.row(2 * t + 1);
    ja.row(2 * t + 1) = a.row(2 * t);
  }
  double na = a.squaredNorm();
  double re = (a.array() * b.array()).sum() / na;
  double im = (ja.array() * b.array()).sum() / na;
  return (b - re * a - im * ja).norm() / b.norm();
}

}  // namespace

TEST_CASE("chain_spec index sequences") {
  ChainSpec c21 = chain_spec(2, 1);
  CHECK(c21.users == std::vector<int>{1, 3});
  CHECK(c21.receivers == std::vector<int>{2});

  ChainSpec c31 = chain_spec(3, 1);
  CHECK(c31.users == std::vector<int>{1, 3, 2});
  CHECK(c31.receivers == std::vector<int>{2, 1});

  for (int k = 1; k <= 3; ++k) {
    ChainSpec c = chain_spec(3, k);
    for (int i = 1; i <= 3; ++i) CHECK(c.sub_blocks(i) == 1);
  }

  ChainSpec c41 = chain_spec(4, 1);
  CHECK(c41.users == std::vector<int>{1, 3, 2, 1});
  CHECK(c41.occurrence == std::vector<int>{1, 1, 1, 2});
  CHECK(c41.sub_blocks(1) == 2);

  for (int p = 2; p <= 9; ++p) {
    for (int k = 1; k <= 3; ++k) {
      ChainSpec c = chain_spec(p, k);
      int total = c.sub_blocks(1) + c.sub_blocks(2) + c.sub_blocks(3);
      CHECK(total == p);
      // sub_blocks matches the actual appearance count
      for (int i = 1; i <= 3; ++i) {
        int count = static_cast<int>(
            std::count(c.users.begin(), c.users.end(), i));
        CHECK(count == c.sub_blocks(i));
      }
    }
  }
}

TEST_CASE("block system support matches the p=3 chain-1 layout") {
  StructuredChannels sc = structured(3, 4, ExtensionMode::acs(3));
  BlockSystem sys = build_block_system(chain_spec(3, 1), sc);
  CHECK(sys.block_rows() == 8);
  CHECK(sys.block_cols() == 9);

  // Frozen support rows (0-based column sets).
  const std::vector<std::set<int>> expect = {
      {0}, {1, 2, 3}, {2, 3, 4}, {5}, {3}, {4, 5, 6}, {5, 6, 7}, {8}};
  for (int r = 0; r < 8; ++r) {
    std::set<int> got;
    for (int c = 0; c < 9; ++c) {
      if (sys.support(r, c)) got.insert(c);
    }
    CHECK(got == expect[r]);
  }

  CHECK(sys.labels[0].user == 1);
  CHECK(sys.labels[0].antenna_row == 1);
  CHECK(sys.labels[3].user == 3);
  CHECK(sys.labels[8].user == 2);
  CHECK(sys.labels[8].antenna_row == 3);

  Mat lifted = sys.e_scalar_acs();
  CHECK(lifted.rows() == 8 * 14);
  CHECK(lifted.cols() == 9 * 14);
}

TEST_CASE("block system support and signs for p=2 chain 1") {
  StructuredChannels sc = structured(2, 4, ExtensionMode::acs(2));
  BlockSystem sys = build_block_system(chain_spec(2, 1), sc);
  CHECK(sys.block_rows() == 3);
  CHECK(sys.block_cols() == 4);
  const std::vector<std::set<int>> expect = {{0}, {1, 2}, {3}};
  for (int r = 0; r < 3; ++r) {
    std::set<int> got;
    for (int c = 0; c < 4; ++c) {
      if (sys.support(r, c)) got.insert(c);
    }
    CHECK(got == expect[r]);
  }
  // + sign on the sub-block t entry, - on the sub-block t+1 entry.
  CHECK(sys.e(1, 1) == sc.G(2, 1)(1, 1));
  CHECK(sys.e(1, 2) == -sc.G(2, 3)(1, 0));
}

TEST_CASE("zero propagation on the p=3 chain system zeroes blocks 1,4,6,9") {
  StructuredChannels sc = structured(3, 4, ExtensionMode::acs(3));
  BlockSystem reduced = zero_propagation(build_block_system(chain_spec(3, 1), sc));
  CHECK(zeroed_set(reduced) == std::set<int>{1, 4, 6, 9});
}

TEST_CASE("zero propagation toy fixed points") {
  // BlockSystem sized for p=2 (3 rows x 4 cols) with an active 2x2 corner.
  BlockSystem toy;
  toy.chain = chain_spec(2, 1);
  toy.mode = ExtensionMode::acs(2);
  toy.p = 2;
  toy.e = CMat::Zero(3, 4);
  toy.support.setConstant(3, 4, false);
  toy.zeroed.assign(4, false);

  // Support [[1,0],[1,1]]: both blocks collapse in two passes.
  toy.e(0, 0) = toy.e(1, 0) = toy.e(1, 1) = cplx(1.0, 0.0);
  toy.support(0, 0) = toy.support(1, 0) = toy.support(1, 1) = true;
  BlockSystem done = zero_propagation(toy);
  CHECK(done.zeroed[0]);
  CHECK(done.zeroed[1]);
  CHECK_FALSE(done.zeroed[2]);
  CHECK(done.zp_steps.size() == 2);

  // No singleton rows: output equals input.
  BlockSystem stable = toy;
  stable.support.setConstant(3, 4, false);
  stable.support(0, 0) = stable.support(0, 1) = true;
  stable.support(1, 0) = stable.support(1, 1) = true;
  BlockSystem same = zero_propagation(stable);
  CHECK(same.zeroed == std::vector<bool>(4, false));
  CHECK(same.zp_steps.empty());
}

TEST_CASE("zero propagation result is independent of the scan order") {
  std::mt19937 shuffler(17);
  for (int p : {3, 4, 5}) {
    StructuredChannels sc = structured(p, 21 + p, ExtensionMode::acs(p));
    for (int k = 1; k <= 3; ++k) {
      BlockSystem sys = build_block_system(chain_spec(p, k), sc);
      std::set<int> reference = zeroed_set(zero_propagation(sys));
      std::vector<int> order(sys.block_rows());
      std::iota(order.begin(), order.end(), 0);
      for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(order.begin(), order.end(), shuffler);
        CHECK(zeroed_set(zero_propagation(sys, order)) == reference);
      }
    }
  }
}

TEST_CASE("spb_design follows the column grouping") {
  RandomStream rs(5, 9);
  Mat b = numeric::random_orthogonal(10, rs);
  SupportBlocks spb = spb_design(2, b);

  CHECK(spb.sets.z == std::vector<int>{1, 2});
  CHECK(spb.sets.x1 == std::vector<int>{3, 4, 5});
  CHECK(spb.sets.x2 == std::vector<int>{6});
  CHECK(spb.sets.y1 == std::vector<int>{7, 8, 9});
  CHECK(spb.sets.y2 == std::vector<int>{10});

  // A1 = B columns 1..6, A2 = {1,2,7..10}, A3 = {3,4,5,7,8,9}.
  CHECK((spb.A(1) - b.leftCols(6)).norm() == 0.0);
  Mat a2(10, 6);
  a2 << b.col(0), b.col(1), b.col(6), b.col(7), b.col(8), b.col(9);
  CHECK((spb.A(2) - a2).norm() == 0.0);
  Mat a3(10, 6);
  a3 << b.col(2), b.col(3), b.col(4), b.col(6), b.col(7), b.col(8);
  CHECK((spb.A(3) - a3).norm() == 0.0);

  for (int i = 1; i <= 3; ++i) {
    CHECK(spb.A(i).cols() == 6);
    CHECK((spb.A(i).transpose() * spb.A(i) - Mat::Identity(6, 6)).norm() <=
          1e-12);
  }

  // Overlap dimensions: |Z|, |X1|, |Y1|.
  CHECK(numeric::rank_info((spb.A(1).transpose() * spb.A(2)).eval()).rank == 2);
  CHECK(numeric::rank_info((spb.A(1).transpose() * spb.A(3)).eval()).rank == 3);
  CHECK(numeric::rank_info((spb.A(2).transpose() * spb.A(3)).eval()).rank == 3);

  CHECK_THROWS_AS(spb_design(2, Mat(Mat::Ones(10, 10))), StructuredError);
  CHECK_THROWS_AS(spb_design(3, b), StructuredError);  // wrong dimension
}

TEST_CASE("spb column counts for general p") {
  for (int p : {3, 5, 6}) {
    SupportBlocks spb = default_spb(p, ExtensionMode::acs(p), 3);
    for (int i = 1; i <= 3; ++i) {
      CHECK(spb.A(i).rows() == 2 * (2 * p + 1));
      CHECK(spb.A(i).cols() == 2 * (p + 1));
    }
    SupportBlocks ts = default_spb(p, ExtensionMode::time_only(p), 3);
    for (int i = 1; i <= 3; ++i) {
      CHECK(ts.Ac(i).rows() == 2 * p + 1);
      CHECK(ts.Ac(i).cols() == p + 1);
    }
  }
}

TEST_CASE("solve_chain reproduces the closed-form p=2 coefficient") {
  StructuredChannels sc = structured(2, 33, ExtensionMode::acs(2));
  SupportBlocks spb = default_spb(2, sc.mode, 33);
  BlockSystem reduced =
      zero_propagation(build_block_system(chain_spec(2, 1), sc));

  // Default pin: user 1's sub-block, antenna row 2 (block column 1).
  auto blocks = solve_chain(reduced, 1, spb.A(1));
  CHECK((blocks.at(1) - spb.A(1)).norm() <= 1e-8 * spb.A(1).norm());

  cplx theta = sc.G(2, 1)(1, 1) / sc.G(2, 3)(1, 0);
  Mat expect = lift_scalar_acs(theta, 5) * spb.A(1);
  CHECK((blocks.at(2) - expect).norm() <= 1e-8 * expect.norm());

  CHECK(blocks.at(0).norm() == 0.0);
  CHECK(blocks.at(3).norm() == 0.0);

  CHECK_THROWS_AS(solve_chain(reduced, 0, spb.A(1)), StructuredError);
}

TEST_CASE("solve_chain equals the literal stacked real least squares") {
  for (int p : {2, 3}) {
    StructuredChannels sc = structured(p, 55 + p, ExtensionMode::acs(p));
    SupportBlocks spb = default_spb(p, sc.mode, 55 + p);
    const int bd = sc.mode.block_dim();
    for (int k = 1; k <= 3; ++k) {
      BlockSystem reduced =
          zero_propagation(build_block_system(chain_spec(p, k), sc));
      int pin = -1;
      for (int r = p; r >= 1; --r) {
        if (!reduced.zeroed[r - 1]) {
          pin = r - 1;
          break;
        }
      }
      auto blocks = solve_chain(reduced, pin, spb.A(k));

      // Oracle: assemble the lifted real system over non-zeroed columns and
      // solve {E x = 0, x_pin = a} per column by minimum-norm least squares.
      std::vector<int> cols;
      for (int c = 0; c < reduced.block_cols(); ++c) {
        if (!reduced.zeroed[c]) cols.push_back(c);
      }
      Mat e = reduced.e_scalar_acs();
      Mat stacked(e.rows() + bd, static_cast<int>(cols.size()) * bd);
      for (size_t ci = 0; ci < cols.size(); ++ci) {
        stacked.block(0, ci * bd, e.rows(), bd) =
            e.middleCols(cols[ci] * bd, bd);
      }
      stacked.bottomRows(bd).setZero();
      int pin_ci = static_cast<int>(
          std::find(cols.begin(), cols.end(), pin) - cols.begin());
      stacked.block(e.rows(), pin_ci * bd, bd, bd) = Mat::Identity(bd, bd);

      Mat rhs = Mat::Zero(stacked.rows(), spb.A(k).cols());
      rhs.bottomRows(bd) = spb.A(k);
      Mat x = numeric::min_norm_solve(stacked, rhs);
      CHECK((stacked * x - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));

      for (size_t ci = 0; ci < cols.size(); ++ci) {
        Mat oracle_block = x.middleRows(ci * bd, bd);
        CHECK((blocks.at(cols[ci]) - oracle_block).norm() <=
              1e-8 * (1.0 + oracle_block.norm()));
      }
    }
  }
}

TEST_CASE("assembled precoders match the p=2 structure") {
  StructuredChannels sc = structured(2, 9, ExtensionMode::acs(2));
  SupportBlocks spb = default_spb(2, sc.mode, 9);
  PrecoderSet prec = assemble_precoders(sc, spb);

  for (int i = 1; i <= 3; ++i) {
    CHECK(prec.V(i).rows() == 20);
    CHECK(prec.V(i).cols() == 12);
    // Exactly one zero 10x6 antenna-row block per column group.
    for (int g = 0; g < 2; ++g) {
      int zero_blocks = 0;
      for (int r = 0; r < 2; ++r) {
        if (prec.V(i).block(10 * r, 6 * g, 10, 6).norm() == 0.0) ++zero_blocks;
      }
      CHECK(zero_blocks == 1);
    }
  }
}

TEST_CASE("assembled precoders match the p=3 sparsity layout") {
  StructuredChannels sc = structured(3, 9, ExtensionMode::acs(3));
  SupportBlocks spb = default_spb(3, sc.mode, 9);
  PrecoderSet prec = assemble_precoders(sc, spb);

  const std::set<std::pair<int, int>> zeros = {{1, 2}, {1, 3}, {3, 1}, {3, 2}};
  for (int i = 1; i <= 3; ++i) {
    CHECK(prec.V(i).rows() == 42);
    CHECK(prec.V(i).cols() == 24);
    for (int r = 1; r <= 3; ++r) {
      for (int g = 1; g <= 3; ++g) {
        double n = prec.V(i).block(14 * (r - 1), 8 * (g - 1), 14, 8).norm();
        if (zeros.count({r, g})) {
          CHECK(n == 0.0);
        } else {
          CHECK(n > 0.0);
        }
      }
    }
  }
}

TEST_CASE("every nonzero antenna-row block is a lifted multiple of its SPB") {
  for (int p : {2, 3, 4}) {
    StructuredChannels sc = structured(p, 61 + p, ExtensionMode::acs(p));
    SupportBlocks spb = default_spb(p, sc.mode, 61 + p);
    PrecoderSet prec = assemble_precoders(sc, spb);
    const int bd = sc.mode.block_dim();
    const int width = 2 * (p + 1);
    for (int i = 1; i <= 3; ++i) {
      for (size_t g = 0; g < prec.groups[i - 1].size(); ++g) {
        const ColumnGroup& cg = prec.groups[i - 1][g];
        for (int r = 0; r < p; ++r) {
          Mat block = prec.V(i).block(bd * r, width * static_cast<int>(g), bd,
                                      width);
          if (block.norm() == 0.0) continue;
          CHECK(spb_fit_residual(block, spb.A(cg.spb)) <= 1e-8);
        }
      }
    }
  }
}

TEST_CASE("alignment conditions and rank over random draws") {
  for (int p = 2; p <= 6; ++p) {
    for (int trial = 0; trial < 5; ++trial) {
      StructuredChannels sc =
          structured(p, 100 * p + trial, ExtensionMode::acs(p));
      SupportBlocks spb = default_spb(p, sc.mode, 100 * p + trial);
      PrecoderSet prec = assemble_precoders(sc, spb);
      CHECK(prec.max_align_residual <= 1e-8);
      CHECK(prec.min_rank_sigma >= 1e-8);
      for (int i = 1; i <= 3; ++i) {
        CHECK(numeric::rank_info(prec.V(i)).rank == 2 * p * (p + 1));
      }
    }
  }
}

TEST_CASE("matrix equalities imply the span alignment conditions") {
  const int p = 3;
  StructuredChannels sc = structured(p, 71, ExtensionMode::acs(p));
  SupportBlocks spb = default_spb(p, sc.mode, 71);
  PrecoderSet prec = assemble_precoders(sc, spb);
  const int bd = sc.mode.block_dim();
  const int width = 2 * (p + 1);

  auto sub_block = [&](int k, int t) -> Mat {
    // Locate the column group of chain k, position t in its owner's V.
    int user = wrap3(k + 1 - t);
    for (size_t g = 0; g < prec.groups[user - 1].size(); ++g) {
      const ColumnGroup& cg = prec.groups[user - 1][g];
      if (cg.chain == k && cg.sub_block == t) {
        return prec.V(user).middleCols(width * static_cast<int>(g), width);
      }
    }
    FAIL("sub-block not found");
    return Mat();
  };

  for (int k = 1; k <= 3; ++k) {
    ChainSpec spec = chain_spec(p, k);
    for (int t = 1; t <= p - 1; ++t) {
      int rj = spec.receivers[t - 1];
      Mat lhs = sc.L(rj, spec.users[t - 1]) * sub_block(k, t);
      Mat rhs = sc.L(rj, spec.users[t]) * sub_block(k, t + 1);
      // One-directional span containment at 1e-8.
      auto [basis, comp] = numeric::colspace_split(lhs);
      CHECK((rhs - basis * (basis.transpose() * rhs)).norm() <=
            1e-8 * rhs.norm());
      CHECK(lhs.rows() == bd * (p + 1));  // receiver space
    }
  }
}

TEST_CASE("time-only precoders assemble with complex dimensions") {
  const int p = 2;
  StructuredChannels sc = structured(p, 13, ExtensionMode::time_only(p));
  SupportBlocks spb = default_spb(p, sc.mode, 13);
  PrecoderSet prec = assemble_precoders(sc, spb);
  for (int i = 1; i <= 3; ++i) {
    CHECK(prec.Vc(i).rows() == 10);  // T p
    CHECK(prec.Vc(i).cols() == 6);   // p (p+1)
  }
  CHECK(prec.max_align_residual <= 1e-8);
}
