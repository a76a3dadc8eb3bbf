#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <utility>

#include "iasim/basis_change.hpp"
#include "iasim/numeric.hpp"
#include "iasim/rng.hpp"

using namespace iasim;

namespace {

std::set<std::pair<int, int>> allowed_left_set(const ZeroPattern& pat) {
  std::set<std::pair<int, int>> s;
  for (int q = 1; q <= pat.p + 1; ++q)
    for (int r = 1; r <= pat.p; ++r)
      if (pat.allowed_left(q, r)) s.insert({q, r});
  return s;
}

std::set<std::pair<int, int>> allowed_right_set(const ZeroPattern& pat) {
  std::set<std::pair<int, int>> s;
  for (int q = 1; q <= pat.p + 1; ++q)
    for (int r = 1; r <= pat.p; ++r)
      if (pat.allowed_right(q, r)) s.insert({q, r});
  return s;
}

}  // namespace

TEST_CASE("target pattern frozen instances") {
  ZeroPattern p2 = target_pattern(2);
  CHECK(allowed_left_set(p2) ==
        std::set<std::pair<int, int>>{{1, 1}, {2, 2}});
  CHECK(allowed_right_set(p2) ==
        std::set<std::pair<int, int>>{{2, 1}, {3, 2}});

  ZeroPattern p3 = target_pattern(3);
  CHECK(allowed_left_set(p3) ==
        std::set<std::pair<int, int>>{{1, 1}, {2, 2}, {2, 3}, {3, 3}});
  CHECK(allowed_right_set(p3) ==
        std::set<std::pair<int, int>>{{2, 1}, {3, 1}, {3, 2}, {4, 3}});

  ZeroPattern p4 = target_pattern(4);
  CHECK(p4.allowed_left(3, 3));
  CHECK(p4.allowed_left(3, 4));
  CHECK_FALSE(p4.allowed_left(3, 2));
  CHECK(p4.allowed_right(3, 1));
  CHECK(p4.allowed_right(3, 2));
  CHECK_FALSE(p4.allowed_right(3, 3));

  CHECK(p3.mask().rows() == 4);
  CHECK(p3.mask().cols() == 6);
  CHECK_THROWS_AS(target_pattern(1), StructuredError);
}

TEST_CASE("build_cb achieves the pattern with invertible transforms") {
  for (int p = 2; p <= 6; ++p) {
    for (int trial = 0; trial < 10; ++trial) {
      ChannelDraw draw = draw_channels(p, 1000 + 17 * p + trial);
      BasisChange cb = build_cb(draw);
      CHECK(cb.pattern_residual <= 1e-10);
      for (int j = 1; j <= 3; ++j) {
        CHECK(numeric::sigma_min_rel(cb.R(j)) >= 1e-8);
        CHECK(numeric::sigma_min_rel(cb.Tmat(j)) >= 1e-8);
      }
    }
  }
}

TEST_CASE("p=3 achieved mask equals the target banded display") {
  ChannelDraw draw = draw_channels(3, 42);
  BasisChange cb = build_cb(draw);
  StructuredChannels sc = apply_cb(draw, cb, ExtensionMode::acs(3));
  ZeroPattern pat = target_pattern(3);
  for (int j = 1; j <= 3; ++j) {
    const CMat& gl = sc.G(j, wrap3(j - 1));
    const CMat& gr = sc.G(j, wrap3(j + 1));
    for (int q = 1; q <= 4; ++q) {
      for (int r = 1; r <= 3; ++r) {
        if (pat.allowed_left(q, r)) {
          CHECK(std::abs(gl(q - 1, r - 1)) > 1e-8 * gl.norm());
        } else {
          CHECK(gl(q - 1, r - 1) == cplx(0.0, 0.0));
        }
        if (pat.allowed_right(q, r)) {
          CHECK(std::abs(gr(q - 1, r - 1)) > 1e-8 * gr.norm());
        } else {
          CHECK(gr(q - 1, r - 1) == cplx(0.0, 0.0));
        }
      }
    }
  }
}

TEST_CASE("direct channels stay dense") {
  ChannelDraw draw = draw_channels(4, 5);
  BasisChange cb = build_cb(draw);
  StructuredChannels sc = apply_cb(draw, cb, ExtensionMode::acs(4));
  for (int j = 1; j <= 3; ++j) {
    const CMat& g = sc.G(j, j);
    for (int q = 0; q < g.rows(); ++q) {
      for (int r = 0; r < g.cols(); ++r) {
        CHECK(std::abs(g(q, r)) > 1e-8 * g.norm());
      }
    }
  }
}

TEST_CASE("apply_cb lifted shapes and block counts for p=2") {
  ChannelDraw draw = draw_channels(2, 77);
  BasisChange cb = build_cb(draw);
  StructuredChannels sc = apply_cb(draw, cb, ExtensionMode::acs(2));

  const Mat& cross = sc.L(2, 1);  // receiver 2's "j-1" channel
  CHECK(cross.rows() == 30);
  CHECK(cross.cols() == 20);
  int nonzero_blocks = 0;
  for (int q = 0; q < 3; ++q) {
    for (int r = 0; r < 2; ++r) {
      if (cross.block(10 * q, 10 * r, 10, 10).norm() > 0.0) ++nonzero_blocks;
    }
  }
  CHECK(nonzero_blocks == 2);
}

TEST_CASE("apply_cb is deterministic and clamping is stable") {
  ChannelDraw draw = draw_channels(3, 8);
  BasisChange cb = build_cb(draw);
  StructuredChannels a = apply_cb(draw, cb, ExtensionMode::acs(3));
  StructuredChannels b = apply_cb(draw, cb, ExtensionMode::acs(3));
  for (int j = 1; j <= 3; ++j) {
    for (int i = 1; i <= 3; ++i) {
      CHECK((a.G(j, i).array() == b.G(j, i).array()).all());
    }
  }
}

TEST_CASE("time-only mode forces the same pattern at T x T granularity") {
  ChannelDraw draw = draw_channels(2, 31);
  BasisChange cb = build_cb(draw);
  StructuredChannels sc = apply_cb(draw, cb, ExtensionMode::time_only(2));
  const int T = 5;
  const CMat& cross = sc.Lc(2, 1);
  CHECK(cross.rows() == 15);
  CHECK(cross.cols() == 10);
  ZeroPattern pat = target_pattern(2);
  for (int q = 1; q <= 3; ++q) {
    for (int r = 1; r <= 2; ++r) {
      double blk = cross.block(T * (q - 1), T * (r - 1), T, T).norm();
      if (pat.allowed_left(q, r)) {
        CHECK(blk > 0.0);
      } else {
        CHECK(blk == 0.0);
      }
    }
  }
}

TEST_CASE("the lift commutes with the change of basis") {
  ChannelDraw draw = draw_channels(3, 12);
  BasisChange cb = build_cb(draw);
  ExtensionMode mode = ExtensionMode::acs(3);
  StructuredChannels sc = apply_cb(draw, cb, mode);
  const int T = mode.extensions;
  for (int j = 1; j <= 3; ++j) {
    for (int i = 1; i <= 3; ++i) {
      Mat product = lift_matrix_acs(cb.R(j), T) *
                    lift_matrix_acs(draw.H(j, i), T) *
                    lift_matrix_acs(cb.Tmat(i), T);
      // Differences come only from the clamp, so they stay below 1e-10
      // relative to the channel scale.
      CHECK((product - sc.L(j, i)).norm() <= 1e-10 * product.norm());
    }
  }
}
