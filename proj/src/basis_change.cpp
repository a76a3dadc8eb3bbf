#include "iasim/basis_change.hpp"

#include <cmath>

#include "iasim/numeric.hpp"

namespace iasim {

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> ZeroPattern::mask() const {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m(p + 1, 2 * p);
  for (int q = 1; q <= p + 1; ++q) {
    for (int r = 1; r <= p; ++r) {
      m(q - 1, r - 1) = allowed_left(q, r);
      m(q - 1, p + r - 1) = allowed_right(q, r);
    }
  }
  return m;
}

ZeroPattern target_pattern(int p) {
  if (p < 2) {
    throw StructuredError("bad_parameter", "zero pattern needs p >= 2")
        .with("p", p);
  }
  return ZeroPattern{p};
}

namespace {

// Unit vector of null(b^H) with maximal component along a: the normalized
// projection of a onto the orthogonal complement of b.
CVec null_of_with_max_overlap(const CVec& b, const CVec& a) {
  CVec x = a;
  double bn = b.squaredNorm();
  if (bn > 0.0) x -= b * (b.dot(a) / bn);
  double xn = x.norm();
  if (xn <= 1e-14 * a.norm()) {
    throw StructuredError("cb_degenerate",
                          "transmit basis column collapsed to zero");
  }
  return numeric::phase_fix((x / xn).eval());
}

double residual_at_forbidden(const ZeroPattern& pat, const CMat& left,
                             const CMat& right) {
  double worst = 0.0;
  double scale_l = left.norm();
  double scale_r = right.norm();
  for (int q = 1; q <= pat.p + 1; ++q) {
    for (int r = 1; r <= pat.p; ++r) {
      if (!pat.allowed_left(q, r)) {
        worst = std::max(worst, std::abs(left(q - 1, r - 1)) / scale_l);
      }
      if (!pat.allowed_right(q, r)) {
        worst = std::max(worst, std::abs(right(q - 1, r - 1)) / scale_r);
      }
    }
  }
  return worst;
}

}  // namespace

BasisChange build_cb(const ChannelDraw& draw) {
  const int p = draw.p;
  const ZeroPattern pat = target_pattern(p);
  BasisChange cb;
  cb.p = p;
  for (auto& m : cb.r) m = CMat::Zero(p + 1, p + 1);
  for (auto& m : cb.tmat) m = CMat::Zero(p, p);

  // Step 1: outer rows of each receive transformation.
  for (int j = 1; j <= 3; ++j) {
    int prev = wrap3(j - 1);
    int next = wrap3(j + 1);
    cb.r[j - 1].row(0) =
        numeric::phase_fix(numeric::left_null_row(draw.H(j, next)).eval());
    cb.r[j - 1].row(p) =
        numeric::phase_fix(numeric::left_null_row(draw.H(j, prev)).eval());
  }

  // Step 2: transmit transformations from the propagated row constraints.
  for (int i = 1; i <= 3; ++i) {
    int up = wrap3(i + 1);
    int down = wrap3(i - 1);
    CVec a = draw.H(up, i).adjoint() * cb.r[up - 1].row(0).adjoint();
    CVec b = draw.H(down, i).adjoint() * cb.r[down - 1].row(p).adjoint();

    CMat& t = cb.tmat[i - 1];
    if (p > 2) {
      CMat joint(2, p);
      joint.row(0) = a.adjoint();
      joint.row(1) = b.adjoint();
      CMat middle = numeric::null_space(joint);
      if (middle.cols() != p - 2) {
        throw StructuredError("cb_degenerate",
                              "joint null space has unexpected dimension")
            .with("transmitter", i)
            .with("dimension", static_cast<int>(middle.cols()));
      }
      t.block(0, 1, p, p - 2) = middle;
    }
    t.col(0) = null_of_with_max_overlap(b, a);
    t.col(p - 1) = null_of_with_max_overlap(a, b);
  }

  // Step 3: middle rows of each receive transformation null the forbidden
  // transformed columns for their row of the pattern.
  for (int j = 1; j <= 3; ++j) {
    int prev = wrap3(j - 1);
    int next = wrap3(j + 1);
    CMat gl = draw.H(j, prev) * cb.tmat[prev - 1];
    CMat gr = draw.H(j, next) * cb.tmat[next - 1];
    for (int q = 2; q <= p; ++q) {
      CMat cols(p + 1, p);
      cols.leftCols(q - 1) = gl.leftCols(q - 1);
      cols.rightCols(p - q + 1) = gr.rightCols(p - q + 1);
      cb.r[j - 1].row(q - 1) =
          numeric::phase_fix(numeric::left_null_row(cols).eval());
    }
  }

  for (int j = 1; j <= 3; ++j) {
    if (numeric::sigma_min_rel(cb.r[j - 1]) < tol::kInvert) {
      throw StructuredError("cb_singular", "receive transformation singular")
          .with("receiver", j)
          .with("sigma_min_rel", numeric::sigma_min_rel(cb.r[j - 1]));
    }
    if (numeric::sigma_min_rel(cb.tmat[j - 1]) < tol::kInvert) {
      throw StructuredError("cb_singular", "transmit transformation singular")
          .with("transmitter", j)
          .with("sigma_min_rel", numeric::sigma_min_rel(cb.tmat[j - 1]));
    }
  }

  cb.pattern_residual = 0.0;
  for (int j = 1; j <= 3; ++j) {
    int prev = wrap3(j - 1);
    int next = wrap3(j + 1);
    CMat gl = cb.R(j) * draw.H(j, prev) * cb.Tmat(prev);
    CMat gr = cb.R(j) * draw.H(j, next) * cb.Tmat(next);
    double res = residual_at_forbidden(pat, gl, gr);
    if (res > tol::kClamp) {
      throw StructuredError("cb_pattern", "zero pattern residual too large")
          .with("receiver", j)
          .with("residual", res);
    }
    cb.pattern_residual = std::max(cb.pattern_residual, res);
  }
  return cb;
}

StructuredChannels apply_cb(const ChannelDraw& draw, const BasisChange& cb,
                            ExtensionMode mode) {
  const int p = draw.p;
  const ZeroPattern pat = target_pattern(p);
  StructuredChannels sc;
  sc.p = p;
  sc.mode = mode;
  for (int j = 1; j <= 3; ++j) {
    for (int i = 1; i <= 3; ++i) {
      CMat g = cb.R(j) * draw.H(j, i) * cb.Tmat(i);
      if (i != j) {
        bool left = (i == wrap3(j - 1));
        double scale = g.norm();
        for (int q = 1; q <= p + 1; ++q) {
          for (int r = 1; r <= p; ++r) {
            bool ok = left ? pat.allowed_left(q, r) : pat.allowed_right(q, r);
            if (ok) continue;
            if (std::abs(g(q - 1, r - 1)) > tol::kClamp * scale) {
              throw StructuredError("cb_inconsistent",
                                    "forbidden entry above clamp threshold")
                  .with("receiver", j)
                  .with("transmitter", i)
                  .with("magnitude", std::abs(g(q - 1, r - 1)) / scale);
            }
            g(q - 1, r - 1) = cplx(0.0, 0.0);
          }
        }
      }
      sc.g[3 * (j - 1) + (i - 1)] = std::move(g);
    }
  }
  for (int idx = 0; idx < 9; ++idx) {
    if (mode.is_acs()) {
      sc.lift_r[idx] = lift_matrix_acs(sc.g[idx], mode.extensions);
    } else {
      sc.lift_c[idx] = lift_matrix_time(sc.g[idx], mode.extensions);
    }
  }
  return sc;
}

}  // namespace iasim
