#include "iasim/channel.hpp"

#include <cmath>

#include "iasim/numeric.hpp"
#include "iasim/rng.hpp"

namespace iasim {

namespace {
constexpr uint64_t kChannelStreamTag = 0x6368616e6e656cull;  // "channel"
}

ChannelDraw draw_channels(int p, uint64_t seed) {
  if (p < 2) {
    throw StructuredError("bad_parameter", "antenna parameter p must be >= 2")
        .with("p", p);
  }
  ChannelDraw draw;
  draw.p = p;
  draw.seed = seed;
  for (int j = 1; j <= 3; ++j) {
    for (int i = 1; i <= 3; ++i) {
      int failures = 0;
      for (;;) {
        uint64_t tag = kChannelStreamTag ^ (8ull * j + i);
        RandomStream rs(seed, substream(tag, failures));
        CMat m(p + 1, p);
        for (int r = 0; r < p; ++r) {
          for (int q = 0; q < p + 1; ++q) m(q, r) = rs.next_cgaussian();
        }
        if (numeric::sigma_min_rel(m) >= tol::kDrawRank) {
          draw.H(j, i) = std::move(m);
          break;
        }
        if (++failures >= 100) {
          throw StructuredError("rng_degenerate",
                                "100 consecutive rank-deficient channel draws")
              .with("p", p)
              .with("seed", seed)
              .with("receiver", j)
              .with("transmitter", i);
        }
      }
    }
  }
  return draw;
}

Mat rotation(double phi) {
  Mat u(2, 2);
  double c = std::cos(phi);
  double s = std::sin(phi);
  u << c, -s, s, c;
  return u;
}

Mat lift_scalar_acs(cplx h, int T) {
  Mat out = Mat::Zero(2 * T, 2 * T);
  double mag = std::abs(h);
  if (mag == 0.0) return out;
  Mat u = mag * rotation(std::arg(h));
  for (int t = 0; t < T; ++t) out.block<2, 2>(2 * t, 2 * t) = u;
  return out;
}

CMat lift_scalar_time(cplx h, int T) {
  return h * CMat::Identity(T, T);
}

Mat lift_matrix_acs(const CMat& m, int T) {
  Mat out = Mat::Zero(m.rows() * 2 * T, m.cols() * 2 * T);
  for (Eigen::Index q = 0; q < m.rows(); ++q) {
    for (Eigen::Index r = 0; r < m.cols(); ++r) {
      cplx h = m(q, r);
      if (h == cplx(0.0, 0.0)) continue;
      double mag = std::abs(h);
      Mat u = mag * rotation(std::arg(h));
      for (int t = 0; t < T; ++t) {
        out.block<2, 2>(q * 2 * T + 2 * t, r * 2 * T + 2 * t) = u;
      }
    }
  }
  return out;
}

CMat lift_matrix_time(const CMat& m, int T) {
  CMat out = CMat::Zero(m.rows() * T, m.cols() * T);
  for (Eigen::Index q = 0; q < m.rows(); ++q) {
    for (Eigen::Index r = 0; r < m.cols(); ++r) {
      cplx h = m(q, r);
      if (h == cplx(0.0, 0.0)) continue;
      for (int t = 0; t < T; ++t) out(q * T + t, r * T + t) = h;
    }
  }
  return out;
}

}  // namespace iasim
