#include "iasim/detection.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "iasim/numeric.hpp"

namespace iasim {

namespace {

template <class MatT>
MatT interference_columns(int j, const std::array<MatT, 3>& v,
                          const StructuredChannels& sc) {
  int prev = wrap3(j - 1);
  int next = wrap3(j + 1);
  const auto& lp = [&]() -> const MatT& {
    if constexpr (std::is_same_v<MatT, Mat>) return sc.L(j, prev);
    else return sc.Lc(j, prev);
  }();
  const auto& ln = [&]() -> const MatT& {
    if constexpr (std::is_same_v<MatT, Mat>) return sc.L(j, next);
    else return sc.Lc(j, next);
  }();
  MatT k(lp.rows(), v[prev - 1].cols() + v[next - 1].cols());
  k << lp * v[prev - 1], ln * v[next - 1];
  return k;
}

}  // namespace

Mat interference_basis(int j, const PrecoderSet& prec,
                       const StructuredChannels& sc) {
  return numeric::colspace_split(interference_columns<Mat>(j, prec.v_r, sc))
      .first;
}

CMat interference_basis_c(int j, const PrecoderSet& prec,
                          const StructuredChannels& sc) {
  return numeric::colspace_split(interference_columns<CMat>(j, prec.v_c, sc))
      .first;
}

ZfFilters zf_filters(const PrecoderSet& prec, const StructuredChannels& sc) {
  const int p = sc.p;
  ZfFilters filt;
  filt.p = p;
  filt.mode = sc.mode;

  for (int j = 1; j <= 3; ++j) {
    if (sc.mode.is_acs()) {
      Mat k = interference_columns<Mat>(j, prec.v_r, sc);
      auto [basis, comp] = numeric::colspace_split(k);
      filt.interference_rank[j - 1] = static_cast<int>(basis.cols());
      if (comp.cols() < 2 * p * (p + 1)) {
        throw StructuredError("alignment_broken",
                              "interference complement smaller than the "
                              "desired signal dimension")
            .with("receiver", j)
            .with("complement", static_cast<int>(comp.cols()))
            .with("needed", 2 * p * (p + 1));
      }
      filt.w_r[j - 1] = comp.adjoint();
      double worst = 0.0;
      for (int i = 1; i <= 3; ++i) {
        if (i == j) continue;
        Mat hv = sc.L(j, i) * prec.V(i);
        worst = std::max(worst,
                         (filt.w_r[j - 1] * hv).norm() / (hv.norm() + 1e-300));
      }
      filt.leakage[j - 1] = worst;
    } else {
      CMat k = interference_columns<CMat>(j, prec.v_c, sc);
      auto [basis, comp] = numeric::colspace_split(k);
      filt.interference_rank[j - 1] = static_cast<int>(basis.cols());
      filt.w_c[j - 1] = comp.adjoint();
      double worst = 0.0;
      for (int i = 1; i <= 3; ++i) {
        if (i == j) continue;
        CMat hv = sc.Lc(j, i) * prec.Vc(i);
        worst = std::max(worst,
                         (filt.w_c[j - 1] * hv).norm() / (hv.norm() + 1e-300));
      }
      filt.leakage[j - 1] = worst;
    }
  }
  return filt;
}

EffectiveFilters effective_filters(const PrecoderSet& prec,
                                   const ZfFilters& filt,
                                   const BasisChange& cb) {
  EffectiveFilters eff;
  eff.p = prec.p;
  eff.mode = prec.mode;
  const int T = prec.mode.extensions;
  for (int n = 1; n <= 3; ++n) {
    if (prec.mode.is_acs()) {
      Mat v = lift_matrix_acs(cb.Tmat(n), T) * prec.V(n);
      for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c) /= v.col(c).norm();
      eff.v_r[n - 1] = std::move(v);
      eff.w_r[n - 1] = filt.W(n) * lift_matrix_acs(cb.R(n), T);
    } else {
      CMat v = lift_matrix_time(cb.Tmat(n), T) * prec.Vc(n);
      for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c) /= v.col(c).norm();
      eff.v_c[n - 1] = std::move(v);
      eff.w_c[n - 1] = filt.Wc(n) * lift_matrix_time(cb.R(n), T);
    }
  }
  return eff;
}

namespace {

template <class MatT>
Vec whitened_singular_values(const MatT& w, const MatT& m_link) {
  // Q = W W*; the whitened link is L^-1 M for Q = L L*.
  MatT q = w * w.adjoint();
  Eigen::LLT<MatT> llt(q);
  if (llt.info() != Eigen::Success) {
    throw StructuredError("noise_singular",
                          "filtered noise covariance is not positive definite");
  }
  MatT white = llt.matrixL().solve(m_link);
  return numeric::singular_values(white);
}

}  // namespace

RateModel rate_model(const EffectiveFilters& eff, const ChannelDraw& draw) {
  RateModel model;
  model.mode = eff.mode;
  const int T = eff.mode.extensions;
  for (int j = 1; j <= 3; ++j) {
    if (eff.mode.is_acs()) {
      Mat m = eff.Weff(j) * lift_matrix_acs(draw.H(j, j), T) * eff.Veff(j);
      model.sv[j - 1] = whitened_singular_values<Mat>(eff.Weff(j), m);
    } else {
      CMat m = eff.Weffc(j) * lift_matrix_time(draw.H(j, j), T) * eff.Veffc(j);
      model.sv[j - 1] = whitened_singular_values<CMat>(eff.Weffc(j), m);
    }
  }
  return model;
}

double RateModel::rate(int j, double snr_db) const {
  const double rho = std::pow(10.0, snr_db / 10.0);
  const double prefactor =
      mode.is_acs() ? 1.0 / (2.0 * mode.extensions) : 1.0 / mode.extensions;
  double bits = 0.0;
  const Vec& s = sv[j - 1];
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    bits += std::log2(1.0 + rho * s(i) * s(i));
  }
  return prefactor * bits;
}

double RateModel::sum_rate(double snr_db) const {
  return rate(1, snr_db) + rate(2, snr_db) + rate(3, snr_db);
}

double user_rate(int j, const EffectiveFilters& eff, const ChannelDraw& draw,
                 double snr_db) {
  return rate_model(eff, draw).rate(j, snr_db);
}

double raw_leakage(const EffectiveFilters& eff, const ChannelDraw& draw) {
  const int T = eff.mode.extensions;
  double worst = 0.0;
  for (int j = 1; j <= 3; ++j) {
    for (int i = 1; i <= 3; ++i) {
      if (i == j) continue;
      if (eff.mode.is_acs()) {
        Mat hv = lift_matrix_acs(draw.H(j, i), T) * eff.Veff(i);
        worst = std::max(worst,
                         (eff.Weff(j) * hv).norm() / (hv.norm() + 1e-300));
      } else {
        CMat hv = lift_matrix_time(draw.H(j, i), T) * eff.Veffc(i);
        worst = std::max(worst,
                         (eff.Weffc(j) * hv).norm() / (hv.norm() + 1e-300));
      }
    }
  }
  return worst;
}

}  // namespace iasim
