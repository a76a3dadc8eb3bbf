#pragma once

#include <array>

#include "iasim/alignment.hpp"
#include "iasim/basis_change.hpp"
#include "iasim/channel.hpp"
#include "iasim/types.hpp"

namespace iasim {

/// Orthonormal basis of the interference column space
/// [H_{j,j-1}V_{j-1}, H_{j,j+1}V_{j+1}] at receiver j (rank-revealing QR,
/// relative threshold 1e-8).
Mat interference_basis(int j, const PrecoderSet& prec,
                       const StructuredChannels& sc);
CMat interference_basis_c(int j, const PrecoderSet& prec,
                          const StructuredChannels& sc);

/// Zero-forcing receive filters: rows of W(j) span the orthogonal complement
/// of the interference space, so all received interference is nulled.
struct ZfFilters {
  int p = 0;
  ExtensionMode mode;
  std::array<Mat, 3> w_r;
  std::array<CMat, 3> w_c;
  std::array<int, 3> interference_rank{};
  std::array<double, 3> leakage{};  // worst relative leakage per receiver

  const Mat& W(int j) const { return w_r[j - 1]; }
  const CMat& Wc(int j) const { return w_c[j - 1]; }
};

ZfFilters zf_filters(const PrecoderSet& prec, const StructuredChannels& sc);

/// Filters mapped back to the original channel coordinates, where noise is
/// white: V_eff = lift(Tmat).V with unit columns, W_eff = W.lift(R).
struct EffectiveFilters {
  int p = 0;
  ExtensionMode mode;
  std::array<Mat, 3> v_r, w_r;
  std::array<CMat, 3> v_c, w_c;

  const Mat& Veff(int i) const { return v_r[i - 1]; }
  const Mat& Weff(int j) const { return w_r[j - 1]; }
  const CMat& Veffc(int i) const { return v_c[i - 1]; }
  const CMat& Weffc(int j) const { return w_c[j - 1]; }
};

EffectiveFilters effective_filters(const PrecoderSet& prec,
                                   const ZfFilters& filt,
                                   const BasisChange& cb);

/// SNR-independent description of the filtered direct links: the singular
/// values of the noise-whitened W_eff.lift(H).V_eff per receiver. Rates at
/// any SNR are sums of log terms over these values.
struct RateModel {
  ExtensionMode mode;
  std::array<Vec, 3> sv;

  double rate(int j, double snr_db) const;
  double sum_rate(double snr_db) const;
};

RateModel rate_model(const EffectiveFilters& eff, const ChannelDraw& draw);

/// Per-user rate in bits per complex channel use at the given per-stream SNR:
/// log2 det(I + rho Q^-1 M M*) scaled by 1/(2T) (ACS) or 1/T (time-only).
double user_rate(int j, const EffectiveFilters& eff, const ChannelDraw& draw,
                 double snr_db);

/// Worst relative residual interference across receivers, measured against
/// the raw channels: max over i != j of |W_eff lift(H) V_eff| / |lift(H) V_eff|.
double raw_leakage(const EffectiveFilters& eff, const ChannelDraw& draw);

}  // namespace iasim
