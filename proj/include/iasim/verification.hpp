#pragma once

#include <cstdint>
#include <vector>

#include "iasim/detection.hpp"
#include "iasim/types.hpp"

namespace iasim {

struct RankReport {
  int rank = 0;
  double sigma_min_rel = 0.0;
};

/// Singular-value rank at relative threshold 1e-8 plus sigma_min/sigma_max.
RankReport rank_report(const Mat& g);
RankReport rank_report(const CMat& g);

/// Signal space matrix at receiver j: desired columns H_{j,j}V_j next to an
/// orthonormal basis of the interference space. Square in ACS mode.
Mat build_ssm(int j, const PrecoderSet& prec, const StructuredChannels& sc);
CMat build_ssm_c(int j, const PrecoderSet& prec, const StructuredChannels& sc);

/// Achieved DoF of user j as an exact rational: rank(W_eff H V_eff) over 2T
/// (ACS) or complex rank over T (time-only).
Rational achieved_dof(int j, const EffectiveFilters& eff,
                      const ChannelDraw& draw);

/// Small matrices whose null-space dimension certifies whether the desired
/// and interference spaces can be separated at receiver 1 for p = 2.
struct EliminationCheck {
  bool acs = true;
  Mat m_r;    // 3x2 real sine matrix (ACS variant)
  CMat m_c;   // 3x4 complex coefficient matrix (no-ACS variant)
  int null_dim = 0;
};

/// ACS variant: |h| sin(phi) entries of the post-CB direct channel at the
/// banded positions; zero null space means the rank multipliers vanish.
EliminationCheck elimination_p2_acs(const StructuredChannels& sc);
EliminationCheck elimination_p2_acs(const ChannelDraw& draw);

/// Time-only variant: the 3x4 complex coefficient matrix, always with a
/// nontrivial null space (rank at most 3).
EliminationCheck elimination_p2_noacs(const StructuredChannels& sc);
EliminationCheck elimination_p2_noacs(const ChannelDraw& draw);

struct SsmReceiverReport {
  int rows = 0;
  int cols = 0;
  int rank = 0;
  double sigma_min_rel = 0.0;
  bool full_rank = false;
  Rational dof;
};

/// Per-draw verification record.
struct SsmReport {
  int p = 0;
  ExtensionMode mode;
  uint64_t seed = 0;  // draw seed, reproduces the exact realization
  std::array<SsmReceiverReport, 3> rx;
  double leakage = 0.0;
  double align_residual = 0.0;
};

struct VerifySummary {
  int p = 0;
  ExtensionMode mode;
  int trials = 0;
  uint64_t seed = 0;
  double full_rank_fraction = 0.0;
  Rational achieved_dof;  // unanimous value, else the minimum over draws
  double max_leakage = 0.0;
  double max_align_residual = 0.0;
  std::vector<uint64_t> failures;  // seeds of draws that failed structurally

  nlohmann::json to_json() const;
};

/// Runs the full pipeline over `trials` seeded draws and reports the
/// signal-space spectra, ranks, achieved DoF and leakage per draw. When
/// `failures` is given, draws that fail structurally are recorded there by
/// seed and skipped; otherwise the failure propagates.
std::vector<SsmReport> verify_claims(int p, int trials, uint64_t seed,
                                     ExtensionMode mode,
                                     std::vector<uint64_t>* failures = nullptr);

VerifySummary summarize(int p, ExtensionMode mode, int trials, uint64_t seed,
                        const std::vector<SsmReport>& reports,
                        const std::vector<uint64_t>& failures);

}  // namespace iasim
