#include "iasim/verification.hpp"

#include <algorithm>
#include <cmath>

#include "iasim/numeric.hpp"
#include "iasim/pipeline.hpp"

namespace iasim {

RankReport rank_report(const Mat& g) {
  auto info = numeric::rank_info(g);
  return {info.rank, info.sigma_min_rel};
}

RankReport rank_report(const CMat& g) {
  auto info = numeric::rank_info(g);
  return {info.rank, info.sigma_min_rel};
}

Mat build_ssm(int j, const PrecoderSet& prec, const StructuredChannels& sc) {
  Mat basis = interference_basis(j, prec, sc);
  Mat desired = sc.L(j, j) * prec.V(j);
  // Unit desired columns: same span and rank, but the sigma_min/sigma_max
  // rank surrogate is not skewed by the coefficient spread of the chains.
  for (Eigen::Index c = 0; c < desired.cols(); ++c) {
    desired.col(c) /= desired.col(c).norm();
  }
  Mat g(desired.rows(), desired.cols() + basis.cols());
  g << desired, basis;
  return g;
}

CMat build_ssm_c(int j, const PrecoderSet& prec, const StructuredChannels& sc) {
  CMat basis = interference_basis_c(j, prec, sc);
  CMat desired = sc.Lc(j, j) * prec.Vc(j);
  for (Eigen::Index c = 0; c < desired.cols(); ++c) {
    desired.col(c) /= desired.col(c).norm();
  }
  CMat g(desired.rows(), desired.cols() + basis.cols());
  g << desired, basis;
  return g;
}

Rational achieved_dof(int j, const EffectiveFilters& eff,
                      const ChannelDraw& draw) {
  const int T = eff.mode.extensions;
  if (eff.mode.is_acs()) {
    Mat m = eff.Weff(j) * lift_matrix_acs(draw.H(j, j), T) * eff.Veff(j);
    return Rational(rank_report(m).rank, 2 * T);
  }
  CMat m = eff.Weffc(j) * lift_matrix_time(draw.H(j, j), T) * eff.Veffc(j);
  return Rational(rank_report(m).rank, T);
}

namespace {

int null_dimension(const Mat& m) {
  return static_cast<int>(m.cols()) - rank_report(m).rank;
}

int null_dimension(const CMat& m) {
  return static_cast<int>(m.cols()) - rank_report(m).rank;
}

void require_p2(const StructuredChannels& sc) {
  if (sc.p != 2) {
    throw StructuredError("bad_parameter",
                          "elimination checks are defined for p = 2 only")
        .with("p", sc.p);
  }
}

}  // namespace

EliminationCheck elimination_p2_acs(const StructuredChannels& sc) {
  require_p2(sc);
  const CMat& d = sc.G(1, 1);  // post-CB direct channel at receiver 1
  auto entry = [&](int q, int r) {
    cplx h = d(q - 1, r - 1);
    return std::abs(h) * std::sin(std::arg(h));
  };
  EliminationCheck check;
  check.acs = true;
  check.m_r = Mat::Zero(3, 2);
  check.m_r(0, 0) = entry(1, 1);
  check.m_r(1, 0) = entry(2, 1);
  check.m_r(1, 1) = entry(2, 2);
  check.m_r(2, 1) = entry(3, 2);
  check.null_dim = null_dimension(check.m_r);
  return check;
}

EliminationCheck elimination_p2_noacs(const StructuredChannels& sc) {
  require_p2(sc);
  const CMat& d = sc.G(1, 1);
  EliminationCheck check;
  check.acs = false;
  check.m_c = CMat::Zero(3, 4);
  check.m_c(0, 0) = d(0, 0);
  check.m_c(0, 2) = cplx(1.0, 0.0);
  check.m_c(1, 0) = d(1, 0);
  check.m_c(1, 1) = d(1, 1);
  check.m_c(2, 1) = d(2, 1);
  check.m_c(2, 3) = cplx(1.0, 0.0);
  check.null_dim = null_dimension(check.m_c);
  return check;
}

namespace {

StructuredChannels structured_for_elimination(const ChannelDraw& draw) {
  BasisChange cb = build_cb(draw);
  return apply_cb(draw, cb, ExtensionMode::acs(draw.p));
}

}  // namespace

EliminationCheck elimination_p2_acs(const ChannelDraw& draw) {
  return elimination_p2_acs(structured_for_elimination(draw));
}

EliminationCheck elimination_p2_noacs(const ChannelDraw& draw) {
  return elimination_p2_noacs(structured_for_elimination(draw));
}

std::vector<SsmReport> verify_claims(int p, int trials, uint64_t seed,
                                     ExtensionMode mode,
                                     std::vector<uint64_t>* failures) {
  if (p < 2 || trials < 1) {
    throw StructuredError("bad_parameter", "verify needs p >= 2, trials >= 1")
        .with("p", p)
        .with("trials", trials);
  }
  std::vector<SsmReport> reports;
  for (int d = 0; d < trials; ++d) {
    DropOutcome out;
    try {
      out = run_drop(p, seed, d, mode);
    } catch (const StructuredError&) {
      if (failures == nullptr) throw;
      failures->push_back(drop_seed(seed, d, 0));
      continue;
    }
    SsmReport rep;
    rep.p = p;
    rep.mode = mode;
    rep.seed = out.draw_seed;
    rep.leakage = raw_leakage(out.eff, out.draw);
    rep.align_residual = out.prec.max_align_residual;
    for (int j = 1; j <= 3; ++j) {
      SsmReceiverReport& rx = rep.rx[j - 1];
      RankReport rr;
      if (mode.is_acs()) {
        Mat g = build_ssm(j, out.prec, out.sc);
        rx.rows = static_cast<int>(g.rows());
        rx.cols = static_cast<int>(g.cols());
        rr = rank_report(g);
      } else {
        CMat g = build_ssm_c(j, out.prec, out.sc);
        rx.rows = static_cast<int>(g.rows());
        rx.cols = static_cast<int>(g.cols());
        rr = rank_report(g);
      }
      rx.rank = rr.rank;
      rx.sigma_min_rel = rr.sigma_min_rel;
      rx.full_rank =
          rr.rank == std::min(rx.rows, rx.cols) && rr.sigma_min_rel > tol::kRank;
      rx.dof = achieved_dof(j, out.eff, out.draw);
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

VerifySummary summarize(int p, ExtensionMode mode, int trials, uint64_t seed,
                        const std::vector<SsmReport>& reports,
                        const std::vector<uint64_t>& failures) {
  VerifySummary sum;
  sum.p = p;
  sum.mode = mode;
  sum.trials = trials;
  sum.seed = seed;
  sum.failures = failures;
  int full = 0;
  int total = 0;
  bool first = true;
  for (const auto& rep : reports) {
    sum.max_leakage = std::max(sum.max_leakage, rep.leakage);
    sum.max_align_residual =
        std::max(sum.max_align_residual, rep.align_residual);
    for (const auto& rx : rep.rx) {
      ++total;
      if (rx.full_rank) ++full;
      if (first || rx.dof < sum.achieved_dof) {
        sum.achieved_dof = rx.dof;
        first = false;
      }
    }
  }
  sum.full_rank_fraction = total > 0 ? static_cast<double>(full) / total : 0.0;
  return sum;
}

nlohmann::json VerifySummary::to_json() const {
  nlohmann::json j;
  j["p"] = p;
  j["mode"] = mode.name();
  j["trials"] = trials;
  j["seed"] = seed;
  j["full_rank_fraction"] = full_rank_fraction;
  j["achieved_dof"] = achieved_dof.str();
  j["max_leakage"] = max_leakage;
  j["max_align_residual"] = max_align_residual;
  j["failures"] = failures;
  return j;
}

}  // namespace iasim
