#pragma once

#include <utility>

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "iasim/rng.hpp"
#include "iasim/types.hpp"

namespace iasim::numeric {

/// Fixes the overall phase/sign of a vector so null-space computations are
/// deterministic: the first coordinate with non-negligible magnitude is made
/// real and positive.
template <class Derived>
typename Derived::PlainObject phase_fix(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  typename Derived::PlainObject out = v;
  double scale = out.cwiseAbs().maxCoeff();
  if (scale <= 0.0) return out;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double m = std::abs(out(i));
    if (m > 1e-12 * scale) {
      Scalar factor = std::conj(out(i)) / Scalar(m);
      out *= factor;
      break;
    }
  }
  return out;
}

/// Orthonormal basis of the right null space of A (columns), via SVD with a
/// relative singular-value threshold. Each basis vector is phase-fixed.
template <class MatT>
MatT null_space(const MatT& a, double rel_tol = tol::kRank) {
  Eigen::JacobiSVD<MatT> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * smax) ++rank;
  }
  Eigen::Index dim = a.cols() - rank;
  MatT basis(a.cols(), dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    basis.col(c) = phase_fix(svd.matrixV().col(rank + c).eval());
  }
  return basis;
}

/// Unit row vector r with r*A = 0 (left null space, one generic direction).
/// Throws if A has no left null space at the given tolerance.
template <class MatT>
MatT left_null_row(const MatT& a, double rel_tol = tol::kRank) {
  MatT basis = null_space<MatT>(a.adjoint().eval(), rel_tol);
  if (basis.cols() == 0) {
    throw StructuredError("left_null_empty",
                          "matrix has no left null space at tolerance");
  }
  return basis.col(0).adjoint();
}

/// Singular values of A (descending).
template <class MatT>
Eigen::VectorXd singular_values(const MatT& a) {
  if (a.rows() == 0 || a.cols() == 0) return Eigen::VectorXd();
  if (a.rows() <= 32 && a.cols() <= 32) {
    Eigen::JacobiSVD<MatT> svd(a);
    return svd.singularValues();
  }
  Eigen::BDCSVD<MatT> svd(a);
  return svd.singularValues();
}

struct RankInfo {
  int rank = 0;
  double sigma_min_rel = 0.0;  // smallest/largest singular value
};

/// Numerical rank at a relative threshold plus the sigma_min/sigma_max ratio.
template <class MatT>
RankInfo rank_info(const MatT& a, double rel_tol = tol::kRank) {
  RankInfo info;
  Eigen::VectorXd sv = singular_values(a);
  if (sv.size() == 0) return info;
  double smax = sv(0);
  if (smax <= 0.0) return info;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * smax) ++info.rank;
  }
  info.sigma_min_rel = sv(sv.size() - 1) / smax;
  return info;
}

template <class MatT>
double sigma_min_rel(const MatT& a) {
  return rank_info(a).sigma_min_rel;
}

/// Column-pivoted QR split of the column space: returns (basis, complement)
/// where [basis complement] is a full orthonormal square and basis spans the
/// columns of A at the given relative rank threshold.
template <class MatT>
std::pair<MatT, MatT> colspace_split(const MatT& a, double rel_tol = tol::kRank) {
  Eigen::ColPivHouseholderQR<MatT> qr(a);
  const auto& r = qr.matrixR();
  double rmax = 0.0;
  Eigen::Index n = std::min(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < n; ++i) rmax = std::max(rmax, std::abs(r(i, i)));
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(r(i, i)) > rel_tol * rmax) ++rank;
  }
  MatT q = qr.householderQ() * MatT::Identity(a.rows(), a.rows());
  return {q.leftCols(rank), q.rightCols(a.rows() - rank)};
}

/// Minimum-norm least-squares solve (complete orthogonal decomposition).
template <class MatT>
MatT min_norm_solve(const MatT& a, const MatT& b) {
  Eigen::CompleteOrthogonalDecomposition<MatT> cod(a);
  return cod.solve(b);
}

/// Haar-distributed random orthogonal matrix: QR of a Gaussian draw with the
/// R-diagonal signs folded into Q so the result is deterministic in the
/// stream state.
Mat random_orthogonal(int n, RandomStream& rs);

/// Haar-distributed random unitary matrix (complex analogue).
CMat random_unitary(int n, RandomStream& rs);

}  // namespace iasim::numeric
