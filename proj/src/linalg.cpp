#include "esn/linalg.hpp"

#include "esn/error.hpp"

#include <cmath>

namespace esn {

Eigen::LLT<Mat> spd_cholesky(const Mat& m, const std::string& what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DomainError(what + ": expected a non-empty square matrix");
  }
  if (!m.allFinite()) throw DomainError(what + ": non-finite entries");
  if (!m.isApprox(m.transpose(), 1e-10)) throw DomainError(what + ": matrix is not symmetric");
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw DomainError(what + ": matrix is not positive definite");
  const auto diag = llt.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) {
      throw DomainError(what + ": matrix is not positive definite");
    }
  }
  return llt;
}

bool is_spd(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
  if (!m.isApprox(m.transpose(), 1e-10)) return false;
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) return false;
  return (llt.matrixLLT().diagonal().array() > 0.0).all();
}

double log_det(const Eigen::LLT<Mat>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Mat spd_inverse(const Eigen::LLT<Mat>& llt) {
  const auto n = llt.matrixLLT().rows();
  return symmetrize(llt.solve(Mat::Identity(n, n)));
}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

Mat floor_eigenvalues(const Mat& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(m));
  Vec ev = eig.eigenvalues().cwiseMax(floor);
  return symmetrize(eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose());
}

Mat select(const Mat& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Mat out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

Vec select(const Vec& v, const std::vector<int>& idx) {
  Vec out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = v(idx[i]);
  return out;
}

Vec vech(const Mat& m) {
  const int d = static_cast<int>(m.rows());
  Vec out(d * (d + 1) / 2);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) out(k++) = m(i, j);
  return out;
}

Mat unvech(const Vec& v, int d) {
  Mat m(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  return m;
}

void weighted_moments(const Mat& x, const Vec& weights, Vec& mean, Mat& cov) {
  mean = x.transpose() * weights;
  const Mat centered = x.rowwise() - mean.transpose();
  cov = symmetrize(centered.transpose() * weights.asDiagonal() * centered);
}

}  // namespace esn
