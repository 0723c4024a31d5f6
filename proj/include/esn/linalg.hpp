#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace esn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Cholesky factor of a symmetric positive-definite matrix. Throws DomainError
/// naming `what` when the factorization fails.
Eigen::LLT<Mat> spd_cholesky(const Mat& m, const std::string& what);

bool is_spd(const Mat& m);

/// log|M| from a Cholesky factorization.
double log_det(const Eigen::LLT<Mat>& llt);

/// Inverse of an SPD matrix through its Cholesky factor.
Mat spd_inverse(const Eigen::LLT<Mat>& llt);

/// Symmetric part (M + M')/2.
Mat symmetrize(const Mat& m);

/// Eigenvalue flooring: returns the closest-in-spectrum SPD matrix whose
/// eigenvalues are at least `floor`.
Mat floor_eigenvalues(const Mat& m, double floor);

/// Rows/columns of `m` (or entries of `v`) selected by `idx`.
Mat select(const Mat& m, const std::vector<int>& rows, const std::vector<int>& cols);
Vec select(const Vec& v, const std::vector<int>& idx);

/// Lower-triangular half-vectorization, row-major: (0,0),(1,0),(1,1),(2,0),...
Vec vech(const Mat& m);
Mat unvech(const Vec& v, int d);

/// Weighted mean and covariance of the rows of `x` under normalized weights.
void weighted_moments(const Mat& x, const Vec& weights, Vec& mean, Mat& cov);

}  // namespace esn
