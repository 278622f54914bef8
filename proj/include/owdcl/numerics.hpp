#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace owdcl {

using FeatureVector = std::vector<double>;

inline constexpr double kEpsilonNorm = 1e-12;
inline constexpr double kVarianceFloor = 1e-6;

double dot(const FeatureVector& a, const FeatureVector& b);
double norm2(const FeatureVector& v);

/// Scales v to unit L2 norm. Throws ZeroVector when the norm is at or
/// below kEpsilonNorm.
FeatureVector l2_normalize(const FeatureVector& v);

/// Cosine similarity, clamped to [-1, 1] against rounding.
double cosine_sim(const FeatureVector& a, const FeatureVector& b);

/// Diagonal-Gaussian feature statistics. Variances are floored at
/// kVarianceFloor whenever stats are built or blended.
struct GaussianStats {
  FeatureVector mean;
  FeatureVector variance;
  std::size_t count = 0;

  std::size_t dim() const { return mean.size(); }
};

/// Mean and population (1/N) variance over a batch, variance floored.
GaussianStats stats_from_batch(const std::vector<FeatureVector>& batch);

/// KL(p || q) for diagonal Gaussians:
///   sum_j 0.5 * (ln(vq_j/vp_j) + (vp_j + (mp_j - mq_j)^2) / vq_j - 1)
double kl_diag_gaussian(const GaussianStats& p, const GaussianStats& q);

/// Momentum blend: mean <- beta*mean + (1-beta)*batch_mean, same for the
/// per-coordinate variance, floored afterwards. beta in [0, 1].
GaussianStats ema_update_gaussian(const GaussianStats& current,
                                  const std::vector<FeatureVector>& batch,
                                  double beta);

/// Dense row-major matrix, dimension-checked at use sites.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// y = M x
std::vector<double> matvec(const Matrix& m, const std::vector<double>& x);
/// x = M^T y
std::vector<double> matvec_transpose(const Matrix& m, const std::vector<double>& y);

}  // namespace owdcl
