#include "owdcl/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "owdcl/error.hpp"

namespace owdcl {

double dot(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimensionMismatch,
         "dot: lengths " + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const FeatureVector& v) { return std::sqrt(dot(v, v)); }

FeatureVector l2_normalize(const FeatureVector& v) {
  double n = norm2(v);
  if (n <= kEpsilonNorm) {
    fail(ErrorCode::ZeroVector, "l2_normalize: norm " + std::to_string(n));
  }
  FeatureVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double cosine_sim(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimensionMismatch,
         "cosine_sim: lengths " + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()));
  }
  double na = norm2(a);
  double nb = norm2(b);
  if (na <= kEpsilonNorm || nb <= kEpsilonNorm) {
    fail(ErrorCode::ZeroVector, "cosine_sim: zero operand");
  }
  double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

GaussianStats stats_from_batch(const std::vector<FeatureVector>& batch) {
  if (batch.empty()) fail(ErrorCode::EmptyBatch, "stats_from_batch: empty batch");
  std::size_t d = batch.front().size();
  GaussianStats out;
  out.mean.assign(d, 0.0);
  out.variance.assign(d, 0.0);
  out.count = batch.size();
  for (const auto& f : batch) {
    if (f.size() != d) {
      fail(ErrorCode::DimensionMismatch, "stats_from_batch: ragged batch");
    }
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += f[j];
  }
  double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t j = 0; j < d; ++j) out.mean[j] *= inv_n;
  for (const auto& f : batch) {
    for (std::size_t j = 0; j < d; ++j) {
      double delta = f[j] - out.mean[j];
      out.variance[j] += delta * delta;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    out.variance[j] = std::max(out.variance[j] * inv_n, kVarianceFloor);
  }
  return out;
}

double kl_diag_gaussian(const GaussianStats& p, const GaussianStats& q) {
  if (p.dim() != q.dim() || p.variance.size() != p.dim() ||
      q.variance.size() != q.dim()) {
    fail(ErrorCode::DimensionMismatch, "kl_diag_gaussian: dimension mismatch");
  }
  for (std::size_t j = 0; j < p.dim(); ++j) {
    if (p.variance[j] < kVarianceFloor || q.variance[j] < kVarianceFloor) {
      fail(ErrorCode::DegenerateVariance,
           "kl_diag_gaussian: variance below floor at coordinate " +
               std::to_string(j));
    }
  }
  double kl = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    double vp = p.variance[j];
    double vq = q.variance[j];
    double dm = p.mean[j] - q.mean[j];
    kl += 0.5 * (std::log(vq / vp) + (vp + dm * dm) / vq - 1.0);
  }
  return kl;
}

GaussianStats ema_update_gaussian(const GaussianStats& current,
                                  const std::vector<FeatureVector>& batch,
                                  double beta) {
  if (batch.empty()) fail(ErrorCode::EmptyBatch, "ema_update_gaussian: empty batch");
  if (beta < 0.0 || beta > 1.0) {
    fail(ErrorCode::SpecInvalid, "ema_update_gaussian: beta outside [0, 1]");
  }
  GaussianStats b = stats_from_batch(batch);
  if (current.dim() != b.dim()) {
    fail(ErrorCode::DimensionMismatch, "ema_update_gaussian: dimension mismatch");
  }
  GaussianStats out;
  out.mean.resize(b.dim());
  out.variance.resize(b.dim());
  out.count = current.count + b.count;
  for (std::size_t j = 0; j < b.dim(); ++j) {
    out.mean[j] = beta * current.mean[j] + (1.0 - beta) * b.mean[j];
    double v = beta * current.variance[j] + (1.0 - beta) * b.variance[j];
    out.variance[j] = std::max(v, kVarianceFloor);
  }
  return out;
}

std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
  if (x.size() != m.cols) {
    fail(ErrorCode::DimensionMismatch,
         "matvec: " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
             " vs input " + std::to_string(x.size()));
  }
  std::vector<double> y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0.0;
    const double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

std::vector<double> matvec_transpose(const Matrix& m, const std::vector<double>& y) {
  if (y.size() != m.rows) {
    fail(ErrorCode::DimensionMismatch,
         "matvec_transpose: " + std::to_string(m.rows) + "x" +
             std::to_string(m.cols) + " vs input " + std::to_string(y.size()));
  }
  std::vector<double> x(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) x[c] += row[c] * y[r];
  }
  return x;
}

}  // namespace owdcl
