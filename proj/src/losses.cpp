#include "owdcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "owdcl/error.hpp"
#include "owdcl/prototypes.hpp"

namespace owdcl {

namespace {

constexpr double kUnitNormTolerance = 1e-6;

void require_unit_norm(const FeatureVector& v, const char* what) {
  const double n = norm2(v);
  if (std::abs(n - 1.0) > kUnitNormTolerance)
    fail(ErrorCode::NonUnitNorm,
         std::string(what) + " has norm " + std::to_string(n) + ", expected 1");
}

double log_sum_exp(const std::vector<double>& xs) {
  double m = xs.front();
  for (double x : xs) m = std::max(m, x);
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

// Shared worker for the pair loss; gradient buffers are optional.
double pair_loss_impl(const std::vector<FeaturePair>& pairs, double gamma1, double alpha1,
                      std::vector<FeatureVector>* grad_a, std::vector<FeatureVector>* grad_b) {
  if (pairs.empty()) fail(ErrorCode::EmptyBatch, "pair loss needs at least one pair");
  if (!(gamma1 > 0.0)) fail(ErrorCode::SpecInvalid, "pair temperature must be positive");
  const std::size_t b = pairs.size();
  const std::size_t dim = pairs.front().first.size();
  for (const auto& [va, vb] : pairs) {
    require_unit_norm(va, "first-view feature");
    require_unit_norm(vb, "second-view feature");
  }

  // Cross-view similarity matrix, s[i][k] = v_i . v'_k.
  std::vector<std::vector<double>> s(b, std::vector<double>(b));
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t k = 0; k < b; ++k) s[i][k] = dot(pairs[i].first, pairs[k].second) / gamma1;

  double loss = 0.0;
  std::vector<double> row(b), col(b);
  // Row/column softmaxes reused for the gradient.
  std::vector<std::vector<double>> pa, pb;
  if (grad_a) {
    pa.assign(b, std::vector<double>(b));
    pb.assign(b, std::vector<double>(b));
  }
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = 0; k < b; ++k) row[k] = s[i][k];
    for (std::size_t k = 0; k < b; ++k) col[k] = s[k][i];
    const double lse_row = log_sum_exp(row);
    const double lse_col = log_sum_exp(col);
    loss += (lse_row - s[i][i]) + (lse_col - s[i][i]);
    if (grad_a) {
      for (std::size_t k = 0; k < b; ++k) {
        pa[i][k] = std::exp(row[k] - lse_row);
        pb[k][i] = std::exp(col[k] - lse_col);
      }
    }
  }
  const double scale = alpha1 / static_cast<double>(b);

  if (grad_a) {
    grad_a->assign(b, FeatureVector(dim, 0.0));
    grad_b->assign(b, FeatureVector(dim, 0.0));
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t k = 0; k < b; ++k) {
        double g = pa[i][k] + pb[i][k];
        if (i == k) g -= 2.0;
        g *= scale / gamma1;
        if (g == 0.0) continue;
        for (std::size_t j = 0; j < dim; ++j) {
          (*grad_a)[i][j] += g * pairs[k].second[j];
          (*grad_b)[k][j] += g * pairs[i].first[j];
        }
      }
    }
  }
  return scale * loss;
}

double nll_impl(const FeatureVector& f, const std::vector<FeatureVector>& bank_subset,
                std::size_t label_index, double delta, FeatureVector* grad_f) {
  if (bank_subset.empty()) fail(ErrorCode::EmptyPrototypeBank, "prototype NLL over an empty bank");
  if (label_index >= bank_subset.size())
    fail(ErrorCode::LabelNotInBank, "pseudo-label index " + std::to_string(label_index) +
                                        " outside bank of " +
                                        std::to_string(bank_subset.size()));
  if (!(delta > 0.0)) fail(ErrorCode::SpecInvalid, "prototype temperature must be positive");

  std::vector<double> logits(bank_subset.size());
  for (std::size_t k = 0; k < bank_subset.size(); ++k) logits[k] = dot(bank_subset[k], f) / delta;
  const double lse = log_sum_exp(logits);
  if (grad_f) {
    grad_f->assign(f.size(), 0.0);
    for (std::size_t k = 0; k < bank_subset.size(); ++k) {
      double g = std::exp(logits[k] - lse);
      if (k == label_index) g -= 1.0;
      g /= delta;
      for (std::size_t j = 0; j < f.size(); ++j) (*grad_f)[j] += g * bank_subset[k][j];
    }
  }
  return lse - logits[label_index];
}

double cluster_loss_impl(const BatchCenters& centers,
                         const std::vector<FeatureVector>& source_prototypes, double gamma2,
                         double alpha2, std::map<int, FeatureVector>* grad_center) {
  if (centers.empty()) fail(ErrorCode::EmptyCenters, "cluster loss needs at least one class");
  if (!(gamma2 > 0.0)) fail(ErrorCode::SpecInvalid, "cluster temperature must be positive");

  std::vector<int> ids;
  std::vector<FeatureVector> chat;   // normalized centers
  std::vector<double> raw_norm;      // for chaining back to raw centers
  std::vector<const FeatureVector*> prot;
  for (const auto& [cls, c] : centers.center) {
    if (cls < 1 || static_cast<std::size_t>(cls) > source_prototypes.size())
      fail(ErrorCode::LabelNotInBank,
           "class " + std::to_string(cls) + " has no source prototype");
    ids.push_back(cls);
    raw_norm.push_back(norm2(c));
    chat.push_back(l2_normalize(c));
    prot.push_back(&source_prototypes[static_cast<std::size_t>(cls) - 1]);
  }
  const std::size_t k = ids.size();
  const std::size_t dim = chat.front().size();

  std::vector<std::vector<double>> s(k, std::vector<double>(k));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t p = 0; p < k; ++p) s[a][p] = dot(chat[a], *prot[p]) / gamma2;

  double loss = 0.0;
  std::vector<double> row(k), col(k);
  std::vector<std::vector<double>> pa, pb;
  if (grad_center) {
    pa.assign(k, std::vector<double>(k));
    pb.assign(k, std::vector<double>(k));
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t p = 0; p < k; ++p) row[p] = s[a][p];
    for (std::size_t p = 0; p < k; ++p) col[p] = s[p][a];
    const double lse_row = log_sum_exp(row);  // center a anchored over prototypes
    const double lse_col = log_sum_exp(col);  // prototype a anchored over centers
    loss += (lse_row - s[a][a]) + (lse_col - s[a][a]);
    if (grad_center) {
      for (std::size_t p = 0; p < k; ++p) {
        pa[a][p] = std::exp(row[p] - lse_row);
        pb[p][a] = std::exp(col[p] - lse_col);
      }
    }
  }

  if (grad_center) {
    grad_center->clear();
    for (std::size_t a = 0; a < k; ++a) {
      FeatureVector g_hat(dim, 0.0);
      for (std::size_t p = 0; p < k; ++p) {
        double g = pa[a][p] + pb[a][p];
        if (a == p) g -= 2.0;
        g *= alpha2 / gamma2;
        if (g == 0.0) continue;
        for (std::size_t j = 0; j < dim; ++j) g_hat[j] += g * (*prot[p])[j];
      }
      // Chain through the center normalization: project out the radial part.
      const double radial = dot(g_hat, chat[a]);
      FeatureVector g_raw(dim);
      for (std::size_t j = 0; j < dim; ++j)
        g_raw[j] = (g_hat[j] - radial * chat[a][j]) / raw_norm[a];
      (*grad_center)[ids[a]] = std::move(g_raw);
    }
  }
  return alpha2 * loss;
}

}  // namespace

double nt_xent_pairs(const std::vector<FeaturePair>& pairs, double gamma1, double alpha1) {
  return pair_loss_impl(pairs, gamma1, alpha1, nullptr, nullptr);
}

double nt_xent_pairs_grad(const std::vector<FeaturePair>& pairs, double gamma1, double alpha1,
                          std::vector<FeatureVector>& grad_a,
                          std::vector<FeatureVector>& grad_b) {
  return pair_loss_impl(pairs, gamma1, alpha1, &grad_a, &grad_b);
}

double outlier_score(const FeatureVector& f, const std::vector<FeatureVector>& prototypes) {
  if (prototypes.empty()) fail(ErrorCode::EmptyPrototypeBank, "outlier score without prototypes");
  double best = -1.0;
  for (const auto& p : prototypes) best = std::max(best, cosine_sim(f, p));
  return 1.0 - best;
}

double prototype_nll(const FeatureVector& f, const std::vector<FeatureVector>& bank_subset,
                     std::size_t label_index, double delta) {
  return nll_impl(f, bank_subset, label_index, delta, nullptr);
}

double prototype_nll_grad(const FeatureVector& f, const std::vector<FeatureVector>& bank_subset,
                          std::size_t label_index, double delta, FeatureVector& grad_f) {
  return nll_impl(f, bank_subset, label_index, delta, &grad_f);
}

BatchCenters batch_class_centers(const std::vector<FeaturePair>& view_features,
                                 const std::vector<int>& weak_class) {
  if (view_features.size() != weak_class.size())
    fail(ErrorCode::DimensionMismatch, "one weak label slot per pair required");
  BatchCenters out;
  for (std::size_t i = 0; i < view_features.size(); ++i) {
    const int cls = weak_class[i];
    if (cls == 0) continue;
    const auto& [va, vb] = view_features[i];
    auto it = out.center.find(cls);
    if (it == out.center.end()) it = out.center.emplace(cls, FeatureVector(va.size(), 0.0)).first;
    for (std::size_t j = 0; j < va.size(); ++j) it->second[j] += va[j] + vb[j];
    out.pair_count[cls] += 1;
  }
  for (auto& [cls, sum] : out.center) {
    const double denom = 2.0 * static_cast<double>(out.pair_count[cls]);
    for (double& x : sum) x /= denom;
  }
  return out;
}

double nt_xent_clusters(const BatchCenters& centers,
                        const std::vector<FeatureVector>& source_prototypes, double gamma2,
                        double alpha2) {
  return cluster_loss_impl(centers, source_prototypes, gamma2, alpha2, nullptr);
}

double nt_xent_clusters_grad(const BatchCenters& centers,
                             const std::vector<FeatureVector>& source_prototypes, double gamma2,
                             double alpha2, std::map<int, FeatureVector>& grad_center) {
  return cluster_loss_impl(centers, source_prototypes, gamma2, alpha2, &grad_center);
}

double expanded_outlier_score(const FeatureVector& f, const PrototypeBank& bank) {
  if (bank.total_size() == 0)
    fail(ErrorCode::EmptyPrototypeBank, "expanded outlier score on an empty bank");
  double best = -1.0;
  for (const auto& p : bank.source()) best = std::max(best, cosine_sim(f, p));
  for (const auto& sp : bank.strong()) best = std::max(best, cosine_sim(f, sp.feature));
  return 1.0 - best;
}

double total_loss(const LossTerms& terms) {
  return terms.ps + terms.nt + terms.pc_wea + terms.pc_str + terms.kld;
}

}  // namespace owdcl
