#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "owdcl/numerics.hpp"

namespace owdcl {

class PrototypeBank;

struct LossWeights {
  double gamma1 = 0.8;  // pair temperature
  double gamma2 = 0.4;  // cluster temperature
  double alpha1 = 1.0;  // pair loss magnitude
  double alpha2 = 2.0;  // cluster loss magnitude
  double delta = 0.1;   // prototype softmax temperature
};

using FeaturePair = std::pair<FeatureVector, FeatureVector>;

// Contrastive alignment of augmented pairs. For anchor v_i the positive is
// v'_i and the negatives are the other second-view features v'_k; a symmetric
// term anchors each v'_j against the first view. Sum of both terms, averaged
// over the batch, scaled by alpha1. Inputs must be unit-norm.
double nt_xent_pairs(const std::vector<FeaturePair>& pairs, double gamma1, double alpha1);

// Same value; additionally fills the gradient with respect to each normalized
// view feature (grad_a for first views, grad_b for second views).
double nt_xent_pairs_grad(const std::vector<FeaturePair>& pairs, double gamma1, double alpha1,
                          std::vector<FeatureVector>& grad_a,
                          std::vector<FeatureVector>& grad_b);

// 1 - max cosine similarity against the given prototypes.
double outlier_score(const FeatureVector& f, const std::vector<FeatureVector>& prototypes);

// Negative log softmax over the bank subset of <d_k, f>/delta, evaluated at
// the pseudo-label entry. f and the prototypes are unit-norm features.
double prototype_nll(const FeatureVector& f, const std::vector<FeatureVector>& bank_subset,
                     std::size_t label_index, double delta);

// Same value; fills the gradient with respect to f.
double prototype_nll_grad(const FeatureVector& f, const std::vector<FeatureVector>& bank_subset,
                          std::size_t label_index, double delta, FeatureVector& grad_f);

struct BatchCenters {
  std::map<int, FeatureVector> center;    // class id -> mean over all 2K view features
  std::map<int, std::size_t> pair_count;  // class id -> K (pairs of that class)

  bool empty() const { return center.empty(); }
};

// Per-class mean over both views of the pairs carrying that weak pseudo-label.
// weak_class[i] is the 1-based source class of pair i, or 0 when the pair has
// no weak label (strong OOD or unassigned); such pairs contribute nothing.
BatchCenters batch_class_centers(const std::vector<FeaturePair>& view_features,
                                 const std::vector<int>& weak_class);

// Cluster-level contrast: batch class centers against their source prototypes,
// with negatives restricted to the classes present in the batch. Two log terms
// per class (center anchored over prototypes, prototype anchored over centers),
// summed over present classes and scaled by alpha2. Centers are L2-normalized
// internally; source_prototypes is indexed by class id - 1 and unit-norm.
double nt_xent_clusters(const BatchCenters& centers,
                        const std::vector<FeatureVector>& source_prototypes, double gamma2,
                        double alpha2);

// Same value; fills per-class gradients with respect to the raw (unnormalized)
// centers, chaining through the internal normalization.
double nt_xent_clusters_grad(const BatchCenters& centers,
                             const std::vector<FeatureVector>& source_prototypes, double gamma2,
                             double alpha2, std::map<int, FeatureVector>& grad_center);

// Outlier score against the union of source prototypes and the strong queue.
double expanded_outlier_score(const FeatureVector& f, const PrototypeBank& bank);

struct LossTerms {
  double ps = 0.0;
  double nt = 0.0;
  double pc_wea = 0.0;
  double pc_str = 0.0;
  double kld = 0.0;
};

// Exact sum of the reported terms. Disabled terms are left at zero upstream,
// so the logged breakdown always adds up to the total.
double total_loss(const LossTerms& terms);

}  // namespace owdcl
