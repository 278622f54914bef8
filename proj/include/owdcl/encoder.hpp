#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "owdcl/augment.hpp"
#include "owdcl/losses.hpp"
#include "owdcl/numerics.hpp"
#include "owdcl/prototypes.hpp"

namespace owdcl {

struct EncoderConfig {
  std::size_t input_dim = 144;
  std::size_t hidden_dim = 64;
  std::size_t feature_dim = 32;
  std::size_t num_classes = 6;
};

// Two-layer feature extractor (tanh hidden, identity feature layer) plus a
// linear classification head used only during source pretraining.
struct EncoderParams {
  EncoderConfig config;
  Matrix w1;  // hidden x input
  FeatureVector b1;
  Matrix w2;  // feature x hidden
  FeatureVector b2;
  Matrix w3;  // classes x feature
  FeatureVector b3;
};

struct GradientSet {
  Matrix w1;
  FeatureVector b1;
  Matrix w2;
  FeatureVector b2;
  Matrix w3;
  FeatureVector b3;
};

// Weights uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

GradientSet zero_gradients(const EncoderConfig& config);

// Raw (unnormalized) feature of one input image.
FeatureVector forward(const EncoderParams& params, const Raster& x);

// Head logits, length num_classes. The adaptation phase never uses these.
std::vector<double> forward_logits(const EncoderParams& params, const Raster& x);

// p <- p - lr * g, elementwise; returns the updated copy.
EncoderParams sgd_step(const EncoderParams& params, const GradientSet& grads, double lr);

// Members of the composite adaptation loss. Disabled terms contribute neither
// value nor gradient.
struct LossMask {
  bool ps = true;
  bool nt = true;
  bool pc_wea = true;
  bool pc_str = true;
  bool kld = true;
};

struct PairedSample {
  Raster a;  // original view
  Raster b;  // augmented view
};

// Everything backward() needs besides the parameters. Pseudo-labels and bank
// contents are frozen inputs here; assignment happened earlier in the batch.
struct BatchContext {
  std::vector<PairedSample> inputs;
  std::vector<PseudoLabel> labels;
  const PrototypeBank* bank = nullptr;
  GaussianStats source_stats;
  GaussianStats target_stats;  // state before this batch's momentum update
  double beta = 0.99;
  LossWeights weights;  // effective pair magnitude already applied by caller
};

struct BackwardResult {
  GradientSet grads;
  LossTerms terms;
  GaussianStats updated_target;  // target Gaussian after the momentum update
};

// Reverse-mode gradients of the masked composite loss with respect to every
// parameter tensor. The target Gaussian is updated from the weak-labeled
// original-view features first and the divergence term is evaluated on the
// updated statistics, so its gradient chains through the momentum update.
// Throws NonFiniteLoss if the total diverges.
BackwardResult backward(const EncoderParams& params, const BatchContext& ctx,
                        const LossMask& mask);

// Value-only evaluation of the same masked composite, for derivative checks
// against central finite differences.
double composite_loss_value(const EncoderParams& params, const BatchContext& ctx,
                            const LossMask& mask);

struct LabeledSample {
  int label = 0;  // 1-based class
  Raster image;
};

struct PretrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double lr = 0.05;
  std::uint64_t seed = 1;
};

struct PretrainOutput {
  EncoderParams params;
  std::vector<FeatureVector> prototypes;  // one unit-norm prototype per class
  GaussianStats source_stats;             // over raw features of all samples
  double train_accuracy = 0.0;
};

// Cross-entropy training on the head, then per-class feature means as
// prototypes and a diagonal Gaussian fit over all source features.
PretrainOutput pretrain(const std::vector<LabeledSample>& data, const EncoderConfig& config,
                        const PretrainConfig& train);

// Little-endian binary checkpoint: magic "OWCK", format version, layer count,
// then per tensor (rows, cols, f32 row-major). Saving twice through a load is
// byte-identical.
void save_checkpoint(const std::string& path, const EncoderParams& params);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace owdcl
