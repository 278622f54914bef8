#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "owdcl/benchmark.hpp"
#include "owdcl/encoder.hpp"
#include "owdcl/losses.hpp"
#include "owdcl/prototypes.hpp"

namespace owdcl {

struct AdaptConfig {
  LossWeights weights;  // alpha1 holds the initial pair-loss magnitude
  double alpha1_late = 0.1;
  std::size_t alpha1_switch_batch = 20;  // batches run at the initial magnitude
  double lr = 0.01;
  std::size_t batch_size = 256;
  std::size_t queue_capacity = 100;
  std::size_t window_capacity = 512;
  double beta = 0.99;  // target-Gaussian momentum
  bool ps = true;      // positive-pair alignment
  bool cs = true;      // cluster/sample alignment (all four remaining terms)
  std::uint64_t seed = 1;
};

struct MetricsAccumulator {
  std::size_t weak_correct = 0;
  std::size_t weak_total = 0;
  std::size_t strong_rejected = 0;
  std::size_t strong_total = 0;
};

struct Metrics {
  double acc_s = 0.0;
  double acc_n = 0.0;
  double acc_h = 0.0;
};

// 2sn/(s+n), with the s = n = 0 limit defined as 0.
double harmonic_mean(double s, double n);

// Throws UndefinedMetric until at least one weak and one strong sample were
// seen.
Metrics metrics(const MetricsAccumulator& acc);

struct SamplePrediction {
  int predicted = 0;  // 1..m weak, > m strong
  int truth = 0;
  double os = 0.0;      // against source prototypes
  double os_hat = 0.0;  // against source plus the strong queue
};

struct BatchResult {
  std::size_t batch_index = 0;  // 0-based position in the stream
  std::vector<SamplePrediction> samples;
  LossTerms losses;
  double total = 0.0;
  std::optional<double> tau_star;
  std::size_t queue_len = 0;
  std::optional<double> acc_s;  // running values; empty while undefined
  std::optional<double> acc_n;
  std::optional<double> acc_h;
  double pair_cosine = 0.0;  // mean cosine between the two views' features
  double effective_alpha1 = 0.0;
  std::vector<FeatureVector> features;  // normalized original-view features,
                                        // as used for the predictions above
};

// One streaming test-time-training session: owns the adapted parameters, the
// prototype bank, the score tracker, the target Gaussian and the metric
// counts. Batches must arrive in stream order; predictions for a batch are
// recorded before its gradient step mutates the parameters.
class AdaptSession {
 public:
  AdaptSession(const PretrainOutput& pretrained, const AdaptConfig& config);

  BatchResult adapt_batch(const std::vector<Record>& batch);

  // For paired-replay experiments: freeze or re-enable the loss terms mid-run.
  void set_toggles(bool ps, bool cs);

  const EncoderParams& params() const { return params_; }
  const PrototypeBank& bank() const { return bank_; }
  const OutlierTracker& tracker() const { return tracker_; }
  const GaussianStats& target_stats() const { return target_stats_; }
  const MetricsAccumulator& counts() const { return counts_; }
  const AdaptConfig& config() const { return config_; }
  std::size_t batches_seen() const { return batches_seen_; }

 private:
  AdaptConfig config_;
  EncoderParams params_;
  PrototypeBank bank_;
  OutlierTracker tracker_;
  GaussianStats source_stats_;
  GaussianStats target_stats_;
  MetricsAccumulator counts_;
  DeterministicRng augment_rng_;
  std::size_t batches_seen_ = 0;
};

struct RunReport {
  std::vector<BatchResult> batches;
  MetricsAccumulator counts;
  std::size_t consumed = 0;  // records taken from the stream, each exactly once
};

// Single pass over the target stream in order, batched by config.batch_size
// (final batch may be short). Every record is consumed exactly once.
RunReport run_one_pass(const PretrainOutput& pretrained, const Dataset& target,
                       const AdaptConfig& config);

}  // namespace owdcl
