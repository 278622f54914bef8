#include "owdcl/harness.hpp"

#include <string>

#include "owdcl/error.hpp"

namespace owdcl {

double harmonic_mean(double s, double n) {
  if (s + n == 0.0) return 0.0;
  return 2.0 * s * n / (s + n);
}

Metrics metrics(const MetricsAccumulator& acc) {
  if (acc.weak_total == 0)
    fail(ErrorCode::UndefinedMetric, "no weak-OOD samples seen, source accuracy undefined");
  if (acc.strong_total == 0)
    fail(ErrorCode::UndefinedMetric, "no strong-OOD samples seen, rejection accuracy undefined");
  Metrics m;
  m.acc_s = static_cast<double>(acc.weak_correct) / static_cast<double>(acc.weak_total);
  m.acc_n = static_cast<double>(acc.strong_rejected) / static_cast<double>(acc.strong_total);
  m.acc_h = harmonic_mean(m.acc_s, m.acc_n);
  return m;
}

AdaptSession::AdaptSession(const PretrainOutput& pretrained, const AdaptConfig& config)
    : config_(config),
      params_(pretrained.params),
      bank_(pretrained.prototypes, config.queue_capacity),
      tracker_(config.window_capacity),
      source_stats_(pretrained.source_stats),
      target_stats_(pretrained.source_stats),  // drift starts from the source fit
      augment_rng_(mix_seed(config.seed, 0)) {
  if (config_.batch_size < 1) fail(ErrorCode::SpecInvalid, "batch size must be at least 1");
}

void AdaptSession::set_toggles(bool ps, bool cs) {
  config_.ps = ps;
  config_.cs = cs;
}

BatchResult AdaptSession::adapt_batch(const std::vector<Record>& batch) {
  if (batch.empty()) fail(ErrorCode::EmptyBatch, "adaptation batch is empty");
  const std::size_t b = batch.size();
  const int m = static_cast<int>(params_.config.num_classes);

  BatchResult result;
  result.batch_index = batches_seen_;
  result.effective_alpha1 = batches_seen_ < config_.alpha1_switch_batch
                                ? config_.weights.alpha1
                                : config_.alpha1_late;

  // Augmented pairs and both views' features under the current parameters.
  std::vector<PairedSample> inputs(b);
  std::vector<FeatureVector> feat_a(b), norm_a(b), norm_b(b);
  double cosine_sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    auto [a, v] = make_pair(batch[i].pixels, augment_rng_);
    inputs[i].a = std::move(a);
    inputs[i].b = std::move(v);
    feat_a[i] = forward(params_, inputs[i].a);
    norm_a[i] = l2_normalize(feat_a[i]);
    norm_b[i] = l2_normalize(forward(params_, inputs[i].b));
    cosine_sum += dot(norm_a[i], norm_b[i]);
  }
  result.pair_cosine = cosine_sum / static_cast<double>(b);

  // Outlier scores feed the threshold before any sample is labeled.
  std::vector<double> scores(b);
  for (std::size_t i = 0; i < b; ++i) scores[i] = outlier_score(norm_a[i], bank_.source());
  tracker_.update(scores);
  result.tau_star = tracker_.tau();

  // Sequential pseudo-labeling; the expanded score is read before the sample
  // can push a new prototype. Predictions and metric counts are recorded now,
  // under the parameters the sample was actually seen with.
  std::vector<PseudoLabel> labels(b);
  result.samples.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    SamplePrediction& pred = result.samples[i];
    pred.truth = batch[i].label;
    pred.os = scores[i];
    pred.os_hat = expanded_outlier_score(norm_a[i], bank_);
    labels[i] = assign(norm_a[i], bank_, tracker_);
    if (labels[i].kind == PseudoLabel::Kind::Weak) {
      pred.predicted = labels[i].source_class;
    } else {
      pred.predicted = m + 1 + static_cast<int>(labels[i].strong_id);
    }
    if (pred.truth <= m) {
      ++counts_.weak_total;
      if (pred.predicted == pred.truth) ++counts_.weak_correct;
    } else {
      ++counts_.strong_total;
      if (pred.predicted > m) ++counts_.strong_rejected;
    }
  }
  result.queue_len = bank_.strong().size();
  result.features = norm_a;

  if (config_.ps || config_.cs) {
    BatchContext ctx;
    ctx.inputs = std::move(inputs);
    ctx.labels = labels;
    ctx.bank = &bank_;
    ctx.source_stats = source_stats_;
    ctx.target_stats = target_stats_;
    ctx.beta = config_.beta;
    ctx.weights = config_.weights;
    ctx.weights.alpha1 = result.effective_alpha1;

    LossMask mask;
    mask.ps = config_.ps;
    mask.nt = mask.pc_wea = mask.pc_str = mask.kld = config_.cs;

    BackwardResult back = backward(params_, ctx, mask);
    result.losses = back.terms;
    result.total = total_loss(back.terms);
    target_stats_ = back.updated_target;
    params_ = sgd_step(params_, back.grads, config_.lr);
  }

  if (counts_.weak_total > 0)
    result.acc_s =
        static_cast<double>(counts_.weak_correct) / static_cast<double>(counts_.weak_total);
  if (counts_.strong_total > 0)
    result.acc_n =
        static_cast<double>(counts_.strong_rejected) / static_cast<double>(counts_.strong_total);
  if (result.acc_s && result.acc_n) result.acc_h = harmonic_mean(*result.acc_s, *result.acc_n);

  ++batches_seen_;
  return result;
}

RunReport run_one_pass(const PretrainOutput& pretrained, const Dataset& target,
                       const AdaptConfig& config) {
  AdaptSession session(pretrained, config);
  RunReport report;
  std::vector<bool> seen(target.records.size(), false);
  for (std::size_t start = 0; start < target.records.size(); start += config.batch_size) {
    const std::size_t end = std::min(start + config.batch_size, target.records.size());
    std::vector<Record> batch(target.records.begin() + static_cast<std::ptrdiff_t>(start),
                              target.records.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t i = start; i < end; ++i) {
      if (seen[i])
        fail(ErrorCode::SpecInvalid, "record " + std::to_string(i) + " consumed twice");
      seen[i] = true;
    }
    report.batches.push_back(session.adapt_batch(batch));
    report.consumed += end - start;
  }
  if (report.consumed != target.records.size())
    fail(ErrorCode::SpecInvalid, "stream not fully consumed");
  report.counts = session.counts();
  return report;
}

}  // namespace owdcl
