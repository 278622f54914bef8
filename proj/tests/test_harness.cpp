#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "owdcl/benchmark.hpp"
#include "owdcl/encoder.hpp"
#include "owdcl/error.hpp"
#include "owdcl/harness.hpp"
#include "owdcl/numerics.hpp"

using namespace owdcl;

namespace {

template <typename F>
std::string thrown_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return error_code_name(e.code());
  }
  return "<no throw>";
}

// One small pretrained encoder and target stream shared by the session tests;
// building it once keeps the suite fast.
struct Pipeline {
  DatasetSpec spec;
  EncoderConfig config{64, 16, 8, 2};
  PretrainOutput pre;
  Dataset target;

  Pipeline() {
    spec.num_source_classes = 2;
    spec.num_strong_classes = 1;
    spec.samples_per_class = 12;
    spec.height = 8;
    spec.width = 8;
    spec.target_count = 40;
    spec.seed = 99;

    Dataset src = generate_source(spec);
    std::vector<LabeledSample> data;
    for (const auto& r : src.records) data.push_back({r.label, r.pixels});
    PretrainConfig train{8, 8, 0.05, 1};
    pre = pretrain(data, config, train);
    target = generate_target(spec, make_source_templates(spec));
  }
};

const Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

AdaptConfig small_config() {
  AdaptConfig config;
  config.batch_size = 8;
  config.queue_capacity = 5;
  config.window_capacity = 16;
  config.seed = 1;
  return config;
}

bool same_params(const EncoderParams& a, const EncoderParams& b) {
  return a.w1.data == b.w1.data && a.b1 == b.b1 && a.w2.data == b.w2.data &&
         a.b2 == b.b2 && a.w3.data == b.w3.data && a.b3 == b.b3;
}

}  // namespace

TEST_CASE("harmonic mean formula and limits") {
  CHECK(harmonic_mean(0.8546, 0.9860) == doctest::Approx(0.9156).epsilon(6e-4));
  CHECK(harmonic_mean(0.8654, 0.9999) == doctest::Approx(0.9278).epsilon(6e-4));
  CHECK(harmonic_mean(0.7, 0.7) == doctest::Approx(0.7));
  CHECK(harmonic_mean(0.0, 0.9) == 0.0);
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  // Harmonic never exceeds the arithmetic mean.
  CHECK(harmonic_mean(0.3, 0.9) <= 0.6);
}

TEST_CASE("metric accumulation arithmetic") {
  MetricsAccumulator acc;
  acc.weak_correct = 50;
  acc.weak_total = 100;
  acc.strong_rejected = 30;
  acc.strong_total = 50;
  Metrics m = metrics(acc);
  CHECK(m.acc_s == doctest::Approx(0.5));
  CHECK(m.acc_n == doctest::Approx(0.6));
  CHECK(m.acc_h == doctest::Approx(2.0 * 0.5 * 0.6 / 1.1));

  MetricsAccumulator no_weak;
  no_weak.strong_total = 5;
  CHECK(thrown_code([&] { metrics(no_weak); }) == "UndefinedMetric");
  MetricsAccumulator no_strong;
  no_strong.weak_total = 5;
  CHECK(thrown_code([&] { metrics(no_strong); }) == "UndefinedMetric");
}

TEST_CASE("session construction validates the batch size") {
  AdaptConfig config = small_config();
  config.batch_size = 0;
  CHECK(thrown_code([&] { AdaptSession s(pipeline().pre, config); }) == "SpecInvalid");
}

TEST_CASE("a fully frozen session never touches the parameters") {
  AdaptConfig config = small_config();
  config.ps = false;
  config.cs = false;
  AdaptSession session(pipeline().pre, config);

  for (int b = 0; b < 3; ++b) {
    std::vector<Record> batch(pipeline().target.records.begin() + b * 8,
                              pipeline().target.records.begin() + (b + 1) * 8);
    BatchResult result = session.adapt_batch(batch);
    CHECK(result.losses.ps == 0.0);
    CHECK(result.losses.nt == 0.0);
    CHECK(result.losses.pc_wea == 0.0);
    CHECK(result.losses.pc_str == 0.0);
    CHECK(result.losses.kld == 0.0);
    CHECK(result.total == 0.0);
  }
  CHECK(same_params(session.params(), pipeline().pre.params));
}

TEST_CASE("adapting sessions step the parameters, frozen toggles stop them") {
  AdaptConfig config = small_config();
  AdaptSession session(pipeline().pre, config);

  std::vector<Record> batch(pipeline().target.records.begin(),
                            pipeline().target.records.begin() + 8);
  session.adapt_batch(batch);
  CHECK(!same_params(session.params(), pipeline().pre.params));

  EncoderParams snapshot = session.params();
  session.set_toggles(false, false);
  std::vector<Record> batch2(pipeline().target.records.begin() + 8,
                             pipeline().target.records.begin() + 16);
  session.adapt_batch(batch2);
  CHECK(same_params(session.params(), snapshot));
}

TEST_CASE("pair-loss magnitude drops after the scheduled batch") {
  AdaptConfig config = small_config();
  config.alpha1_switch_batch = 3;
  RunReport report = run_one_pass(pipeline().pre, pipeline().target, config);
  REQUIRE(report.batches.size() == 5);  // 40 records in batches of 8
  CHECK(report.batches[0].effective_alpha1 == config.weights.alpha1);
  CHECK(report.batches[2].effective_alpha1 == config.weights.alpha1);
  CHECK(report.batches[3].effective_alpha1 == config.alpha1_late);
  CHECK(report.batches[4].effective_alpha1 == config.alpha1_late);
}

TEST_CASE("one pass consumes every record exactly once in stream order") {
  AdaptConfig config = small_config();
  config.batch_size = 16;
  RunReport report = run_one_pass(pipeline().pre, pipeline().target, config);

  CHECK(report.consumed == pipeline().target.records.size());
  REQUIRE(report.batches.size() == 3);  // 16 + 16 + 8
  CHECK(report.batches[0].samples.size() == 16);
  CHECK(report.batches[1].samples.size() == 16);
  CHECK(report.batches[2].samples.size() == 8);
  for (std::size_t b = 0; b < report.batches.size(); ++b)
    CHECK(report.batches[b].batch_index == b);

  // The per-sample truths replay the stream in order.
  std::size_t idx = 0;
  for (const auto& batch : report.batches)
    for (const auto& s : batch.samples)
      CHECK(s.truth == pipeline().target.records[idx++].label);
}

TEST_CASE("reported counts match a recount of the per-sample predictions") {
  const int m = static_cast<int>(pipeline().config.num_classes);
  RunReport report = run_one_pass(pipeline().pre, pipeline().target, small_config());

  MetricsAccumulator recount;
  for (const auto& batch : report.batches)
    for (const auto& s : batch.samples) {
      if (s.truth <= m) {
        ++recount.weak_total;
        if (s.predicted == s.truth) ++recount.weak_correct;
      } else {
        ++recount.strong_total;
        if (s.predicted > m) ++recount.strong_rejected;
      }
    }
  CHECK(recount.weak_correct == report.counts.weak_correct);
  CHECK(recount.weak_total == report.counts.weak_total);
  CHECK(recount.strong_rejected == report.counts.strong_rejected);
  CHECK(recount.strong_total == report.counts.strong_total);

  // Running metrics on the last batch agree with the final counts.
  Metrics final = metrics(report.counts);
  const BatchResult& last = report.batches.back();
  REQUIRE(last.acc_s.has_value());
  REQUIRE(last.acc_n.has_value());
  CHECK(*last.acc_s == doctest::Approx(final.acc_s));
  CHECK(*last.acc_n == doctest::Approx(final.acc_n));
  CHECK(*last.acc_h == doctest::Approx(final.acc_h));
}

TEST_CASE("per-sample scores respect the expanded-bank invariant") {
  RunReport report = run_one_pass(pipeline().pre, pipeline().target, small_config());
  for (const auto& batch : report.batches) {
    CHECK(batch.pair_cosine >= -1.0);
    CHECK(batch.pair_cosine <= 1.0);
    CHECK(batch.queue_len <= small_config().queue_capacity);
    for (const auto& s : batch.samples) {
      // More prototypes can only lower the outlier score.
      CHECK(s.os_hat <= s.os + 1e-12);
      CHECK(s.os >= 0.0);
      CHECK(s.os <= 1.0 + 1e-12);
    }
  }
  // With weak and strong samples in the window, a threshold must exist by
  // the end of the stream.
  CHECK(report.batches.back().tau_star.has_value());
}

TEST_CASE("predictions are recorded before the gradient step") {
  // An adapting session and a frozen one see identical first batches: the
  // first update can only influence later batches.
  AdaptConfig adapting = small_config();
  AdaptConfig frozen = small_config();
  frozen.ps = false;
  frozen.cs = false;

  AdaptSession a(pipeline().pre, adapting);
  AdaptSession f(pipeline().pre, frozen);
  std::vector<Record> batch(pipeline().target.records.begin(),
                            pipeline().target.records.begin() + 8);
  BatchResult ra = a.adapt_batch(batch);
  BatchResult rf = f.adapt_batch(batch);

  REQUIRE(ra.samples.size() == rf.samples.size());
  for (std::size_t i = 0; i < ra.samples.size(); ++i) {
    CHECK(ra.samples[i].predicted == rf.samples[i].predicted);
    CHECK(ra.samples[i].os == rf.samples[i].os);
    CHECK(ra.samples[i].os_hat == rf.samples[i].os_hat);
    CHECK(ra.features[i] == rf.features[i]);
  }
  CHECK(ra.pair_cosine == rf.pair_cosine);
}

TEST_CASE("runs are bitwise reproducible") {
  RunReport r1 = run_one_pass(pipeline().pre, pipeline().target, small_config());
  RunReport r2 = run_one_pass(pipeline().pre, pipeline().target, small_config());

  REQUIRE(r1.batches.size() == r2.batches.size());
  for (std::size_t b = 0; b < r1.batches.size(); ++b) {
    const BatchResult& x = r1.batches[b];
    const BatchResult& y = r2.batches[b];
    CHECK(x.total == y.total);
    CHECK(x.pair_cosine == y.pair_cosine);
    CHECK(x.queue_len == y.queue_len);
    CHECK(x.tau_star == y.tau_star);
    REQUIRE(x.samples.size() == y.samples.size());
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
      CHECK(x.samples[i].predicted == y.samples[i].predicted);
      CHECK(x.samples[i].os == y.samples[i].os);
    }
  }
  CHECK(r1.counts.weak_correct == r2.counts.weak_correct);
  CHECK(r1.counts.strong_rejected == r2.counts.strong_rejected);
}

TEST_CASE("empty batches are rejected") {
  AdaptSession session(pipeline().pre, small_config());
  CHECK(thrown_code([&] { session.adapt_batch({}); }) == "EmptyBatch");
}
