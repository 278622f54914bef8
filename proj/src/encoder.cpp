#include "owdcl/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include "owdcl/error.hpp"
#include "owdcl/rng.hpp"

namespace owdcl {

namespace {

struct ForwardCache {
  std::vector<double> x;  // flattened input
  std::vector<double> h;  // tanh hidden activations
  FeatureVector f;        // raw feature
};

ForwardCache run_forward(const EncoderParams& p, const Raster& img) {
  validate_raster(img);
  if (img.pixels.size() != p.config.input_dim)
    fail(ErrorCode::DimensionMismatch,
         "input has " + std::to_string(img.pixels.size()) + " pixels, encoder expects " +
             std::to_string(p.config.input_dim));
  ForwardCache c;
  c.x = img.pixels;
  c.h = matvec(p.w1, c.x);
  for (std::size_t j = 0; j < c.h.size(); ++j) c.h[j] = std::tanh(c.h[j] + p.b1[j]);
  c.f = matvec(p.w2, c.h);
  for (std::size_t j = 0; j < c.f.size(); ++j) c.f[j] += p.b2[j];
  return c;
}

std::vector<double> head_logits(const EncoderParams& p, const FeatureVector& f) {
  std::vector<double> logits = matvec(p.w3, f);
  for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += p.b3[k];
  return logits;
}

// Accumulates the gradient of one sample's raw feature into the parameter
// gradients, back through the feature layer and the tanh hidden layer.
void backprop_feature(const EncoderParams& p, const ForwardCache& c, const FeatureVector& g_f,
                      GradientSet& g) {
  for (std::size_t r = 0; r < p.config.feature_dim; ++r) {
    g.b2[r] += g_f[r];
    for (std::size_t j = 0; j < p.config.hidden_dim; ++j) g.w2.at(r, j) += g_f[r] * c.h[j];
  }
  std::vector<double> g_h = matvec_transpose(p.w2, g_f);
  for (std::size_t r = 0; r < p.config.hidden_dim; ++r) {
    const double g_pre = g_h[r] * (1.0 - c.h[r] * c.h[r]);
    g.b1[r] += g_pre;
    for (std::size_t j = 0; j < p.config.input_dim; ++j) g.w1.at(r, j) += g_pre * c.x[j];
  }
}

void backprop_logits(const EncoderParams& p, const ForwardCache& c,
                     const std::vector<double>& g_logits, GradientSet& g) {
  for (std::size_t r = 0; r < p.config.num_classes; ++r) {
    g.b3[r] += g_logits[r];
    for (std::size_t j = 0; j < p.config.feature_dim; ++j) g.w3.at(r, j) += g_logits[r] * c.f[j];
  }
  backprop_feature(p, c, matvec_transpose(p.w3, g_logits), g);
}

// Gradient through v = f / ||f||: project out the radial component.
FeatureVector normalize_backward(const FeatureVector& f, const FeatureVector& v,
                                 const FeatureVector& g_v) {
  const double n = norm2(f);
  const double radial = dot(g_v, v);
  FeatureVector g_f(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) g_f[j] = (g_v[j] - radial * v[j]) / n;
  return g_f;
}

void axpy(FeatureVector& acc, const FeatureVector& x, double scale) {
  for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += scale * x[j];
}

// Shared value/gradient path for the masked composite adaptation loss.
double composite_impl(const EncoderParams& params, const BatchContext& ctx, const LossMask& mask,
                      BackwardResult* out) {
  if (ctx.inputs.empty()) fail(ErrorCode::EmptyBatch, "adaptation batch is empty");
  if (ctx.labels.size() != ctx.inputs.size())
    fail(ErrorCode::DimensionMismatch, "one pseudo-label per pair required");
  const bool needs_bank = mask.nt || mask.pc_wea || mask.pc_str;
  if (needs_bank && ctx.bank == nullptr)
    fail(ErrorCode::SpecInvalid, "prototype bank required for the active loss terms");

  const std::size_t b = ctx.inputs.size();
  const std::size_t d = params.config.feature_dim;
  const bool want_grads = out != nullptr;

  std::vector<ForwardCache> cache_a(b), cache_b(b);
  std::vector<FeaturePair> norm_pairs(b);
  for (std::size_t i = 0; i < b; ++i) {
    cache_a[i] = run_forward(params, ctx.inputs[i].a);
    cache_b[i] = run_forward(params, ctx.inputs[i].b);
    norm_pairs[i] = {l2_normalize(cache_a[i].f), l2_normalize(cache_b[i].f)};
  }

  // Gradients with respect to the normalized view features; the raw-feature
  // contribution of the divergence term is kept separate.
  std::vector<FeatureVector> gv_a, gv_b, graw_a;
  if (want_grads) {
    gv_a.assign(b, FeatureVector(d, 0.0));
    gv_b.assign(b, FeatureVector(d, 0.0));
    graw_a.assign(b, FeatureVector(d, 0.0));
  }

  LossTerms terms;

  if (mask.ps) {
    if (want_grads) {
      std::vector<FeatureVector> ga, gb;
      terms.ps =
          nt_xent_pairs_grad(norm_pairs, ctx.weights.gamma1, ctx.weights.alpha1, ga, gb);
      for (std::size_t i = 0; i < b; ++i) {
        axpy(gv_a[i], ga[i], 1.0);
        axpy(gv_b[i], gb[i], 1.0);
      }
    } else {
      terms.ps = nt_xent_pairs(norm_pairs, ctx.weights.gamma1, ctx.weights.alpha1);
    }
  }

  std::vector<int> weak_class(b, 0);
  for (std::size_t i = 0; i < b; ++i)
    if (ctx.labels[i].kind == PseudoLabel::Kind::Weak) weak_class[i] = ctx.labels[i].source_class;

  if (mask.nt) {
    const BatchCenters centers = batch_class_centers(norm_pairs, weak_class);
    if (!centers.empty()) {
      if (want_grads) {
        std::map<int, FeatureVector> g_center;
        terms.nt = nt_xent_clusters_grad(centers, ctx.bank->source(), ctx.weights.gamma2,
                                         ctx.weights.alpha2, g_center);
        for (std::size_t i = 0; i < b; ++i) {
          if (weak_class[i] == 0) continue;
          const double share =
              1.0 / (2.0 * static_cast<double>(centers.pair_count.at(weak_class[i])));
          const FeatureVector& gc = g_center.at(weak_class[i]);
          axpy(gv_a[i], gc, share);
          axpy(gv_b[i], gc, share);
        }
      } else {
        terms.nt = nt_xent_clusters(centers, ctx.bank->source(), ctx.weights.gamma2,
                                    ctx.weights.alpha2);
      }
    }
  }

  if (mask.pc_wea) {
    std::vector<std::size_t> weak_idx;
    for (std::size_t i = 0; i < b; ++i)
      if (weak_class[i] != 0) weak_idx.push_back(i);
    if (!weak_idx.empty()) {
      const double inv = 1.0 / static_cast<double>(weak_idx.size());
      double acc = 0.0;
      for (std::size_t i : weak_idx) {
        const auto label = static_cast<std::size_t>(weak_class[i] - 1);
        if (want_grads) {
          FeatureVector g;
          acc += prototype_nll_grad(norm_pairs[i].first, ctx.bank->source(), label,
                                    ctx.weights.delta, g);
          axpy(gv_a[i], g, inv);
        } else {
          acc += prototype_nll(norm_pairs[i].first, ctx.bank->source(), label, ctx.weights.delta);
        }
      }
      terms.pc_wea = acc * inv;
    }
  }

  if (mask.pc_str) {
    // Frozen snapshot of the queue; samples whose prototype was already
    // evicted contribute nothing.
    std::vector<FeatureVector> subset;
    std::map<std::uint64_t, std::size_t> index_of;
    for (const auto& sp : ctx.bank->strong()) {
      index_of[sp.id] = subset.size();
      subset.push_back(sp.feature);
    }
    std::vector<std::pair<std::size_t, std::size_t>> strong_idx;  // sample, queue index
    for (std::size_t i = 0; i < b; ++i) {
      if (ctx.labels[i].kind == PseudoLabel::Kind::Weak) continue;
      auto it = index_of.find(ctx.labels[i].strong_id);
      if (it != index_of.end()) strong_idx.emplace_back(i, it->second);
    }
    if (!strong_idx.empty()) {
      const double inv = 1.0 / static_cast<double>(strong_idx.size());
      double acc = 0.0;
      for (const auto& [i, label] : strong_idx) {
        if (want_grads) {
          FeatureVector g;
          acc += prototype_nll_grad(norm_pairs[i].first, subset, label, ctx.weights.delta, g);
          axpy(gv_a[i], g, inv);
        } else {
          acc += prototype_nll(norm_pairs[i].first, subset, label, ctx.weights.delta);
        }
      }
      terms.pc_str = acc * inv;
    }
  }

  GaussianStats updated_target = ctx.target_stats;
  if (mask.kld) {
    // Target Gaussian over the weak-labeled original-view raw features;
    // update first, then evaluate the divergence on the updated statistics.
    std::vector<FeatureVector> weak_feats;
    std::vector<std::size_t> weak_idx;
    for (std::size_t i = 0; i < b; ++i) {
      if (weak_class[i] != 0) {
        weak_feats.push_back(cache_a[i].f);
        weak_idx.push_back(i);
      }
    }
    if (!weak_feats.empty()) {
      updated_target = ema_update_gaussian(ctx.target_stats, weak_feats, ctx.beta);
      terms.kld = kl_diag_gaussian(ctx.source_stats, updated_target);
      if (want_grads) {
        const double n = static_cast<double>(weak_feats.size());
        // Raw batch moments decide where the variance floor cuts the chain.
        FeatureVector bmean(d, 0.0), bvar(d, 0.0);
        for (const auto& f : weak_feats) axpy(bmean, f, 1.0);
        for (double& x : bmean) x /= n;
        for (const auto& f : weak_feats)
          for (std::size_t j = 0; j < d; ++j) {
            const double dv = f[j] - bmean[j];
            bvar[j] += dv * dv;
          }
        for (double& x : bvar) x /= n;

        const double blend = 1.0 - ctx.beta;
        for (std::size_t j = 0; j < d; ++j) {
          const double vq = updated_target.variance[j];
          const double dm = updated_target.mean[j] - ctx.source_stats.mean[j];
          const double g_mean = dm / vq;
          const double g_var =
              0.5 * (1.0 / vq -
                     (ctx.source_stats.variance[j] + dm * dm) / (vq * vq));
          const bool var_chains = bvar[j] > kVarianceFloor;
          for (std::size_t s = 0; s < weak_feats.size(); ++s) {
            double g = g_mean * blend / n;
            if (var_chains)
              g += g_var * blend * 2.0 / n * (weak_feats[s][j] - bmean[j]);
            graw_a[weak_idx[s]][j] += g;
          }
        }
      }
    }
  }

  const double total = total_loss(terms);
  if (!std::isfinite(total))
    fail(ErrorCode::NonFiniteLoss, "composite loss diverged (" + std::to_string(total) + ")");

  if (want_grads) {
    out->grads = zero_gradients(params.config);
    for (std::size_t i = 0; i < b; ++i) {
      FeatureVector g_fa = normalize_backward(cache_a[i].f, norm_pairs[i].first, gv_a[i]);
      axpy(g_fa, graw_a[i], 1.0);
      backprop_feature(params, cache_a[i], g_fa, out->grads);
      const FeatureVector g_fb =
          normalize_backward(cache_b[i].f, norm_pairs[i].second, gv_b[i]);
      backprop_feature(params, cache_b[i], g_fb, out->grads);
    }
    out->terms = terms;
    out->updated_target = updated_target;
  }
  return total;
}

void init_weight(Matrix& w, DeterministicRng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
  for (double& x : w.data) x = rng.uniform(-bound, bound);
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double m = logits.front();
  for (double x : logits) m = std::max(m, x);
  double z = 0.0;
  std::vector<double> p(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    z += p[k];
  }
  for (double& x : p) x /= z;
  return p;
}

std::size_t argmax_first(const std::vector<double>& xs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < xs.size(); ++k)
    if (xs[k] > xs[best]) best = k;
  return best;
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

struct ByteReader {
  const std::string& buf;
  std::size_t pos = 0;

  std::uint32_t u32() {
    if (pos + 4 > buf.size()) fail(ErrorCode::FormatError, "checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
      v = (v << 8) | static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)]);
    pos += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
};

void put_tensor(std::string& out, std::size_t rows, std::size_t cols,
                const std::vector<double>& data) {
  put_u32(out, static_cast<std::uint32_t>(rows));
  put_u32(out, static_cast<std::uint32_t>(cols));
  for (double x : data) put_f32(out, static_cast<float>(x));
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams p;
  p.config = config;
  p.w1 = Matrix(config.hidden_dim, config.input_dim);
  p.b1.assign(config.hidden_dim, 0.0);
  p.w2 = Matrix(config.feature_dim, config.hidden_dim);
  p.b2.assign(config.feature_dim, 0.0);
  p.w3 = Matrix(config.num_classes, config.feature_dim);
  p.b3.assign(config.num_classes, 0.0);
  DeterministicRng rng(seed);
  init_weight(p.w1, rng);
  init_weight(p.w2, rng);
  init_weight(p.w3, rng);
  return p;
}

GradientSet zero_gradients(const EncoderConfig& config) {
  GradientSet g;
  g.w1 = Matrix(config.hidden_dim, config.input_dim);
  g.b1.assign(config.hidden_dim, 0.0);
  g.w2 = Matrix(config.feature_dim, config.hidden_dim);
  g.b2.assign(config.feature_dim, 0.0);
  g.w3 = Matrix(config.num_classes, config.feature_dim);
  g.b3.assign(config.num_classes, 0.0);
  return g;
}

FeatureVector forward(const EncoderParams& params, const Raster& x) {
  return run_forward(params, x).f;
}

std::vector<double> forward_logits(const EncoderParams& params, const Raster& x) {
  return head_logits(params, run_forward(params, x).f);
}

EncoderParams sgd_step(const EncoderParams& params, const GradientSet& grads, double lr) {
  EncoderParams p = params;
  auto apply = [lr](std::vector<double>& dst, const std::vector<double>& g) {
    if (dst.size() != g.size())
      fail(ErrorCode::DimensionMismatch, "gradient shape differs from parameters");
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= lr * g[j];
  };
  apply(p.w1.data, grads.w1.data);
  apply(p.b1, grads.b1);
  apply(p.w2.data, grads.w2.data);
  apply(p.b2, grads.b2);
  apply(p.w3.data, grads.w3.data);
  apply(p.b3, grads.b3);
  return p;
}

BackwardResult backward(const EncoderParams& params, const BatchContext& ctx,
                        const LossMask& mask) {
  BackwardResult result;
  composite_impl(params, ctx, mask, &result);
  return result;
}

double composite_loss_value(const EncoderParams& params, const BatchContext& ctx,
                            const LossMask& mask) {
  return composite_impl(params, ctx, mask, nullptr);
}

PretrainOutput pretrain(const std::vector<LabeledSample>& data, const EncoderConfig& config,
                        const PretrainConfig& train) {
  if (data.empty()) fail(ErrorCode::EmptyBatch, "pretraining set is empty");
  std::vector<std::size_t> class_count(config.num_classes, 0);
  for (const auto& s : data) {
    if (s.label < 1 || static_cast<std::size_t>(s.label) > config.num_classes)
      fail(ErrorCode::SpecInvalid,
           "label " + std::to_string(s.label) + " outside 1.." +
               std::to_string(config.num_classes));
    ++class_count[static_cast<std::size_t>(s.label) - 1];
  }
  for (std::size_t k = 0; k < class_count.size(); ++k)
    if (class_count[k] < 2)
      fail(ErrorCode::InsufficientClassSamples,
           "class " + std::to_string(k + 1) + " has " + std::to_string(class_count[k]) +
               " samples, need at least 2");

  EncoderParams params = init_params(config, mix_seed(train.seed, 0));
  DeterministicRng shuffle_rng(mix_seed(train.seed, 1));

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      const std::size_t end = std::min(start + train.batch_size, order.size());
      const double inv = 1.0 / static_cast<double>(end - start);
      GradientSet grads = zero_gradients(config);
      for (std::size_t pos = start; pos < end; ++pos) {
        const LabeledSample& s = data[order[pos]];
        const ForwardCache cache = run_forward(params, s.image);
        std::vector<double> g_logits = softmax(head_logits(params, cache.f));
        g_logits[static_cast<std::size_t>(s.label) - 1] -= 1.0;
        for (double& g : g_logits) g *= inv;
        backprop_logits(params, cache, g_logits, grads);
      }
      params = sgd_step(params, grads, train.lr);
    }
  }

  PretrainOutput out;
  std::vector<FeatureVector> class_sum(config.num_classes,
                                       FeatureVector(config.feature_dim, 0.0));
  std::vector<FeatureVector> all_features;
  all_features.reserve(data.size());
  std::size_t correct = 0;
  for (const auto& s : data) {
    const ForwardCache cache = run_forward(params, s.image);
    axpy(class_sum[static_cast<std::size_t>(s.label) - 1], cache.f, 1.0);
    if (argmax_first(head_logits(params, cache.f)) == static_cast<std::size_t>(s.label) - 1)
      ++correct;
    all_features.push_back(cache.f);
  }
  out.prototypes.reserve(config.num_classes);
  for (std::size_t k = 0; k < config.num_classes; ++k) {
    FeatureVector mean = class_sum[k];
    for (double& x : mean) x /= static_cast<double>(class_count[k]);
    out.prototypes.push_back(l2_normalize(mean));
  }
  out.source_stats = stats_from_batch(all_features);
  out.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  out.params = std::move(params);
  return out;
}

void save_checkpoint(const std::string& path, const EncoderParams& params) {
  std::string buf;
  buf += "OWCK";
  put_u32(buf, kCheckpointVersion);
  put_u32(buf, 6);
  put_tensor(buf, params.w1.rows, params.w1.cols, params.w1.data);
  put_tensor(buf, params.b1.size(), 1, params.b1);
  put_tensor(buf, params.w2.rows, params.w2.cols, params.w2.data);
  put_tensor(buf, params.b2.size(), 1, params.b2);
  put_tensor(buf, params.w3.rows, params.w3.cols, params.w3.data);
  put_tensor(buf, params.b3.size(), 1, params.b3);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

EncoderParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 4 || buf.compare(0, 4, "OWCK") != 0)
    fail(ErrorCode::FormatError, "bad checkpoint magic, expected \"OWCK\"");
  ByteReader r{buf, 4};
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    fail(ErrorCode::FormatError, "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t layers = r.u32();
  if (layers != 6)
    fail(ErrorCode::FormatError,
         "expected 6 tensors, found " + std::to_string(layers));

  auto read_tensor = [&r](Matrix& m) {
    m.rows = r.u32();
    m.cols = r.u32();
    if (m.rows == 0 || m.cols == 0) fail(ErrorCode::FormatError, "empty tensor in checkpoint");
    m.data.resize(m.rows * m.cols);
    for (double& x : m.data) x = static_cast<double>(r.f32());
  };
  auto read_bias = [&read_tensor](FeatureVector& b, std::size_t expect) {
    Matrix m;
    read_tensor(m);
    if (m.cols != 1 || m.rows != expect)
      fail(ErrorCode::FormatError, "bias shape does not match its weight matrix");
    b = std::move(m.data);
  };

  EncoderParams p;
  read_tensor(p.w1);
  read_bias(p.b1, p.w1.rows);
  read_tensor(p.w2);
  read_bias(p.b2, p.w2.rows);
  read_tensor(p.w3);
  read_bias(p.b3, p.w3.rows);
  if (r.pos != buf.size()) fail(ErrorCode::FormatError, "trailing bytes after checkpoint data");
  if (p.w2.cols != p.w1.rows || p.w3.cols != p.w2.rows)
    fail(ErrorCode::FormatError, "layer shapes do not chain");

  p.config.input_dim = p.w1.cols;
  p.config.hidden_dim = p.w1.rows;
  p.config.feature_dim = p.w2.rows;
  p.config.num_classes = p.w3.rows;
  return p;
}

}  // namespace owdcl
