#include "owdcl/prototypes.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "owdcl/error.hpp"
#include "owdcl/losses.hpp"

namespace owdcl {

PrototypeBank::PrototypeBank(std::vector<FeatureVector> source, std::size_t strong_capacity)
    : source_(std::move(source)), strong_capacity_(strong_capacity) {
  if (source_.empty()) fail(ErrorCode::EmptyPrototypeBank, "bank needs source prototypes");
  if (strong_capacity_ == 0) fail(ErrorCode::SpecInvalid, "strong queue capacity must be positive");
  for (const auto& p : source_) {
    if (std::abs(norm2(p) - 1.0) > 1e-6)
      fail(ErrorCode::NonUnitNorm, "source prototypes must be unit-norm");
  }
}

std::uint64_t PrototypeBank::push_strong(const FeatureVector& f) {
  if (f.size() != source_.front().size())
    fail(ErrorCode::DimensionMismatch, "strong prototype dimension differs from source");
  if (strong_.size() == strong_capacity_) strong_.pop_front();
  StrongPrototype p;
  p.id = next_id_++;
  p.feature = l2_normalize(f);
  strong_.push_back(std::move(p));
  return strong_.back().id;
}

std::optional<std::size_t> PrototypeBank::find_strong(std::uint64_t id) const {
  for (std::size_t i = 0; i < strong_.size(); ++i)
    if (strong_[i].id == id) return i;
  return std::nullopt;
}

OutlierTracker::OutlierTracker(std::size_t window_capacity) : window_capacity_(window_capacity) {
  if (window_capacity_ < 2) fail(ErrorCode::SpecInvalid, "score window must hold at least 2");
}

void OutlierTracker::update(const std::vector<double>& scores) {
  for (double s : scores) {
    window_.push_back(std::clamp(s, 0.0, 1.0));
    if (window_.size() > window_capacity_) window_.pop_front();
  }
  std::vector<double> snapshot(window_.begin(), window_.end());
  if (auto t = optimal_threshold(snapshot)) tau_ = t;
  history_.push_back(tau_);
}

std::optional<double> OutlierTracker::optimal_threshold(const std::vector<double>& values) {
  if (values.size() < 2) return std::nullopt;

  double best = 0.0;
  bool have_best = false;
  std::vector<int> plateau;  // grid indices achieving the current minimum

  for (int gi = 0; gi <= 100; ++gi) {
    const double tau = gi * 0.01;
    // Two-pass population variance per cluster, in insertion order.
    double sum_lo = 0.0, sum_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    for (double v : values) {
      if (v <= tau) {
        sum_lo += v;
        ++n_lo;
      } else {
        sum_hi += v;
        ++n_hi;
      }
    }
    if (n_lo == 0 || n_hi == 0) continue;
    const double mean_lo = sum_lo / static_cast<double>(n_lo);
    const double mean_hi = sum_hi / static_cast<double>(n_hi);
    double ss_lo = 0.0, ss_hi = 0.0;
    for (double v : values) {
      if (v <= tau) {
        const double d = v - mean_lo;
        ss_lo += d * d;
      } else {
        const double d = v - mean_hi;
        ss_hi += d * d;
      }
    }
    const double objective =
        ss_lo / static_cast<double>(n_lo) + ss_hi / static_cast<double>(n_hi);
    if (!have_best || objective < best) {
      best = objective;
      have_best = true;
      plateau.assign(1, gi);
    } else if (objective == best) {
      plateau.push_back(gi);
    }
  }
  if (!have_best) return std::nullopt;
  return plateau[plateau.size() / 2] * 0.01;
}

std::pair<int, double> nearest_source(const FeatureVector& f, const PrototypeBank& bank) {
  const auto& protos = bank.source();
  int best_class = 1;
  double best_sim = cosine_sim(f, protos.front());
  for (std::size_t k = 1; k < protos.size(); ++k) {
    const double sim = cosine_sim(f, protos[k]);
    if (sim > best_sim) {
      best_sim = sim;
      best_class = static_cast<int>(k) + 1;
    }
  }
  return {best_class, best_sim};
}

PseudoLabel assign(const FeatureVector& f, PrototypeBank& bank, const OutlierTracker& tracker) {
  const double os = outlier_score(f, bank.source());

  PseudoLabel label;
  // Cold start: with no threshold yet, everything is treated as weak.
  if (!tracker.tau() || os <= *tracker.tau()) {
    label.kind = PseudoLabel::Kind::Weak;
    label.source_class = nearest_source(f, bank).first;
    return label;
  }

  // Strong OOD: join the nearest queue prototype unless even the queue is far.
  const auto& queue = bank.strong();
  if (!queue.empty()) {
    std::size_t best_idx = 0;
    double best_sim = cosine_sim(f, queue.front().feature);
    for (std::size_t i = 1; i < queue.size(); ++i) {
      const double sim = cosine_sim(f, queue[i].feature);
      if (sim > best_sim) {
        best_sim = sim;
        best_idx = i;
      }
    }
    if (1.0 - best_sim <= *tracker.tau()) {
      label.kind = PseudoLabel::Kind::StrongExisting;
      label.strong_id = queue[best_idx].id;
      return label;
    }
  }
  label.kind = PseudoLabel::Kind::StrongNew;
  label.strong_id = bank.push_strong(f);
  return label;
}

std::string bank_to_json(const PrototypeBank& bank, const OutlierTracker& tracker) {
  nlohmann::json doc;
  doc["source"] = nlohmann::json::array();
  for (const auto& p : bank.source()) doc["source"].push_back(p);
  doc["strong"] = nlohmann::json::array();
  for (const auto& sp : bank.strong()) {
    nlohmann::json entry;
    entry["id"] = sp.id;
    entry["feature"] = sp.feature;
    doc["strong"].push_back(entry);
  }
  doc["strong_capacity"] = bank.strong_capacity();
  doc["tau_history"] = nlohmann::json::array();
  for (const auto& t : tracker.history()) {
    if (t)
      doc["tau_history"].push_back(*t);
    else
      doc["tau_history"].push_back(nullptr);
  }
  return doc.dump(2);
}

}  // namespace owdcl
