#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "owdcl/numerics.hpp"

namespace owdcl {

struct StrongPrototype {
  std::uint64_t id = 0;  // monotonically increasing, survives eviction
  FeatureVector feature; // unit-norm snapshot
};

// Fixed source prototypes plus a bounded FIFO queue of strong-OOD prototypes.
// Source entries are immutable after construction; strong entries are frozen
// snapshots that are only ever appended or evicted, never updated.
class PrototypeBank {
 public:
  PrototypeBank(std::vector<FeatureVector> source, std::size_t strong_capacity);

  const std::vector<FeatureVector>& source() const { return source_; }
  const std::deque<StrongPrototype>& strong() const { return strong_; }
  std::size_t strong_capacity() const { return strong_capacity_; }
  std::size_t total_size() const { return source_.size() + strong_.size(); }

  // Normalizes f, appends it (evicting the oldest entry when at capacity) and
  // returns the new prototype's stable id.
  std::uint64_t push_strong(const FeatureVector& f);

  // Queue position of a live strong prototype, or nullopt if already evicted.
  std::optional<std::size_t> find_strong(std::uint64_t id) const;

 private:
  std::vector<FeatureVector> source_;
  std::deque<StrongPrototype> strong_;
  std::size_t strong_capacity_;
  std::uint64_t next_id_ = 0;
};

// Sliding window of recent outlier scores with an optimal two-cluster split.
// The threshold minimizes the sum of within-cluster population variances over
// the grid {0, 0.01, ..., 1}; it stays undefined (and assignment treats every
// sample as weak) until the window holds two distinct values.
class OutlierTracker {
 public:
  explicit OutlierTracker(std::size_t window_capacity = 512);

  // Appends a batch of scores (clamped to [0,1], oldest evicted beyond the
  // window capacity) and re-estimates the threshold. The previous threshold
  // is retained when no valid two-cluster split exists.
  void update(const std::vector<double>& scores);

  std::optional<double> tau() const { return tau_; }
  const std::deque<double>& window() const { return window_; }
  std::size_t window_capacity() const { return window_capacity_; }

  // One entry per update() call: the threshold after that update (no value
  // while still undefined).
  const std::vector<std::optional<double>>& history() const { return history_; }

  // Pure grid scan over a window snapshot in insertion order. Candidates that
  // leave a cluster empty are skipped; ties resolve to the upper median of the
  // minimizer plateau. Returns nullopt when every candidate is skipped.
  static std::optional<double> optimal_threshold(const std::vector<double>& values);

 private:
  std::deque<double> window_;
  std::size_t window_capacity_;
  std::optional<double> tau_;
  std::vector<std::optional<double>> history_;
};

struct PseudoLabel {
  enum class Kind { Weak, StrongExisting, StrongNew };
  Kind kind = Kind::Weak;
  int source_class = 0;         // 1-based, meaningful for Weak only
  std::uint64_t strong_id = 0;  // stable prototype id, meaningful for Strong*
};

// Source class with the highest cosine similarity to f; ties break to the
// lowest class index. Returns (1-based class, similarity).
std::pair<int, double> nearest_source(const FeatureVector& f, const PrototypeBank& bank);

// Pseudo-label assignment for one sample. Weak when the outlier score against
// the source prototypes is at or below the threshold (or while the threshold
// is still undefined); otherwise the sample is strong OOD and either joins the
// nearest queue prototype or spawns a new one when even the queue looks far
// (score against the queue above the same threshold). May mutate the bank.
PseudoLabel assign(const FeatureVector& f, PrototypeBank& bank, const OutlierTracker& tracker);

// Inspection dump: source and strong prototype arrays plus the threshold
// history, serialized as a JSON document.
std::string bank_to_json(const PrototypeBank& bank, const OutlierTracker& tracker);

}  // namespace owdcl
