#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "owdcl/augment.hpp"
#include "owdcl/rng.hpp"

namespace owdcl {

enum class CorruptionKind { GaussianNoise, BoxBlur, ContrastReduce };

const char* corruption_kind_name(CorruptionKind kind);
CorruptionKind parse_corruption_kind(const std::string& name);

// Desk-scale stand-in for a corrupted-image benchmark: Gaussian-blob classes
// for the source domain, the same classes under corruption as weak OOD, and
// grating patterns (a disjoint generative family) as strong OOD.
struct DatasetSpec {
  std::size_t num_source_classes = 6;
  std::size_t num_strong_classes = 3;
  std::size_t samples_per_class = 100;  // source domain, per class
  std::size_t height = 12;
  std::size_t width = 12;
  CorruptionKind corruption = CorruptionKind::BoxBlur;
  int severity = 3;  // 0 disables the corruption, 1..5 scale it
  double strong_ratio = 0.5;
  std::size_t target_count = 2560;
  std::uint64_t seed = 1337;
};

void validate_spec(const DatasetSpec& spec);

struct Record {
  int label = 0;  // 1..m source classes, m+1..m+n strong; ground truth for
                  // metric accumulation only
  Raster pixels;
};

struct Dataset {
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::uint16_t num_source_classes = 0;
  std::uint16_t num_strong_classes = 0;
  std::vector<Record> records;
};

// Per-class blob templates, deterministic under DatasetSpec::seed.
std::vector<Raster> make_source_templates(const DatasetSpec& spec);

// Clean source domain: template plus per-sample jitter, balanced classes in
// class-major order. Pixels clamped to [0,1] and rounded through f32 so the
// in-memory dataset round-trips the file format bit-exactly.
Dataset generate_source(const DatasetSpec& spec);

// Target stream: corrupted fresh source-class samples (weak OOD) mixed with
// corrupted grating samples (strong OOD) at the requested ratio, shuffled
// under DatasetSpec::seed.
Dataset generate_target(const DatasetSpec& spec, const std::vector<Raster>& source_templates);

// One corruption application; severity 0 returns the input unchanged. Noise
// draws come from the supplied rng stream.
Raster apply_corruption(const Raster& img, CorruptionKind kind, int severity,
                        DeterministicRng& rng);

// Little-endian binary dataset file, magic "OWDS". Bit-exact round-trip.
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);

}  // namespace owdcl
