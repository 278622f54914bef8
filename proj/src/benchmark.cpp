#include "owdcl/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "owdcl/error.hpp"

namespace owdcl {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSampleJitter = 0.02;
// Stripe carrier painted inside the textured half of each class pair. The
// wavelength sits where severity-3 blur attenuates it to roughly 40%: weak
// enough that a frozen model loses most of the within-pair margin, strong
// enough that a residual signal survives for self-training to re-sharpen.
constexpr double kCarrierWavelength = 7.0;
constexpr double kCarrierContrast = 0.9;

// Seed streams under the master seed; generation order is part of the format.
enum SeedStream : std::uint64_t {
  kSourceTemplates = 0,
  kSourceSamples = 1,
  kStrongTemplates = 2,
  kTargetWeak = 3,
  kTargetStrong = 4,
  kTargetShuffle = 5,
};

double round_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

void finalize_pixels(Raster& img) {
  for (double& p : img.pixels) p = round_f32(std::clamp(p, 0.0, 1.0));
}

// Class templates pair a coarse cue with a fine one. Classes 2j and 2j+1
// share a two-blob constellation (blob centers on rings at constellation-
// specific angles), and the odd class of each pair additionally modulates
// its blobs with a fine stripe carrier. The constellation survives blurring
// and pixel noise, while the carrier is what corruption chews on, so a
// corrupted stream degrades the within-pair distinction first. Asymmetric
// two-blob layouts stay distinct under horizontal flips, which keeps the
// augmentation policy from folding two constellations onto each other.
Raster blob_template(std::size_t h, std::size_t w, std::size_t class_index,
                     std::size_t class_count, DeterministicRng& rng) {
  Raster img;
  img.height = h;
  img.width = w;
  img.pixels.assign(h * w, rng.uniform(0.05, 0.20));
  const double cy0 = static_cast<double>(h - 1) / 2.0;
  const double cx0 = static_cast<double>(w - 1) / 2.0;
  const double extent = static_cast<double>(std::min(h, w) - 1);
  const std::size_t pairs = (class_count + 1) / 2;
  const std::size_t constellation = class_index / 2;
  const bool textured = (class_index % 2) == 1;
  const double base_angle =
      2.0 * kPi * static_cast<double>(constellation) / static_cast<double>(pairs);
  const double golden = 2.399963229728653;  // separates the two blobs of a class
  const double carrier_phase = rng.uniform(0.0, 2.0 * kPi);
  for (int blob = 0; blob < 2; ++blob) {
    const double angle = base_angle + golden * blob + rng.uniform(-0.15, 0.15);
    const double radius = (blob == 0 ? 0.30 : 0.18) * extent;
    const double cy = cy0 + radius * std::sin(angle);
    const double cx = cx0 + radius * std::cos(angle);
    const double sigma = rng.uniform(0.11, 0.16) * static_cast<double>(std::min(h, w));
    const double amp = rng.uniform(0.5, 0.8);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double dy = static_cast<double>(y) - cy;
        const double dx = static_cast<double>(x) - cx;
        const double mask = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
        double v = amp * mask;
        if (textured)
          v *= 1.0 + kCarrierContrast *
                         std::sin(2.0 * kPi * static_cast<double>(x) / kCarrierWavelength +
                                  carrier_phase);
        img.at(y, x) += v;
      }
  }
  for (double& p : img.pixels) p = std::clamp(p, 0.0, 1.0);
  return img;
}

// A strong-OOD class is a grating family: fixed orientation, wavelength,
// intensity level and base phase; per sample the phase wobbles a little.
// Wavelengths are coarse (one to two cycles across the frame) so the pattern
// survives the encoder's spatial pooling instead of averaging out to gray,
// and each family carries its own intensity level as a second distinguishing
// statistic.
struct GratingSpec {
  bool checker = false;
  double angle = 0.0;
  double wavelength = 6.0;
  double wavelength2 = 6.0;  // second axis, checker only
  double level = 0.5;        // intensity midpoint
  double phase1 = 0.0;
  double phase2 = 0.0;
};

std::vector<GratingSpec> make_grating_specs(const DatasetSpec& spec) {
  DeterministicRng rng(mix_seed(spec.seed, kStrongTemplates));
  std::vector<GratingSpec> out(spec.num_strong_classes);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].checker = (k % 2) == 1;
    out[k].angle = rng.uniform(0.0, kPi);
    out[k].wavelength = rng.uniform(5.0, 9.0);
    out[k].wavelength2 = rng.uniform(5.0, 9.0);
    out[k].level = rng.uniform(0.40, 0.60);
    out[k].phase1 = rng.uniform(0.0, 2.0 * kPi);
    out[k].phase2 = rng.uniform(0.0, 2.0 * kPi);
  }
  return out;
}

Raster grating_sample(const GratingSpec& g, std::size_t h, std::size_t w,
                      DeterministicRng& rng) {
  const double phase1 = g.phase1 + rng.uniform(-0.05, 0.05);
  const double phase2 = g.phase2 + rng.uniform(-0.05, 0.05);
  const double amp = 0.4;
  const double ca = std::cos(g.angle);
  const double sa = std::sin(g.angle);
  Raster img;
  img.height = h;
  img.width = w;
  img.pixels.resize(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double u = ca * static_cast<double>(x) + sa * static_cast<double>(y);
      const double s1 = std::sin(2.0 * kPi * u / g.wavelength + phase1);
      double v;
      if (g.checker) {
        const double u2 = -sa * static_cast<double>(x) + ca * static_cast<double>(y);
        const double s2 = std::sin(2.0 * kPi * u2 / g.wavelength2 + phase2);
        v = g.level + amp * s1 * s2;
      } else {
        v = g.level + amp * s1;
      }
      img.at(y, x) = v + rng.normal(0.0, kSampleJitter);
    }
  return img;
}

Raster jittered_sample(const Raster& tmpl, DeterministicRng& rng) {
  Raster img = tmpl;
  for (double& p : img.pixels) p += rng.normal(0.0, kSampleJitter);
  return img;
}

Raster box_blur_pass(const Raster& img) {
  Raster out = img;
  const long h = static_cast<long>(img.height);
  const long w = static_cast<long>(img.width);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      int n = 0;
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const long yy = y + dy;
          const long xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= h || xx >= w) continue;
          acc += img.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
          ++n;
        }
      out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
          acc / static_cast<double>(n);
    }
  return out;
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  put_u16(out, static_cast<std::uint16_t>(v & 0xFFFF));
  put_u16(out, static_cast<std::uint16_t>(v >> 16));
}

struct ByteReader {
  const std::string& buf;
  std::size_t pos = 0;

  std::uint16_t u16() {
    if (pos + 2 > buf.size()) fail(ErrorCode::FormatError, "dataset file truncated");
    const auto lo = static_cast<std::uint8_t>(buf[pos]);
    const auto hi = static_cast<std::uint8_t>(buf[pos + 1]);
    pos += 2;
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }

  std::uint32_t u32() {
    const std::uint32_t lo = u16();
    const std::uint32_t hi = u16();
    return lo | (hi << 16);
  }

  float f32() {
    std::uint32_t bits = u32();
    float v;
    static_assert(sizeof(v) == sizeof(bits));
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

constexpr std::uint32_t kDatasetVersion = 1;

}  // namespace

const char* corruption_kind_name(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::GaussianNoise: return "gaussian_noise";
    case CorruptionKind::BoxBlur: return "box_blur";
    case CorruptionKind::ContrastReduce: return "contrast_reduce";
  }
  return "unknown";
}

CorruptionKind parse_corruption_kind(const std::string& name) {
  if (name == "gaussian_noise") return CorruptionKind::GaussianNoise;
  if (name == "box_blur") return CorruptionKind::BoxBlur;
  if (name == "contrast_reduce") return CorruptionKind::ContrastReduce;
  fail(ErrorCode::ConfigError, "unknown corruption \"" + name +
                                   "\", expected gaussian_noise, box_blur or contrast_reduce");
}

void validate_spec(const DatasetSpec& spec) {
  if (spec.num_source_classes < 1 || spec.num_strong_classes < 1)
    fail(ErrorCode::SpecInvalid, "need at least one source and one strong class");
  if (spec.height < 3 || spec.width < 3)
    fail(ErrorCode::SpecInvalid, "images must be at least 3x3");
  if (spec.samples_per_class < 2)
    fail(ErrorCode::SpecInvalid, "need at least 2 samples per source class");
  if (spec.severity < 0 || spec.severity > 5)
    fail(ErrorCode::SpecInvalid, "severity must be in 0..5");
  if (!(spec.strong_ratio >= 0.0 && spec.strong_ratio <= 1.0))
    fail(ErrorCode::SpecInvalid, "strong-OOD ratio must be in [0,1]");
  const std::size_t max_label = spec.num_source_classes + spec.num_strong_classes;
  if (max_label > 0xFFFF) fail(ErrorCode::SpecInvalid, "too many classes for the file format");
  if (spec.height > 0xFFFF || spec.width > 0xFFFF)
    fail(ErrorCode::SpecInvalid, "image size exceeds the file format range");
}

std::vector<Raster> make_source_templates(const DatasetSpec& spec) {
  validate_spec(spec);
  DeterministicRng rng(mix_seed(spec.seed, kSourceTemplates));
  std::vector<Raster> templates;
  templates.reserve(spec.num_source_classes);
  for (std::size_t k = 0; k < spec.num_source_classes; ++k)
    templates.push_back(
        blob_template(spec.height, spec.width, k, spec.num_source_classes, rng));
  return templates;
}

Raster apply_corruption(const Raster& img, CorruptionKind kind, int severity,
                        DeterministicRng& rng) {
  if (severity == 0) return img;
  if (severity < 0 || severity > 5) fail(ErrorCode::SpecInvalid, "severity must be in 0..5");
  switch (kind) {
    case CorruptionKind::GaussianNoise: {
      Raster out = img;
      const double sigma = 0.05 * severity;
      for (double& p : out.pixels) p += rng.normal(0.0, sigma);
      return out;
    }
    case CorruptionKind::BoxBlur: {
      Raster out = img;
      for (int pass = 0; pass < severity; ++pass) out = box_blur_pass(out);
      return out;
    }
    case CorruptionKind::ContrastReduce: {
      Raster out = img;
      const double factor = 1.0 - 0.1 * severity;
      for (double& p : out.pixels) p = 0.5 + factor * (p - 0.5);
      return out;
    }
  }
  fail(ErrorCode::SpecInvalid, "unhandled corruption kind");
}

Dataset generate_source(const DatasetSpec& spec) {
  const std::vector<Raster> templates = make_source_templates(spec);
  DeterministicRng rng(mix_seed(spec.seed, kSourceSamples));

  Dataset ds;
  ds.height = static_cast<std::uint16_t>(spec.height);
  ds.width = static_cast<std::uint16_t>(spec.width);
  ds.num_source_classes = static_cast<std::uint16_t>(spec.num_source_classes);
  ds.num_strong_classes = static_cast<std::uint16_t>(spec.num_strong_classes);
  ds.records.reserve(spec.num_source_classes * spec.samples_per_class);
  for (std::size_t k = 0; k < spec.num_source_classes; ++k)
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
      Record rec;
      rec.label = static_cast<int>(k) + 1;
      rec.pixels = jittered_sample(templates[k], rng);
      finalize_pixels(rec.pixels);
      ds.records.push_back(std::move(rec));
    }
  return ds;
}

Dataset generate_target(const DatasetSpec& spec, const std::vector<Raster>& source_templates) {
  validate_spec(spec);
  if (source_templates.size() != spec.num_source_classes)
    fail(ErrorCode::SpecInvalid, "template count does not match the class count");

  const std::size_t strong_count = static_cast<std::size_t>(
      std::llround(spec.strong_ratio * static_cast<double>(spec.target_count)));
  const std::size_t weak_count = spec.target_count - strong_count;
  const std::vector<GratingSpec> gratings = make_grating_specs(spec);

  Dataset ds;
  ds.height = static_cast<std::uint16_t>(spec.height);
  ds.width = static_cast<std::uint16_t>(spec.width);
  ds.num_source_classes = static_cast<std::uint16_t>(spec.num_source_classes);
  ds.num_strong_classes = static_cast<std::uint16_t>(spec.num_strong_classes);
  ds.records.reserve(spec.target_count);

  DeterministicRng weak_rng(mix_seed(spec.seed, kTargetWeak));
  for (std::size_t i = 0; i < weak_count; ++i) {
    const std::size_t k = i % spec.num_source_classes;
    Record rec;
    rec.label = static_cast<int>(k) + 1;
    rec.pixels = apply_corruption(jittered_sample(source_templates[k], weak_rng),
                                  spec.corruption, spec.severity, weak_rng);
    finalize_pixels(rec.pixels);
    ds.records.push_back(std::move(rec));
  }

  DeterministicRng strong_rng(mix_seed(spec.seed, kTargetStrong));
  for (std::size_t i = 0; i < strong_count; ++i) {
    const std::size_t k = i % spec.num_strong_classes;
    Record rec;
    rec.label = static_cast<int>(spec.num_source_classes + k) + 1;
    rec.pixels = apply_corruption(grating_sample(gratings[k], spec.height, spec.width, strong_rng),
                                  spec.corruption, spec.severity, strong_rng);
    finalize_pixels(rec.pixels);
    ds.records.push_back(std::move(rec));
  }

  DeterministicRng shuffle_rng(mix_seed(spec.seed, kTargetShuffle));
  shuffle_rng.shuffle(ds.records);
  return ds;
}

void write_dataset(const std::string& path, const Dataset& dataset) {
  std::string buf;
  buf += "OWDS";
  put_u32(buf, kDatasetVersion);
  put_u32(buf, static_cast<std::uint32_t>(dataset.records.size()));
  put_u16(buf, dataset.height);
  put_u16(buf, dataset.width);
  put_u16(buf, dataset.num_source_classes);
  put_u16(buf, dataset.num_strong_classes);
  const std::size_t pixel_count =
      static_cast<std::size_t>(dataset.height) * static_cast<std::size_t>(dataset.width);
  for (const auto& rec : dataset.records) {
    if (rec.pixels.pixels.size() != pixel_count)
      fail(ErrorCode::SpecInvalid, "record shape differs from the dataset header");
    put_u16(buf, static_cast<std::uint16_t>(rec.label));
    for (double p : rec.pixels.pixels) {
      const float v = static_cast<float>(p);
      std::uint32_t bits;
      static_assert(sizeof(v) == sizeof(bits));
      std::memcpy(&bits, &v, sizeof(bits));
      put_u32(buf, bits);
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 4 || buf.compare(0, 4, "OWDS") != 0)
    fail(ErrorCode::FormatError, "bad dataset magic, expected \"OWDS\"");
  ByteReader r{buf, 4};
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion)
    fail(ErrorCode::FormatError, "unsupported dataset version " + std::to_string(version));
  const std::uint32_t count = r.u32();

  Dataset ds;
  ds.height = r.u16();
  ds.width = r.u16();
  ds.num_source_classes = r.u16();
  ds.num_strong_classes = r.u16();
  if (ds.height == 0 || ds.width == 0)
    fail(ErrorCode::FormatError, "dataset header has zero image extent");
  const std::size_t pixel_count =
      static_cast<std::size_t>(ds.height) * static_cast<std::size_t>(ds.width);
  const int max_label = ds.num_source_classes + ds.num_strong_classes;

  ds.records.resize(count);
  for (auto& rec : ds.records) {
    rec.label = r.u16();
    if (rec.label < 1 || rec.label > max_label)
      fail(ErrorCode::FormatError, "record label " + std::to_string(rec.label) +
                                       " outside 1.." + std::to_string(max_label));
    rec.pixels.height = ds.height;
    rec.pixels.width = ds.width;
    rec.pixels.pixels.resize(pixel_count);
    for (double& p : rec.pixels.pixels) {
      p = static_cast<double>(r.f32());
      if (!(p >= 0.0 && p <= 1.0))
        fail(ErrorCode::FormatError, "pixel value outside [0,1]");
    }
  }
  if (r.pos != buf.size()) fail(ErrorCode::FormatError, "trailing bytes after dataset records");
  return ds;
}

}  // namespace owdcl
