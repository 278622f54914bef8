#include "owdcl/cli.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "owdcl/benchmark.hpp"
#include "owdcl/config.hpp"
#include "owdcl/encoder.hpp"
#include "owdcl/error.hpp"
#include "owdcl/harness.hpp"
#include "owdcl/prototypes.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace owdcl {

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

const std::vector<std::string> kSections = {"dataset", "encoder", "pretrain", "adapt"};
const std::vector<std::string> kDatasetKeys = {
    "source_classes", "strong_classes", "samples_per_class", "target_count", "height",
    "width",          "corruption",     "severity",          "strong_ratio", "seed"};
const std::vector<std::string> kEncoderKeys = {"hidden_dim", "feature_dim"};
const std::vector<std::string> kPretrainKeys = {"epochs", "batch_size", "lr", "seed"};
const std::vector<std::string> kAdaptKeys = {
    "gamma1",     "gamma2",         "alpha1",          "alpha1_late", "alpha1_switch_batch",
    "alpha2",     "delta",          "lr",              "batch_size",  "queue_capacity",
    "window_capacity", "beta",      "seed"};

FileConfig load_config(const CommonOpts& opts, bool required, const char* command) {
  if (opts.config_path.empty()) {
    if (required)
      fail(ErrorCode::ConfigError, std::string(command) + " requires --config");
    FileConfig cfg;
    cfg.name = "<defaults>";
    return cfg;
  }
  FileConfig cfg = parse_config_file(opts.config_path);
  cfg.check_sections(kSections);
  cfg.check_keys("dataset", kDatasetKeys);
  cfg.check_keys("encoder", kEncoderKeys);
  cfg.check_keys("pretrain", kPretrainKeys);
  cfg.check_keys("adapt", kAdaptKeys);
  return cfg;
}

std::size_t as_count(const FileConfig& cfg, const std::string& section, const std::string& key,
                     long long value, long long min_value) {
  if (value < min_value)
    fail(ErrorCode::ConfigError, cfg.name + ": [" + section + "] " + key + ": must be at least " +
                                     std::to_string(min_value));
  return static_cast<std::size_t>(value);
}

DatasetSpec dataset_spec_from(const FileConfig& cfg, const CommonOpts& opts,
                              bool require_classes) {
  DatasetSpec spec;
  if (require_classes) {
    spec.num_source_classes =
        as_count(cfg, "dataset", "source_classes", cfg.require_int("dataset", "source_classes"), 1);
    spec.num_strong_classes =
        as_count(cfg, "dataset", "strong_classes", cfg.require_int("dataset", "strong_classes"), 1);
  } else {
    spec.num_source_classes = as_count(cfg, "dataset", "source_classes",
                                       cfg.get_int("dataset", "source_classes", 6), 1);
    spec.num_strong_classes = as_count(cfg, "dataset", "strong_classes",
                                       cfg.get_int("dataset", "strong_classes", 3), 1);
  }
  spec.samples_per_class = as_count(cfg, "dataset", "samples_per_class",
                                    cfg.get_int("dataset", "samples_per_class", 100), 2);
  spec.target_count =
      as_count(cfg, "dataset", "target_count", cfg.get_int("dataset", "target_count", 2560), 0);
  spec.height = as_count(cfg, "dataset", "height", cfg.get_int("dataset", "height", 12), 3);
  spec.width = as_count(cfg, "dataset", "width", cfg.get_int("dataset", "width", 12), 3);
  spec.corruption =
      parse_corruption_kind(cfg.get_string("dataset", "corruption", "box_blur"));
  spec.severity =
      static_cast<int>(as_count(cfg, "dataset", "severity", cfg.get_int("dataset", "severity", 3), 0));
  spec.strong_ratio = cfg.get_double("dataset", "strong_ratio", 0.5);
  spec.seed = cfg.get_u64("dataset", "seed", 1337);
  if (opts.seed_given) spec.seed = opts.seed;
  validate_spec(spec);
  return spec;
}

PretrainConfig pretrain_config_from(const FileConfig& cfg, const CommonOpts& opts) {
  PretrainConfig train;
  train.epochs = as_count(cfg, "pretrain", "epochs", cfg.get_int("pretrain", "epochs", 40), 1);
  train.batch_size =
      as_count(cfg, "pretrain", "batch_size", cfg.get_int("pretrain", "batch_size", 32), 1);
  train.lr = cfg.get_double("pretrain", "lr", 0.05);
  train.seed = cfg.get_u64("pretrain", "seed", 1);
  if (opts.seed_given) train.seed = opts.seed;
  return train;
}

AdaptConfig adapt_config_from(const FileConfig& cfg, const CommonOpts& opts) {
  AdaptConfig a;
  a.weights.gamma1 = cfg.get_double("adapt", "gamma1", 0.8);
  a.weights.gamma2 = cfg.get_double("adapt", "gamma2", 0.4);
  a.weights.alpha1 = cfg.get_double("adapt", "alpha1", 1.0);
  a.weights.alpha2 = cfg.get_double("adapt", "alpha2", 2.0);
  a.weights.delta = cfg.get_double("adapt", "delta", 0.1);
  a.alpha1_late = cfg.get_double("adapt", "alpha1_late", 0.1);
  a.alpha1_switch_batch = as_count(cfg, "adapt", "alpha1_switch_batch",
                                   cfg.get_int("adapt", "alpha1_switch_batch", 20), 0);
  a.lr = cfg.get_double("adapt", "lr", 0.01);
  a.batch_size = as_count(cfg, "adapt", "batch_size", cfg.get_int("adapt", "batch_size", 256), 1);
  a.queue_capacity =
      as_count(cfg, "adapt", "queue_capacity", cfg.get_int("adapt", "queue_capacity", 100), 1);
  a.window_capacity =
      as_count(cfg, "adapt", "window_capacity", cfg.get_int("adapt", "window_capacity", 512), 2);
  a.beta = cfg.get_double("adapt", "beta", 0.99);
  a.seed = cfg.get_u64("adapt", "seed", 1);
  if (opts.seed_given) a.seed = opts.seed;
  return a;
}

json dataset_spec_json(const DatasetSpec& spec) {
  return json{{"source_classes", spec.num_source_classes},
              {"strong_classes", spec.num_strong_classes},
              {"samples_per_class", spec.samples_per_class},
              {"target_count", spec.target_count},
              {"height", spec.height},
              {"width", spec.width},
              {"corruption", corruption_kind_name(spec.corruption)},
              {"severity", spec.severity},
              {"strong_ratio", spec.strong_ratio},
              {"seed", spec.seed}};
}

json adapt_config_json(const AdaptConfig& a) {
  return json{{"gamma1", a.weights.gamma1},
              {"gamma2", a.weights.gamma2},
              {"alpha1", a.weights.alpha1},
              {"alpha1_late", a.alpha1_late},
              {"alpha1_switch_batch", a.alpha1_switch_batch},
              {"alpha2", a.weights.alpha2},
              {"delta", a.weights.delta},
              {"lr", a.lr},
              {"batch_size", a.batch_size},
              {"queue_capacity", a.queue_capacity},
              {"window_capacity", a.window_capacity},
              {"beta", a.beta},
              {"ps", a.ps},
              {"cs", a.cs},
              {"seed", a.seed}};
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

// The manifest is written before any other output of its command; a run is
// reconstructible from the manifest's resolved settings alone.
void write_manifest(const fs::path& out_dir, const std::string& command, json body) {
  body["command"] = command;
  body["tool"] = "owdcl";
  body["manifest_version"] = 1;
  body["created_unix"] = static_cast<std::int64_t>(std::time(nullptr));
  write_text_file(out_dir / (command + "_manifest.json"), body.dump(2) + "\n");
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return doc;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
  return buf;
}

void cmd_generate(const CommonOpts& opts) {
  const FileConfig cfg = load_config(opts, true, "generate");
  const DatasetSpec spec = dataset_spec_from(cfg, opts, true);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);

  write_manifest(out, "generate",
                 json{{"dataset", dataset_spec_json(spec)},
                      {"outputs", {{"source", "source.owds"}, {"target", "target.owds"}}}});

  const Dataset source = generate_source(spec);
  write_dataset((out / "source.owds").string(), source);
  const Dataset target = generate_target(spec, make_source_templates(spec));
  write_dataset((out / "target.owds").string(), target);

  std::size_t weak = 0;
  for (const auto& r : target.records)
    if (r.label <= static_cast<int>(spec.num_source_classes)) ++weak;
  std::cout << "source: " << source.records.size() << " records, " << spec.num_source_classes
            << " classes\n"
            << "target: " << target.records.size() << " records (" << weak << " weak, "
            << target.records.size() - weak << " strong), corruption "
            << corruption_kind_name(spec.corruption) << " severity " << spec.severity << "\n";
}

void cmd_pretrain(const CommonOpts& opts) {
  const FileConfig cfg = load_config(opts, false, "pretrain");
  const fs::path out(opts.out_dir);
  const Dataset source = read_dataset((out / "source.owds").string());

  EncoderConfig enc;
  enc.input_dim = static_cast<std::size_t>(source.height) * source.width;
  enc.hidden_dim =
      as_count(cfg, "encoder", "hidden_dim", cfg.get_int("encoder", "hidden_dim", 64), 1);
  enc.feature_dim =
      as_count(cfg, "encoder", "feature_dim", cfg.get_int("encoder", "feature_dim", 32), 1);
  enc.num_classes = source.num_source_classes;
  const PretrainConfig train = pretrain_config_from(cfg, opts);

  fs::create_directories(out);
  write_manifest(out, "pretrain",
                 json{{"encoder",
                       {{"input_dim", enc.input_dim},
                        {"hidden_dim", enc.hidden_dim},
                        {"feature_dim", enc.feature_dim},
                        {"num_classes", enc.num_classes}}},
                      {"pretrain",
                       {{"epochs", train.epochs},
                        {"batch_size", train.batch_size},
                        {"lr", train.lr},
                        {"seed", train.seed}}},
                      {"inputs", {{"source", "source.owds"}}},
                      {"outputs",
                       {{"checkpoint", "checkpoint.owck"}, {"prototypes", "prototypes.json"}}}});

  std::vector<LabeledSample> data;
  data.reserve(source.records.size());
  for (const auto& r : source.records) data.push_back({r.label, r.pixels});
  const PretrainOutput result = pretrain(data, enc, train);

  save_checkpoint((out / "checkpoint.owck").string(), result.params);

  json proto;
  proto["num_classes"] = enc.num_classes;
  proto["feature_dim"] = enc.feature_dim;
  proto["prototypes"] = result.prototypes;
  proto["source_mean"] = result.source_stats.mean;
  proto["source_variance"] = result.source_stats.variance;
  proto["source_count"] = result.source_stats.count;
  proto["train_accuracy"] = result.train_accuracy;
  write_text_file(out / "prototypes.json", proto.dump(2) + "\n");

  std::cout << "pretrained on " << data.size() << " samples, train accuracy "
            << percent(result.train_accuracy) << "\n";
}

PretrainOutput load_pretrained(const fs::path& out) {
  PretrainOutput pre;
  pre.params = load_checkpoint((out / "checkpoint.owck").string());
  const json proto = load_json_file(out / "prototypes.json");
  try {
    pre.prototypes = proto.at("prototypes").get<std::vector<FeatureVector>>();
    pre.source_stats.mean = proto.at("source_mean").get<FeatureVector>();
    pre.source_stats.variance = proto.at("source_variance").get<FeatureVector>();
    pre.source_stats.count = proto.at("source_count").get<std::size_t>();
    pre.train_accuracy = proto.at("train_accuracy").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("prototypes.json: ") + e.what());
  }
  if (pre.prototypes.size() != pre.params.config.num_classes)
    fail(ErrorCode::DimensionMismatch, "prototype count differs from the checkpoint head");
  for (const auto& p : pre.prototypes)
    if (p.size() != pre.params.config.feature_dim)
      fail(ErrorCode::DimensionMismatch, "prototype dimension differs from the checkpoint");
  if (pre.source_stats.mean.size() != pre.params.config.feature_dim ||
      pre.source_stats.variance.size() != pre.params.config.feature_dim)
    fail(ErrorCode::DimensionMismatch, "source statistics dimension differs from the checkpoint");
  return pre;
}

json batch_to_json(const BatchResult& r, std::size_t num_classes) {
  json samples = json::array();
  for (const auto& s : r.samples)
    samples.push_back(
        json{{"pred", s.predicted}, {"truth", s.truth}, {"os", s.os}, {"os_hat", s.os_hat}});
  json line{{"batch", r.batch_index},
            {"m", num_classes},
            {"losses",
             {{"ps", r.losses.ps},
              {"nt", r.losses.nt},
              {"pc_wea", r.losses.pc_wea},
              {"pc_str", r.losses.pc_str},
              {"kld", r.losses.kld}}},
            {"total", r.total},
            {"queue_len", r.queue_len},
            {"pair_cosine", r.pair_cosine},
            {"effective_alpha1", r.effective_alpha1},
            {"samples", samples}};
  line["tau_star"] = r.tau_star ? json(*r.tau_star) : json(nullptr);
  line["acc_s"] = r.acc_s ? json(*r.acc_s) : json(nullptr);
  line["acc_n"] = r.acc_n ? json(*r.acc_n) : json(nullptr);
  line["acc_h"] = r.acc_h ? json(*r.acc_h) : json(nullptr);
  return line;
}

void put_u32_le(std::string& buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xFF));
  buf.push_back(static_cast<char>((v >> 8) & 0xFF));
  buf.push_back(static_cast<char>((v >> 16) & 0xFF));
  buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void cmd_adapt(const CommonOpts& opts, bool ps, bool cs, bool dump_features) {
  const FileConfig cfg = load_config(opts, false, "adapt");
  const fs::path out(opts.out_dir);

  const PretrainOutput pre = load_pretrained(out);
  const Dataset target = read_dataset((out / "target.owds").string());
  const std::size_t pixels = static_cast<std::size_t>(target.height) * target.width;
  if (pixels != pre.params.config.input_dim)
    fail(ErrorCode::DimensionMismatch,
         "target images have " + std::to_string(pixels) + " pixels, checkpoint expects " +
             std::to_string(pre.params.config.input_dim));
  if (target.num_source_classes != pre.params.config.num_classes)
    fail(ErrorCode::DimensionMismatch, "target header declares " +
                                           std::to_string(target.num_source_classes) +
                                           " source classes, checkpoint has " +
                                           std::to_string(pre.params.config.num_classes));

  AdaptConfig config = adapt_config_from(cfg, opts);
  config.ps = ps;
  config.cs = cs;

  fs::create_directories(out);
  write_manifest(out, "adapt",
                 json{{"adapt", adapt_config_json(config)},
                      {"inputs",
                       {{"checkpoint", "checkpoint.owck"},
                        {"prototypes", "prototypes.json"},
                        {"target", "target.owds"}}},
                      {"outputs",
                       {{"results", "results.jsonl"},
                        {"summary", "summary.json"},
                        {"bank", "bank.json"}}}});

  std::ofstream results(out / "results.jsonl", std::ios::trunc);
  if (!results) fail(ErrorCode::IoError, "cannot open results.jsonl for writing");

  AdaptSession session(pre, config);
  const std::size_t m = pre.params.config.num_classes;
  std::string feature_blob;
  std::size_t feature_records = 0;
  std::size_t consumed = 0;

  for (std::size_t start = 0; start < target.records.size(); start += config.batch_size) {
    const std::size_t end = std::min(start + config.batch_size, target.records.size());
    std::vector<Record> batch(target.records.begin() + static_cast<std::ptrdiff_t>(start),
                              target.records.begin() + static_cast<std::ptrdiff_t>(end));
    // Flush per batch so a divergence abort still leaves every finished
    // batch on disk.
    const BatchResult r = session.adapt_batch(batch);
    results << batch_to_json(r, m).dump() << '\n' << std::flush;
    consumed += end - start;
    if (dump_features) {
      for (std::size_t i = 0; i < r.samples.size(); ++i) {
        put_u32_le(feature_blob, static_cast<std::uint32_t>(r.samples[i].predicted));
        put_u32_le(feature_blob, static_cast<std::uint32_t>(r.samples[i].truth));
        for (double x : r.features[i]) {
          const float v = static_cast<float>(x);
          std::uint32_t bits;
          std::memcpy(&bits, &v, sizeof(bits));
          put_u32_le(feature_blob, bits);
        }
        ++feature_records;
      }
    }
  }

  const auto& counts = session.counts();
  json summary;
  summary["batches"] = session.batches_seen();
  summary["consumed"] = consumed;
  summary["weak_total"] = counts.weak_total;
  summary["weak_correct"] = counts.weak_correct;
  summary["strong_total"] = counts.strong_total;
  summary["strong_rejected"] = counts.strong_rejected;
  summary["queue_len"] = session.bank().strong().size();
  summary["tau_star"] = session.tracker().tau() ? json(*session.tracker().tau()) : json(nullptr);
  summary["ps"] = config.ps;
  summary["cs"] = config.cs;
  if (counts.weak_total > 0 && counts.strong_total > 0) {
    const Metrics final = metrics(counts);
    summary["acc_s"] = final.acc_s;
    summary["acc_n"] = final.acc_n;
    summary["acc_h"] = final.acc_h;
    std::cout << "Acc_S " << percent(final.acc_s) << "  Acc_N " << percent(final.acc_n)
              << "  Acc_H " << percent(final.acc_h) << "\n";
  } else {
    summary["acc_s"] = nullptr;
    summary["acc_n"] = nullptr;
    summary["acc_h"] = nullptr;
    std::cout << "metrics undefined (stream lacked weak or strong samples)\n";
  }
  write_text_file(out / "summary.json", summary.dump(2) + "\n");
  write_text_file(out / "bank.json", bank_to_json(session.bank(), session.tracker()) + "\n");

  if (dump_features) {
    std::string header;
    header += "OWFD";
    put_u32_le(header, 1);
    put_u32_le(header, static_cast<std::uint32_t>(feature_records));
    put_u32_le(header, static_cast<std::uint32_t>(pre.params.config.feature_dim));
    std::ofstream feat(out / "features.f32", std::ios::binary | std::ios::trunc);
    if (!feat) fail(ErrorCode::IoError, "cannot open features.f32 for writing");
    feat << header << feature_blob;
    if (!feat) fail(ErrorCode::IoError, "failed writing features.f32");
  }
}

void cmd_eval(const CommonOpts& opts) {
  const fs::path out(opts.out_dir);
  const fs::path results_path = out / "results.jsonl";
  std::ifstream in(results_path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + results_path.string());

  fs::create_directories(out);
  write_manifest(out, "eval",
                 json{{"inputs", {{"results", "results.jsonl"}}},
                      {"outputs", {{"curve", "curve.csv"}}}});

  MetricsAccumulator acc;
  std::string csv = "batch,acc_s,acc_n,acc_h\n";
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError,
           results_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    long long batch = 0;
    int m = 0;
    try {
      batch = doc.at("batch").get<long long>();
      m = doc.at("m").get<int>();
      for (const auto& s : doc.at("samples")) {
        const int pred = s.at("pred").get<int>();
        const int truth = s.at("truth").get<int>();
        if (truth <= m) {
          ++acc.weak_total;
          if (pred == truth) ++acc.weak_correct;
        } else {
          ++acc.strong_total;
          if (pred > m) ++acc.strong_rejected;
        }
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError,
           results_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    char row[128];
    if (acc.weak_total > 0 && acc.strong_total > 0) {
      const Metrics running = metrics(acc);
      std::snprintf(row, sizeof(row), "%lld,%.6f,%.6f,%.6f\n", batch, running.acc_s,
                    running.acc_n, running.acc_h);
    } else if (acc.weak_total > 0) {
      std::snprintf(row, sizeof(row), "%lld,%.6f,,\n", batch,
                    static_cast<double>(acc.weak_correct) / static_cast<double>(acc.weak_total));
    } else if (acc.strong_total > 0) {
      std::snprintf(row, sizeof(row), "%lld,,%.6f,\n", batch,
                    static_cast<double>(acc.strong_rejected) /
                        static_cast<double>(acc.strong_total));
    } else {
      std::snprintf(row, sizeof(row), "%lld,,,\n", batch);
    }
    csv += row;
  }

  // Throws UndefinedMetric on an empty or one-sided stream.
  const Metrics final = metrics(acc);
  write_text_file(out / "curve.csv", csv);

  std::cout << "samples: " << acc.weak_total + acc.strong_total << " (weak " << acc.weak_total
            << ", strong " << acc.strong_total << ")\n"
            << "Acc_S " << percent(final.acc_s) << "  Acc_N " << percent(final.acc_n)
            << "  Acc_H " << percent(final.acc_h) << "\n";
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Streaming open-world test-time training on a synthetic corrupted benchmark"};
  app.require_subcommand(1);

  CommonOpts opts;
  bool ps = true;
  bool cs = true;
  bool dump_features = false;

  auto add_common = [&opts](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "INI-style config file");
    sub->add_option("--out", opts.out_dir, "workspace directory for artifacts")
        ->capture_default_str();
    auto* seed = sub->add_option("--seed", opts.seed, "override the command's seed");
    sub->callback([seed, &opts]() { opts.seed_given = seed->count() > 0; });
  };

  CLI::App* generate = app.add_subcommand("generate", "write source and target datasets");
  add_common(generate);
  CLI::App* pretrain_cmd =
      app.add_subcommand("pretrain", "train the encoder on the source dataset");
  add_common(pretrain_cmd);
  CLI::App* adapt = app.add_subcommand("adapt", "run one-pass test-time training on the target");
  add_common(adapt);
  adapt->add_flag("--ps,!--no-ps", ps, "positive-pair alignment loss");
  adapt->add_flag("--cs,!--no-cs", cs, "cluster/sample alignment losses");
  adapt->add_flag("--dump-features", dump_features, "write per-sample features to features.f32");
  CLI::App* eval = app.add_subcommand("eval", "recompute metrics from results.jsonl");
  add_common(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (generate->parsed()) cmd_generate(opts);
    else if (pretrain_cmd->parsed()) cmd_pretrain(opts);
    else if (adapt->parsed()) cmd_adapt(opts, ps, cs, dump_features);
    else if (eval->parsed()) cmd_eval(opts);
  } catch (const Error& e) {
    std::cerr << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("owdcl");
  for (const auto& a : args) storage.push_back(a);
  std::vector<char*> argv;
  argv.reserve(storage.size());
  for (auto& s : storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace owdcl
