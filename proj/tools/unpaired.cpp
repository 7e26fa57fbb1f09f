// unpaired: prepare / train / eval / translate / report / probe.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "unpaired/data/array_io.hpp"
#include "unpaired/data/domain_pair.hpp"
#include "unpaired/errors.hpp"
#include "unpaired/models/model.hpp"
#include "unpaired/train/config.hpp"
#include "unpaired/train/evaluate.hpp"
#include "unpaired/train/harness.hpp"

namespace fs = std::filesystem;
using namespace unpaired;

namespace {

enum Exit { kOk = 0, kFailed = 1, kUsage = 2, kArtifact = 3, kNumeric = 4 };

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string default_mnist_dir() {
  if (const char* v = std::getenv("UNPAIRED_MNIST_DIR"); v && *v) return v;
  return (fs::path(env_or("UNPAIRED_DATA_ROOT", "data")) / "mnist").string();
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Direction parse_direction(const std::string& s) {
  if (s == "A2B" || s == "a2b") return Direction::A2B;
  if (s == "B2A" || s == "b2a") return Direction::B2A;
  throw ConfigError("direction must be A2B or B2A, got '" + s + "'");
}

ArchConfig parse_widths(ArchConfig arch, const std::vector<int>& widths) {
  if (!widths.empty()) {
    if (widths.size() != 3) throw ConfigError("--widths takes three values");
    arch.widths = {widths[0], widths[1], widths[2]};
  }
  validate(arch);
  return arch;
}

struct PrepareArgs {
  std::string mnist_dir = default_mnist_dir(), spec_a, spec_b = "invert", out;
  uint64_t seed = 0;
  int64_t limit = 0;
};

int cmd_prepare(const PrepareArgs& a) {
  const auto spec_a = TransformSpec::parse(a.spec_a);
  const auto spec_b = TransformSpec::parse(a.spec_b);
  std::optional<int64_t> limit;
  if (a.limit > 0) limit = a.limit;
  const auto data = prepare_from_mnist(a.mnist_dir, spec_a, spec_b, a.seed, limit);
  save_prepared(data, a.out);
  std::cout << "prepared " << data.train.domain_a.size() << "+" << data.train.domain_b.size() << " train, "
            << data.test.domain_a.size() << "+" << data.test.domain_b.size() << " held-out images in " << a.out
            << '\n';
  return kOk;
}

struct TrainArgs {
  std::string config, variant, out, data;
  std::optional<uint64_t> seed;
  std::optional<int> epochs, pretrain_epochs;
  std::optional<int64_t> batch_size, train_limit;
  std::vector<int> widths;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
  if (!a.variant.empty()) cfg.model.variant = variant_from_string(a.variant);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (!a.data.empty()) cfg.data_dir = a.data;
  if (a.seed) cfg.seed = *a.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.pretrain_epochs) cfg.pretrain_epochs = *a.pretrain_epochs;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.train_limit) cfg.train_limit = *a.train_limit;
  cfg.model.arch = parse_widths(cfg.model.arch, a.widths);
  const auto res = run_training(cfg);
  std::cout << "trained " << res.steps << " steps; metrics " << res.metrics_path.string() << "; checkpoint "
            << res.final_checkpoint.string() << '\n';
  if (res.halted) {
    std::cerr << "halted: " << kMaxNonFiniteSteps << " non-finite steps in a row\n";
    return kNumeric;
  }
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, data, probe, out;
  int64_t max_samples = 0, prior_samples = 1000;
  uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a) {
  auto model = load_model(a.checkpoint);
  auto probe = load_probe(a.probe);
  const auto data = load_prepared(a.data);
  EvalOptions opts;
  if (a.max_samples > 0) opts.max_samples = a.max_samples;
  opts.prior_samples = a.prior_samples;
  opts.seed = a.seed;
  const auto report = evaluate(*model, data.test, *probe, opts).to_json();
  if (!a.out.empty()) write_json(a.out, report);
  std::cout << report.dump(2) << '\n';
  return kOk;
}

struct TranslateArgs {
  std::string checkpoint, in, direction = "A2B", out;
  int64_t count = 8;
};

int cmd_translate(const TranslateArgs& a) {
  const auto dir = parse_direction(a.direction);
  auto model = load_model(a.checkpoint);
  torch::Tensor src;
  if (fs::is_directory(a.in)) {
    const auto data = load_prepared(a.in);
    src = data.test.domain(source_domain(dir)).images;
  } else {
    src = read_array(a.in).to(torch::kFloat32);
  }
  if (src.dim() == 3) src = src.unsqueeze(1);
  if (src.dim() != 4) throw SizeError("translate: input must be n x 1 x H x W");
  if (a.count > 0) src = src.slice(0, 0, std::min(a.count, src.size(0)));
  const auto t = model->translate(src, dir);
  const auto c = model->cycle(src, dir);
  fs::create_directories(a.out);
  write_array(fs::path(a.out) / "source.bin", src);
  write_array(fs::path(a.out) / "translation.bin", t);
  write_array(fs::path(a.out) / "reconstruction.bin", c);
  render_grid({src, t, c}, fs::path(a.out) / "grid.png");
  std::cout << "wrote " << src.size(0) << " translations to " << a.out << '\n';
  return kOk;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::ostringstream table;
  const char* cols[] = {"run", "variant", "cycle_ihl", "self_recon", "probe_acc", "prior_holes", "corresp_ihl"};
  table << std::left << std::setw(28) << cols[0];
  for (int i = 1; i < 7; ++i) table << std::setw(20) << cols[i];
  table << '\n';
  auto cell = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v)
      s << std::fixed << std::setprecision(4) << *v;
    else
      s << "-";
    return s.str();
  };
  for (const auto& run : a.runs) {
    const auto path = fs::path(run) / "report.json";
    std::ifstream in(path);
    if (!in) throw IoError("missing " + path.string() + " (run eval --out " + path.string() + " first)");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("malformed " + path.string() + ": " + e.what());
    }
    const auto r = EvalReport::from_json(j);
    table << std::left << std::setw(28) << fs::path(run).filename().string() << std::setw(20) << r.variant
          << std::setw(20) << cell(r.cycle_ihl) << std::setw(20) << cell(r.self_recon_ihl) << std::setw(20)
          << cell(r.probe_accuracy) << std::setw(20) << cell(r.prior_hole_rate) << std::setw(20)
          << cell(r.correspondence_ihl) << '\n';
  }
  std::cout << table.str();
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write " + a.out);
    out << table.str();
  }
  return kOk;
}

struct ProbeArgs {
  std::string data, out;
  uint64_t seed = 0;
  int max_epochs = 20;
  int64_t train_limit = 0, batch_size = 64;
  std::vector<int> widths;
};

int cmd_probe(const ProbeArgs& a) {
  const auto data = load_prepared(a.data);
  ProbeOptions opts;
  opts.arch = parse_widths(opts.arch, a.widths);
  opts.max_epochs = a.max_epochs;
  opts.batch_size = a.batch_size;
  if (a.train_limit > 0) opts.train_limit = a.train_limit;
  const auto res = train_domain_probe(data, a.seed, opts);
  save_probe(*res.probe, a.out);
  std::cout << "probe held-out accuracy " << res.held_out_accuracy << " after " << res.epochs << " epoch(s); saved to "
            << a.out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unpaired image-to-image translation on synthetic MNIST domain pairs"};
  app.require_subcommand(1);

  PrepareArgs pa;
  auto* prep = app.add_subcommand("prepare", "Build a cached domain pair from MNIST");
  prep->add_option("--mnist-dir", pa.mnist_dir, "Directory with the MNIST IDX files")->capture_default_str();
  prep->add_option("--spec-a", pa.spec_a, "Transform for domain A, e.g. \"\" or \"hflip\"");
  prep->add_option("--spec-b", pa.spec_b, "Transform for domain B, e.g. \"invert,rotate:15\"")->capture_default_str();
  prep->add_option("--seed", pa.seed, "Split seed")->capture_default_str();
  prep->add_option("--limit", pa.limit, "Use only the first N source images per split");
  prep->add_option("--out", pa.out, "Output dataset directory")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", ta.config, "JSON config file");
  train->add_option("--variant", ta.variant, "onegan, sequential, sequential-strict, interleaving, "
                                             "interleaving-strict, aligned, sinkhorn-shared");
  train->add_option("--out", ta.out, "Run directory");
  train->add_option("--data", ta.data, "Prepared dataset directory");
  train->add_option("--seed", ta.seed, "Global seed");
  train->add_option("--epochs", ta.epochs, "Epochs");
  train->add_option("--pretrain-epochs", ta.pretrain_epochs, "Aligned variant: VAE pretraining epochs");
  train->add_option("--batch-size", ta.batch_size, "Batch size");
  train->add_option("--train-limit", ta.train_limit, "Training images per domain");
  train->add_option("--widths", ta.widths, "Three stage widths, e.g. 64 128 256")->expected(3);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on held-out data");
  eval->add_option("--checkpoint", ea.checkpoint, "Model checkpoint directory")->required();
  eval->add_option("--data", ea.data, "Prepared dataset directory")->required();
  eval->add_option("--probe", ea.probe, "Domain probe directory")->required();
  eval->add_option("--out", ea.out, "Write the report JSON here");
  eval->add_option("--max-samples", ea.max_samples, "Held-out images per domain (0 = all)");
  eval->add_option("--prior-samples", ea.prior_samples, "Prior samples per decoder")->capture_default_str();
  eval->add_option("--seed", ea.seed, "Prior sampling seed");

  TranslateArgs tra;
  auto* tr = app.add_subcommand("translate", "Translate images and render a grid");
  tr->add_option("--checkpoint", tra.checkpoint, "Model checkpoint directory")->required();
  tr->add_option("--in", tra.in, "Prepared dataset directory or array file")->required();
  tr->add_option("--direction", tra.direction, "A2B or B2A")->capture_default_str();
  tr->add_option("--out", tra.out, "Output directory")->required();
  tr->add_option("--count", tra.count, "Number of images (0 = all)")->capture_default_str();

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Summarize evaluation reports of several runs");
  rep->add_option("runs", ra.runs, "Run directories holding report.json")->required();
  rep->add_option("--out", ra.out, "Also write the table here");

  ProbeArgs pra;
  auto* pr = app.add_subcommand("probe", "Train the domain probe");
  pr->add_option("--data", pra.data, "Prepared dataset directory")->required();
  pr->add_option("--out", pra.out, "Probe output directory")->required();
  pr->add_option("--seed", pra.seed, "Seed")->capture_default_str();
  pr->add_option("--max-epochs", pra.max_epochs, "Epoch budget")->capture_default_str();
  pr->add_option("--batch-size", pra.batch_size, "Batch size")->capture_default_str();
  pr->add_option("--train-limit", pra.train_limit, "Training images per domain");
  pr->add_option("--widths", pra.widths, "Three stage widths")->expected(3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*prep) return cmd_prepare(pa);
    if (*train) return cmd_train(ta);
    if (*eval) return cmd_eval(ea);
    if (*tr) return cmd_translate(tra);
    if (*rep) return cmd_report(ra);
    if (*pr) return cmd_probe(pra);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const SizeError& e) {
    std::cerr << "size error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kArtifact;
  } catch (const FormatError& e) {
    std::cerr << "corrupt artifact: " << e.what() << '\n';
    return kArtifact;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}
