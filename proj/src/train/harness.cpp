#include "unpaired/train/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "unpaired/errors.hpp"
#include "unpaired/models/one_gan.hpp"
#include "unpaired/models/shared_encoder.hpp"
#include "unpaired/util/log.hpp"
#include "unpaired/util/rng.hpp"

namespace unpaired {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kDataStream = 0xda7a;
constexpr uint64_t kPretrainStream = 0x9e7a;

struct Halt {};

using StepFn = std::function<MetricRecord(const ImageBatch&, const ImageBatch&)>;

void put_losses(MetricRecord& r, const LossBundle& b) {
  for (const auto& t : b.terms) r.losses.emplace_back(t.name, t.value);
  if (b.sinkhorn_converged) r.sinkhorn_converged = r.sinkhorn_converged.value_or(true) && *b.sinkhorn_converged;
}

bool finite(const MetricRecord& r) {
  for (const auto& [k, v] : r.losses)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string epoch_dir(int64_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04lld", static_cast<long long>(epoch));
  return buf;
}

/// Runs `epochs` passes; returns the next free step number.
int64_t run_epochs(const DomainPairDataset& train, int64_t batch_size, int epochs, uint64_t seed, int64_t first_step,
                   int64_t first_epoch, bool timed, const StepFn& step, const MetricSink& sink,
                   const std::function<void(int64_t)>& on_epoch_end) {
  UnpairedSampler sampler(train, batch_size, seed);
  int64_t s = first_step;
  for (int e = 0; e < epochs; ++e) {
    const int64_t epoch = first_epoch + e;
    sampler.start_epoch(epoch);
    for (int64_t i = 0; i < sampler.batches_per_epoch(); ++i) {
      const auto [x, y] = sampler.batch(i);
      const auto t0 = std::chrono::steady_clock::now();
      auto rec = step(x, y);
      rec.step = s++;
      rec.epoch = epoch;
      rec.wall_ms =
          timed ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() : 0.0;
      sink(rec);
    }
    if (on_epoch_end) on_epoch_end(epoch);
  }
  return s;
}

StepFn make_step_fn(TranslationModel& model) {
  if (auto* g = dynamic_cast<OneGanModel*>(&model)) {
    return [g](const ImageBatch& x, const ImageBatch& y) {
      MetricRecord r;
      put_losses(r, g->critic_step(x, y));
      if (auto gb = g->generator_step(x, y)) {
        r.generator_step = true;
        put_losses(r, *gb);
      }
      put_losses(r, g->classifier_step(x, y));
      ++g->step_count;
      return r;
    };
  }
  if (auto* t = dynamic_cast<TwinVaeModel*>(&model)) {
    return [t](const ImageBatch& x, const ImageBatch& y) {
      MetricRecord r;
      put_losses(r, t->step(x, y));
      ++t->step_count;
      return r;
    };
  }
  auto* s = dynamic_cast<SharedEncoderModel*>(&model);
  if (!s) throw StateError("unsupported model type");
  return [s](const ImageBatch& x, const ImageBatch& y) {
    MetricRecord r;
    put_losses(r, s->step(x, y));
    ++s->step_count;
    return r;
  };
}

StepFn make_pretrain_fn(TwinVaeModel& model) {
  return [&model](const ImageBatch& x, const ImageBatch& y) {
    MetricRecord r;
    put_losses(r, model.pretrain_step(x, y));
    return r;
  };
}

}  // namespace

nlohmann::ordered_json MetricRecord::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["epoch"] = epoch;
  j["wall_ms"] = wall_ms;
  nlohmann::ordered_json l = nlohmann::ordered_json::object();
  for (const auto& [k, v] : losses) l[k] = v;
  j["losses"] = l;
  j["generator_step"] = generator_step;
  j["sinkhorn_converged"] = sinkhorn_converged ? nlohmann::ordered_json(*sinkhorn_converged) : nullptr;
  return j;
}

MetricRecord MetricRecord::from_json(const nlohmann::ordered_json& j) {
  MetricRecord r;
  try {
    r.step = j.at("step").get<int64_t>();
    r.epoch = j.at("epoch").get<int64_t>();
    r.wall_ms = j.at("wall_ms").get<double>();
    for (const auto& [k, v] : j.at("losses").items())
      r.losses.emplace_back(k, v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN());
    r.generator_step = j.at("generator_step").get<bool>();
    if (!j.at("sinkhorn_converged").is_null()) r.sinkhorn_converged = j.at("sinkhorn_converged").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad metric record: ") + e.what());
  }
  return r;
}

std::vector<MetricRecord> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metric log " + path.string());
  std::vector<MetricRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(MetricRecord::from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("bad metric line in " + path.string() + ": " + e.what());
    }
  }
  return out;
}

void enter_reproducible_mode(uint64_t seed) {
  torch::set_num_threads(1);
  torch::manual_seed(seed);
}

int64_t pretrain_vaes(TwinVaeModel& model, const DomainPairDataset& train, int64_t batch_size, int epochs,
                      uint64_t seed, const MetricSink& sink, int64_t first_step, int64_t first_epoch) {
  const auto next = run_epochs(train, batch_size, epochs, derive_seed(seed, kPretrainStream), first_step, first_epoch,
                               false, make_pretrain_fn(model), sink, {});
  model.vaes_pretrained = true;
  return next - first_step;
}

TrainResult run_training(const TrainConfig& cfg) {
  validate(cfg);
  if (!fs::exists(cfg.data_dir / "manifest.json"))
    throw IoError("no prepared dataset at " + cfg.data_dir.string() + " (run prepare first)");
  if (cfg.reproducible) enter_reproducible_mode(cfg.seed);
  const auto data = load_prepared(cfg.data_dir);
  const auto train = cfg.train_limit ? data.train.head(*cfg.train_limit) : data.train;

  TrainResult res;
  res.out_dir = cfg.out_dir;
  res.metrics_path = cfg.out_dir / "metrics.jsonl";
  const auto ckpt = cfg.out_dir / "checkpoints";
  fs::create_directories(ckpt);
  {
    std::ofstream echo(cfg.out_dir / "config.json");
    if (!echo) throw IoError("cannot write " + (cfg.out_dir / "config.json").string());
    echo << nlohmann::json(cfg).dump(2) << '\n';
  }

  auto model = make_model(cfg.model, cfg.seed);
  save_model(*model, ckpt / epoch_dir(0));

  std::ofstream metrics(res.metrics_path, std::ios::trunc);
  if (!metrics) throw IoError("cannot write " + res.metrics_path.string());
  int bad = 0;
  const MetricSink sink = [&](const MetricRecord& r) {
    metrics << r.to_json().dump() << '\n';
    metrics.flush();
    ++res.steps;
    bad = finite(r) ? 0 : bad + 1;
    if (bad >= kMaxNonFiniteSteps) throw Halt{};
  };
  const auto save_epoch = [&](int64_t epoch) { save_model(*model, ckpt / epoch_dir(epoch)); };
  const bool timed = !cfg.reproducible;

  try {
    int64_t step = 1, epoch = 1;
    if (cfg.model.variant == Variant::Aligned) {
      auto& twin = dynamic_cast<TwinVaeModel&>(*model);
      const int pe = cfg.pretrain_epochs < 0 ? cfg.epochs : cfg.pretrain_epochs;
      step = run_epochs(train, cfg.batch_size, pe, derive_seed(cfg.seed, kPretrainStream), step, epoch, timed,
                        make_pretrain_fn(twin), sink, save_epoch);
      twin.vaes_pretrained = true;
      epoch += pe;
    }
    run_epochs(train, cfg.batch_size, cfg.epochs, derive_seed(cfg.seed, kDataStream), step, epoch, timed,
               make_step_fn(*model), sink, save_epoch);
  } catch (const Halt&) {
    res.halted = true;
    save_model(*model, ckpt / "halted");
    log_warning("training halted after " + std::to_string(kMaxNonFiniteSteps) +
                " non-finite steps; diagnostic checkpoint in " + (ckpt / "halted").string());
  }
  if (res.halted) {
    res.final_checkpoint = ckpt / "halted";
  } else {
    res.final_checkpoint = ckpt / "final";
    save_model(*model, res.final_checkpoint);
  }
  return res;
}

}  // namespace unpaired
