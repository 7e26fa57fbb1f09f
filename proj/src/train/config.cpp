#include "unpaired/train/config.hpp"

#include <fstream>
#include <set>

#include "unpaired/errors.hpp"

namespace unpaired {

namespace {

const std::set<std::string> kKeys = {"variant",    "arch",       "gan",        "vae",          "sinkhorn",
                                     "optimizer",  "consistency", "batch_size", "epochs",       "pretrain_epochs",
                                     "seed",       "data_dir",   "out_dir",    "reproducible", "train_limit"};

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = c.model;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["seed"] = c.seed;
  j["data_dir"] = c.data_dir.string();
  j["out_dir"] = c.out_dir.string();
  j["reproducible"] = c.reproducible;
  j["train_limit"] = c.train_limit ? nlohmann::json(*c.train_limit) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw ConfigError("unknown config key '" + k + "'");
  TrainConfig d;
  try {
    c.model = j.get<ModelConfig>();
    c.batch_size = j.value("batch_size", d.batch_size);
    c.epochs = j.value("epochs", d.epochs);
    c.pretrain_epochs = j.value("pretrain_epochs", d.pretrain_epochs);
    c.seed = j.value("seed", d.seed);
    c.data_dir = j.value("data_dir", std::string());
    c.out_dir = j.value("out_dir", std::string());
    c.reproducible = j.value("reproducible", d.reproducible);
    c.train_limit.reset();
    if (j.contains("train_limit") && !j["train_limit"].is_null()) c.train_limit = j["train_limit"].get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

namespace {
void validate_values(const TrainConfig& c) {
  validate(c.model);
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (c.train_limit && *c.train_limit < 1) throw ConfigError("train_limit must be >= 1");
}
}  // namespace

void validate(const TrainConfig& c) {
  validate_values(c);
  if (c.data_dir.empty()) throw ConfigError("data_dir is not set");
  if (c.out_dir.empty()) throw ConfigError("out_dir is not set");
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return j.get<TrainConfig>();
}

TrainConfig apply_overrides(const TrainConfig& base, const nlohmann::json& overrides) {
  nlohmann::json j = base;
  j.merge_patch(overrides);
  auto out = j.get<TrainConfig>();
  validate_values(out);
  return out;
}

}  // namespace unpaired
