#include "vmflow/config.hpp"

#include <cstdlib>
#include <json.hpp>
#include <set>

#include "vmflow/error.hpp"

namespace vmflow {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "variant",     "alpha",          "beta",       "tau",           "p_equal",
      "time_sampling", "lognormal_mean", "lognormal_std", "adaptive_l2", "adaptive_power",
      "adaptive_c",  "cond_dropout",   "inference_layout_prob", "decay_factor", "lr",
      "epochs",      "steps",          "batch_size", "checkpoint_every", "log_every",
      "guidance_w",  "nfe",            "num_samples", "seed",          "sample_seed",
      "dataset",     "output_dir",     "token_dim",  "sample_len",    "cond_dim",
      "cond_len",    "latent_dim",     "latent_tokens", "width",      "heads",
      "blocks",      "mlp_ratio",      "time_freqs", "max_time_freq", "disp_layer",    "phi_hidden"};
  return keys;
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("config: bad value for '") + key + "': " + e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfig, "config: " + message);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::pair<std::string, std::string>>& overrides) {
  json j;
  try {
    j = json_text.empty() ? json::object() : json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("config: not valid JSON: ") + e.what());
  }
  require(j.is_object(), "top level must be an object");
  for (const auto& [key, value] : overrides) j[key] = parse_override_value(value);
  for (const auto& item : j.items()) require(known_keys().count(item.key()) > 0, "unknown key '" + item.key() + "'");

  RunConfig cfg;
  std::string variant = "VMF";
  read(j, "variant", variant);
  cfg.train.variant = parse_variant(variant);
  const VariantTraits traits = variant_traits(cfg.train.variant);

  TrainConfig& t = cfg.train;
  if (!traits.variational) t.alpha = 0.0f;
  if (!traits.dispersive) t.beta = 0.0f;
  if (traits.instantaneous_only) t.time.p_equal = 1.0f;

  read(j, "alpha", t.alpha);
  read(j, "beta", t.beta);
  read(j, "p_equal", t.time.p_equal);
  const std::string name = to_string(t.variant);
  if (!traits.variational) require(t.alpha == 0.0f, name + " requires alpha = 0, got " + std::to_string(t.alpha));
  if (!traits.dispersive) require(t.beta == 0.0f, name + " requires beta = 0, got " + std::to_string(t.beta));
  if (traits.instantaneous_only) {
    require(t.time.p_equal == 1.0f, name + " requires p_equal = 1, got " + std::to_string(t.time.p_equal));
  }

  read(j, "tau", t.tau);
  std::string strategy = "uniform";
  read(j, "time_sampling", strategy);
  if (strategy == "uniform") {
    t.time.strategy = TimeStrategy::kUniform;
  } else if (strategy == "lognormal") {
    t.time.strategy = TimeStrategy::kLogNormal;
  } else {
    require(false, "time_sampling must be 'uniform' or 'lognormal'");
  }
  read(j, "lognormal_mean", t.time.lognormal_mean);
  read(j, "lognormal_std", t.time.lognormal_std);
  read(j, "adaptive_l2", t.adaptive_l2);
  read(j, "adaptive_power", t.adaptive_power);
  read(j, "adaptive_c", t.adaptive_c);
  read(j, "cond_dropout", t.cond_dropout);
  read(j, "inference_layout_prob", t.inference_layout_prob);
  read(j, "decay_factor", t.decay_factor);
  read(j, "lr", t.adam.lr);

  read(j, "epochs", cfg.epochs);
  read(j, "steps", cfg.steps);
  read(j, "batch_size", cfg.batch_size);
  read(j, "checkpoint_every", cfg.checkpoint_every);
  read(j, "log_every", cfg.log_every);
  read(j, "guidance_w", cfg.guidance_w);
  read(j, "nfe", cfg.nfe);
  read(j, "num_samples", cfg.num_samples);
  read(j, "seed", cfg.seed);
  read(j, "sample_seed", cfg.sample_seed);
  read(j, "dataset", cfg.dataset);
  read(j, "output_dir", cfg.output_dir);

  ModelDims& d = cfg.dims;
  read(j, "token_dim", d.token_dim);
  read(j, "sample_len", d.sample_len);
  read(j, "cond_dim", d.cond_dim);
  read(j, "cond_len", d.cond_len);
  read(j, "latent_dim", d.latent_dim);
  read(j, "latent_tokens", d.latent_tokens);
  read(j, "width", d.width);
  read(j, "heads", d.heads);
  read(j, "blocks", d.blocks);
  read(j, "mlp_ratio", d.mlp_ratio);
  read(j, "time_freqs", d.time_freqs);
  read(j, "max_time_freq", d.max_time_freq);
  read(j, "disp_layer", d.disp_layer);
  read(j, "phi_hidden", d.phi_hidden);

  require(t.tau > 0.0f, "tau must be > 0");
  require(t.alpha >= 0.0f && t.beta >= 0.0f, "alpha and beta must be >= 0");
  require(t.time.p_equal >= 0.0f && t.time.p_equal <= 1.0f, "p_equal must lie in [0, 1]");
  require(t.cond_dropout >= 0.0f && t.cond_dropout <= 1.0f, "cond_dropout must lie in [0, 1]");
  require(t.inference_layout_prob >= 0.0f && t.inference_layout_prob <= 1.0f,
          "inference_layout_prob must lie in [0, 1]");
  require(t.decay_factor > 0.0 && t.decay_factor <= 1.0, "decay_factor must lie in (0, 1]");
  require(t.adam.lr > 0.0f, "lr must be > 0");
  require(t.time.lognormal_std > 0.0f, "lognormal_std must be > 0");
  require(cfg.nfe >= 1, "nfe must be >= 1");
  require(cfg.batch_size >= 1, "batch_size must be >= 1");
  require(cfg.log_every >= 1, "log_every must be >= 1");
  d.validate();
  return cfg;
}

void apply_seed_env(RunConfig& config) {
  const char* env = std::getenv("VMFLOW_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw Error(ErrorCode::kConfig, "VMFLOW_SEED is not an unsigned integer");
  config.seed = v;
}

std::string run_config_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  const ModelDims& d = c.dims;
  nlohmann::ordered_json j;
  j["variant"] = to_string(t.variant);
  j["alpha"] = t.alpha;
  j["beta"] = t.beta;
  j["tau"] = t.tau;
  j["p_equal"] = t.time.p_equal;
  j["time_sampling"] = t.time.strategy == TimeStrategy::kUniform ? "uniform" : "lognormal";
  j["lognormal_mean"] = t.time.lognormal_mean;
  j["lognormal_std"] = t.time.lognormal_std;
  j["adaptive_l2"] = t.adaptive_l2;
  j["adaptive_power"] = t.adaptive_power;
  j["adaptive_c"] = t.adaptive_c;
  j["cond_dropout"] = t.cond_dropout;
  j["inference_layout_prob"] = t.inference_layout_prob;
  j["decay_factor"] = t.decay_factor;
  j["lr"] = t.adam.lr;
  j["epochs"] = c.epochs;
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["checkpoint_every"] = c.checkpoint_every;
  j["log_every"] = c.log_every;
  j["guidance_w"] = c.guidance_w;
  j["nfe"] = c.nfe;
  j["num_samples"] = c.num_samples;
  j["seed"] = c.seed;
  j["sample_seed"] = c.sample_seed;
  j["dataset"] = c.dataset;
  j["output_dir"] = c.output_dir;
  j["token_dim"] = d.token_dim;
  j["sample_len"] = d.sample_len;
  j["cond_dim"] = d.cond_dim;
  j["cond_len"] = d.cond_len;
  j["latent_dim"] = d.latent_dim;
  j["latent_tokens"] = d.latent_tokens;
  j["width"] = d.width;
  j["heads"] = d.heads;
  j["blocks"] = d.blocks;
  j["mlp_ratio"] = d.mlp_ratio;
  j["time_freqs"] = d.time_freqs;
  j["max_time_freq"] = d.max_time_freq;
  j["disp_layer"] = d.disp_layer;
  j["phi_hidden"] = d.phi_hidden;
  return j.dump(2);
}

}  // namespace vmflow
