#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmflow/attn_mask.hpp"
#include "vmflow/checkpoint.hpp"
#include "vmflow/config.hpp"
#include "vmflow/data_synth.hpp"
#include "vmflow/error.hpp"
#include "vmflow/flow_infer.hpp"
#include "vmflow/flow_train.hpp"
#include "vmflow/granger.hpp"
#include "vmflow/metrics.hpp"
#include "vmflow/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vmflow;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<std::pair<std::string, std::string>> parse_sets(const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::kConfig, "--set expects key=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

fs::path meta_path(const fs::path& data) { return fs::path(data.string() + ".meta.json"); }

// Dataset shape drives the model's input dims.
void fill_data_dims(RunConfig& cfg, const Dataset& data) {
  cfg.dims.sample_len = data.sample_len;
  cfg.dims.token_dim = data.token_dim;
  cfg.dims.cond_len = data.cond_len;
  cfg.dims.cond_dim = data.cond_dim;
  cfg.dims.validate();
}

RunConfig load_run(const fs::path& run_dir) {
  RunConfig cfg = parse_run_config(read_file(run_dir / "config.json"));
  cfg.output_dir = run_dir.string();
  return cfg;
}

fs::path latest_checkpoint(const fs::path& run_dir) {
  const fs::path final_ckpt = run_dir / "checkpoints" / "final.ckpt";
  if (!fs::exists(final_ckpt)) throw Error(ErrorCode::kIo, "no checkpoint at " + final_ckpt.string());
  return final_ckpt;
}

// ---- gen-data ----

struct GenDataArgs {
  std::string kind = "gmm";
  std::string out;
  std::uint64_t seed = 0;
  std::size_t modes = 8;
  float radius = 4.0f;
  float scale = 0.2f;
  std::size_t per_mode = 100;
  bool shared_label = false;
  std::size_t count = 1000;
  std::uint64_t codec_seed = 7;
};

int run_gen_data(const GenDataArgs& a) {
  json meta;
  Dataset data;
  if (a.kind == "gmm") {
    const GmmSpec spec = ring_gmm_spec(a.modes, a.radius, a.scale, a.per_mode, a.shared_label, a.seed);
    data = make_gmm_dataset(spec);
    meta["kind"] = "gmm";
    meta["scale"] = a.scale;
    json means = json::array();
    for (const auto& m : spec.modes) means.push_back(m.mean);
    meta["means"] = means;
  } else if (a.kind == "toy") {
    ToySequenceSpec spec;
    spec.codec_seed = a.codec_seed;
    data = make_toy_dataset(spec, a.count, a.seed);
    meta["kind"] = "toy";
    meta["vocab"] = spec.vocab;
    meta["length"] = spec.length;
    meta["dim"] = spec.dim;
    meta["classes"] = spec.classes;
    meta["tokens_per_class"] = spec.tokens_per_class;
    meta["continuation"] = spec.continuation;
    meta["codec_seed"] = spec.codec_seed;
  } else {
    throw Error(ErrorCode::kConfig, "gen-data: unknown kind '" + a.kind + "' (gmm | toy)");
  }
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_dataset_jsonl(out, data);
  write_file(meta_path(out), meta.dump(2) + "\n");
  std::cout << json{{"rows", data.size()}, {"path", out.string()}}.dump() << "\n";
  return 0;
}

ToySequenceSpec toy_spec_from(const json& m) {
  ToySequenceSpec s;
  s.vocab = m.at("vocab");
  s.length = m.at("length");
  s.dim = m.at("dim");
  s.classes = m.at("classes");
  s.tokens_per_class = m.at("tokens_per_class");
  s.continuation = m.at("continuation");
  s.codec_seed = m.at("codec_seed");
  return s;
}

// ---- train ----

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string dataset;
  std::string out;
  std::string resume;
};

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng(seed).split("data").split(epoch);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

int run_train(const TrainArgs& a) {
  auto sets = parse_sets(a.sets);
  if (!a.dataset.empty()) sets.emplace_back("dataset", json(a.dataset).dump());
  if (!a.out.empty()) sets.emplace_back("output_dir", json(a.out).dump());
  RunConfig cfg = parse_run_config(a.config.empty() ? std::string() : read_file(a.config), sets);
  apply_seed_env(cfg);
  if (cfg.dataset.empty()) throw Error(ErrorCode::kConfig, "train: no dataset given");
  const Dataset data = read_dataset_jsonl(cfg.dataset);
  if (data.size() == 0) throw Error(ErrorCode::kConfig, "train: dataset is empty");
  fill_data_dims(cfg, data);

  const fs::path run_dir(cfg.output_dir);
  fs::create_directories(run_dir / "checkpoints");
  write_file(run_dir / "config.json", run_config_json(cfg) + "\n");

  FlowTrainer trainer(cfg.dims, cfg.train, cfg.seed);
  if (!a.resume.empty()) trainer.load_checkpoint_tensors(load_checkpoint(a.resume), true);

  const std::size_t per_epoch = (data.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = cfg.steps > 0 ? cfg.steps : cfg.epochs * per_epoch;
  std::ofstream log(run_dir / "train.log.jsonl", a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw Error(ErrorCode::kIo, "cannot write train log in " + run_dir.string());

  std::vector<std::size_t> order;
  std::uint64_t order_epoch = ~0ULL;
  LossReport last;
  for (std::size_t s = trainer.steps_taken(); s < total; ++s) {
    const std::uint64_t epoch = s / per_epoch;
    const std::size_t slot = s % per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(data.size(), cfg.seed, epoch);
      order_epoch = epoch;
    }
    const std::size_t lo = slot * cfg.batch_size;
    const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                        order.begin() + static_cast<std::ptrdiff_t>(std::min(lo + cfg.batch_size, data.size())));
    last = trainer.step(data.gather_x(rows), data.gather_c(rows));
    if ((s + 1) % cfg.log_every == 0 || s + 1 == total) {
      json line = json::parse(last.to_json());
      line["step"] = s + 1;
      line["epoch"] = epoch;
      log << line.dump() << "\n";
    }
    const bool epoch_end = slot + 1 == per_epoch;
    if (epoch_end && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04llu.ckpt", static_cast<unsigned long long>(epoch + 1));
      save_checkpoint(run_dir / "checkpoints" / name, trainer.checkpoint_tensors());
    }
  }
  save_checkpoint(run_dir / "checkpoints" / "final.ckpt", trainer.checkpoint_tensors());
  std::cout << json{{"steps", trainer.steps_taken()}, {"run_dir", run_dir.string()},
                    {"final_loss", json::parse(last.to_json())}}
                   .dump()
            << "\n";
  return 0;
}

// ---- sample ----

struct SampleArgs {
  std::string run;
  std::string checkpoint;
  std::string conditions;
  std::string out;
  long long nfe = -1;
  double w = -1.0;
  long long num = -1;
  long long seed = -1;
  bool unconditional = false;
};

int run_sample(const SampleArgs& a) {
  const fs::path run_dir(a.run);
  RunConfig cfg = load_run(run_dir);
  if (a.nfe >= 0) cfg.nfe = static_cast<std::size_t>(a.nfe);
  if (a.w >= 0.0) cfg.guidance_w = static_cast<float>(a.w);
  if (a.num >= 0) cfg.num_samples = static_cast<std::size_t>(a.num);
  if (a.seed >= 0) cfg.sample_seed = static_cast<std::uint64_t>(a.seed);
  if (cfg.nfe == 0) throw Error(ErrorCode::kConfig, "sample: nfe must be >= 1");

  const Dataset cond_data = read_dataset_jsonl(a.conditions.empty() ? cfg.dataset : a.conditions);
  if (cond_data.size() == 0) throw Error(ErrorCode::kConfig, "sample: condition set is empty");
  if (cond_data.cond_dim != cfg.dims.cond_dim || cond_data.cond_len != cfg.dims.cond_len) {
    throw Error(ErrorCode::kConfig, "sample: condition shape does not match the trained model");
  }

  FlowTrainer trainer(cfg.dims, cfg.train, cfg.seed);
  trainer.load_checkpoint_tensors(load_checkpoint(a.checkpoint.empty() ? latest_checkpoint(run_dir) : fs::path(a.checkpoint)),
                                  false);
  CatVelocityField field(trainer.theta(), trainer.variational());

  const fs::path out = a.out.empty() ? run_dir / "samples.jsonl" : fs::path(a.out);
  std::ostringstream text;
  const Rng root = Rng(cfg.sample_seed).split("sample");
  const std::size_t chunk = cfg.batch_size;
  for (std::size_t lo = 0, k = 0; lo < cfg.num_samples; lo += chunk, ++k) {
    const std::size_t n = std::min(chunk, cfg.num_samples - lo);
    std::vector<std::size_t> refs(n);
    for (std::size_t i = 0; i < n; ++i) refs[i] = (lo + i) % cond_data.size();
    const Tensor cond = a.unconditional ? Tensor() : cond_data.gather_c(refs);
    const Shape shape{n, cfg.dims.sample_len, cfg.dims.token_dim};
    const SampleResult res = cfg.nfe == 1 ? sample_one_nfe(field, cond, shape, root.split(k), cfg.guidance_w)
                                          : sample_multi_step(field, cond, shape, root.split(k), cfg.nfe, cfg.guidance_w);
    const std::size_t width = cfg.dims.sample_len * cfg.dims.token_dim;
    const auto xs = res.x.data();
    for (std::size_t i = 0; i < n; ++i) {
      json row;
      row["index"] = lo + i;
      row["nfe"] = cfg.nfe;
      row["w"] = cfg.guidance_w;
      row["conditional"] = !a.unconditional;
      row["ref"] = refs[i];
      row["label"] = cond_data.label[refs[i]];
      row["x"] = std::vector<float>(xs.begin() + static_cast<std::ptrdiff_t>(i * width),
                                    xs.begin() + static_cast<std::ptrdiff_t>((i + 1) * width));
      text << row.dump() << "\n";
    }
  }
  write_file(out, text.str());
  std::cout << json{{"samples", cfg.num_samples}, {"nfe", cfg.nfe}, {"path", out.string()}}.dump() << "\n";
  return 0;
}

struct SampleRow {
  std::size_t ref = 0;
  std::vector<float> x;
};

std::vector<SampleRow> read_samples(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<SampleRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      rows.push_back({j.at("ref").get<std::size_t>(), j.at("x").get<std::vector<float>>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, "bad sample row in " + path.string() + ": " + e.what());
    }
  }
  return rows;
}

// ---- eval ----

struct EvalArgs {
  std::string run;
  std::string samples;
  std::string conditions;
  std::string out;
  std::size_t min_count = 1;
};

int run_eval(const EvalArgs& a) {
  const fs::path run_dir(a.run);
  const RunConfig cfg = load_run(run_dir);
  const fs::path ref_path = a.conditions.empty() ? fs::path(cfg.dataset) : fs::path(a.conditions);
  const Dataset refs = read_dataset_jsonl(ref_path);
  const Dataset train = read_dataset_jsonl(cfg.dataset);
  const json meta = json::parse(read_file(meta_path(ref_path)));
  const auto samples = read_samples(a.samples.empty() ? run_dir / "samples.jsonl" : fs::path(a.samples));
  if (samples.empty()) throw Error(ErrorCode::kConfig, "eval: no samples");
  for (const auto& s : samples) {
    if (s.ref >= refs.size()) throw Error(ErrorCode::kConfig, "eval: sample refers to a missing condition row");
  }

  json out;
  const std::string kind = meta.at("kind");
  if (kind == "gmm") {
    const auto means = meta.at("means").get<std::vector<std::vector<float>>>();
    const double radius = 3.0 * meta.at("scale").get<double>();
    std::vector<std::vector<float>> xs;
    for (const auto& s : samples) xs.push_back(s.x);
    out["kind"] = "gmm";
    out["n_samples"] = samples.size();
    out["radius"] = radius;
    out["min_count"] = a.min_count;
    out["mode_coverage"] = mode_coverage(xs, means, radius, a.min_count);
    std::vector<std::size_t> hits(means.size(), 0);
    for (const auto& x : xs) {
      for (std::size_t m = 0; m < means.size(); ++m) {
        const double dx = x[0] - means[m][0], dy = x[1] - means[m][1];
        if (dx * dx + dy * dy <= radius * radius) ++hits[m];
      }
    }
    out["per_mode"] = hits;
  } else {
    const ToyCodec codec(toy_spec_from(meta));
    const std::size_t vocab = codec.spec().vocab;
    std::vector<std::vector<float>> gen_hist, ref_hist;
    std::vector<std::uint8_t> valid;
    std::vector<std::string> gen_keys, train_keys;
    auto key_of = [](const std::vector<int>& t) {
      std::string k;
      for (int v : t) k += std::to_string(v) + ",";
      return k;
    };
    for (const auto& s : samples) {
      const auto tokens = codec.decode(s.x);
      gen_hist.push_back(token_histogram(tokens, vocab));
      ref_hist.push_back(refs.c[s.ref]);
      valid.push_back(tokens.size() == codec.spec().length);
      gen_keys.push_back(key_of(tokens));
    }
    for (const auto& t : train.tokens) train_keys.push_back(key_of(t));
    const auto cond = conditional_metrics(gen_hist, ref_hist, valid, cosine_similarity, "cosine-token-histogram");
    const auto uncond = unconditional_metrics(gen_keys, train_keys, {}, valid);
    out["kind"] = "toy";
    out["conditional"] = json::parse(cond.to_json());
    out["unconditional"] = json::parse(uncond.to_json());
  }
  const fs::path out_path = a.out.empty() ? run_dir / "metrics.json" : fs::path(a.out);
  write_file(out_path, out.dump(2) + "\n");
  std::cout << out.dump() << "\n";
  return 0;
}

// ---- mask ----

struct MaskArgs {
  std::size_t sample_len = 10;
  std::size_t cond_len = 4;
  std::size_t latent_len = 4;
  std::vector<std::size_t> split;
  double decay = 0.5;
  std::uint64_t seed = 0;
  std::string format = "ascii";
  std::string out;
};

int run_mask(const MaskArgs& a) {
  GroupSplit split;
  if (!a.split.empty()) {
    split = split_from_sizes(a.split);
    split.validate(a.sample_len);
  } else {
    Rng rng(a.seed);
    split = split_with_decay(a.sample_len, a.decay, rng);
  }
  const AttentionMask mask = build_mask(a.sample_len, a.cond_len, a.latent_len, split);
  std::string grid;
  if (a.format == "ascii") {
    grid = mask.to_ascii();
  } else if (a.format == "pgm") {
    grid = mask.to_pgm();
  } else {
    throw Error(ErrorCode::kConfig, "mask: format must be ascii or pgm");
  }
  json side;
  side["seq_len"] = mask.seq_len();
  side["cond_len"] = mask.cond_len;
  side["latent_len"] = mask.latent_len;
  side["visible_len"] = mask.visible_len;
  side["sample_len"] = mask.sample_len;
  side["split"] = split.sizes;
  side["convention"] = "1 = blocked";
  if (a.out.empty()) {
    std::cout << grid;
    std::cerr << side.dump() << "\n";
  } else {
    write_file(a.out, grid);
    write_file(a.out + ".json", side.dump(2) + "\n");
  }
  return 0;
}

// ---- granger ----

struct GrangerArgs {
  std::string input;
  std::string field = "latents";
  std::size_t group_size = 0;
  std::size_t lag = 1;
  std::string out;
};

// Rows hold either nested groups [[...], [...]] or a flat vector cut into
// groups of `group_size`.
std::vector<std::vector<std::vector<double>>> read_latents(const GrangerArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + a.input);
  std::vector<std::vector<std::vector<double>>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, "granger: bad row: " + std::string(e.what()));
    }
    const json& v = j.is_object() ? j.at(a.field) : j;
    if (!v.is_array() || v.empty()) throw Error(ErrorCode::kFormat, "granger: field '" + a.field + "' is not an array");
    std::vector<std::vector<double>> groups;
    if (v.front().is_array()) {
      groups = v.get<std::vector<std::vector<double>>>();
    } else {
      const auto flat = v.get<std::vector<double>>();
      if (a.group_size == 0 || flat.size() % a.group_size != 0) {
        throw Error(ErrorCode::kConfig, "granger: flat rows need --group-size dividing their length");
      }
      for (std::size_t i = 0; i < flat.size(); i += a.group_size)
        groups.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i),
                            flat.begin() + static_cast<std::ptrdiff_t>(i + a.group_size));
    }
    out.push_back(std::move(groups));
  }
  return out;
}

int run_granger(const GrangerArgs& a) {
  const auto latents = read_latents(a);
  const auto hist = latent_causality_report(latents, a.lag);
  if (a.out.empty()) {
    std::cout << hist.to_json() << "\n";
  } else {
    write_file(fs::path(a.out) / "causality.json", hist.to_json() + "\n");
    write_file(fs::path(a.out) / "causality.csv", hist.to_csv());
    std::cout << hist.to_json() << "\n";
  }
  return 0;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownVariant:
      return 2;
    case ErrorCode::kIo:
      return 4;
    default:
      return 3;
  }
}

void report_error(const std::string& kind, const std::string& message, int exit_code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", exit_code}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vmflow: variational mean flow toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset as JSONL");
  gen_cmd->add_option("--kind", gen.kind, "gmm | toy");
  gen_cmd->add_option("--out", gen.out, "Output JSONL path")->required();
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--modes", gen.modes);
  gen_cmd->add_option("--radius", gen.radius);
  gen_cmd->add_option("--scale", gen.scale);
  gen_cmd->add_option("--per-mode", gen.per_mode);
  gen_cmd->add_flag("--shared-label", gen.shared_label, "Every mode gets the same condition");
  gen_cmd->add_option("--count", gen.count, "Toy sequences to draw");
  gen_cmd->add_option("--codec-seed", gen.codec_seed);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model into a run directory");
  train_cmd->add_option("--config", tr.config, "JSON config file");
  train_cmd->add_option("--set", tr.sets, "key=value override (repeatable)");
  train_cmd->add_option("--dataset", tr.dataset);
  train_cmd->add_option("--out", tr.out, "Run directory");
  train_cmd->add_option("--resume", tr.resume, "Checkpoint to continue from");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Draw samples from a trained run");
  sample_cmd->add_option("--run", sa.run)->required();
  sample_cmd->add_option("--checkpoint", sa.checkpoint);
  sample_cmd->add_option("--conditions", sa.conditions, "JSONL whose c rows condition the samples");
  sample_cmd->add_option("--out", sa.out);
  sample_cmd->add_option("--nfe", sa.nfe);
  sample_cmd->add_option("--w", sa.w, "Guidance scale");
  sample_cmd->add_option("--num", sa.num);
  sample_cmd->add_option("--seed", sa.seed);
  sample_cmd->add_flag("--unconditional", sa.unconditional);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score samples against a dataset");
  eval_cmd->add_option("--run", ev.run)->required();
  eval_cmd->add_option("--samples", ev.samples);
  eval_cmd->add_option("--conditions", ev.conditions);
  eval_cmd->add_option("--out", ev.out);
  eval_cmd->add_option("--min-count", ev.min_count);

  MaskArgs ma;
  auto* mask_cmd = app.add_subcommand("mask", "Print an attention mask");
  mask_cmd->add_option("--sample-len", ma.sample_len);
  mask_cmd->add_option("--cond-len", ma.cond_len);
  mask_cmd->add_option("--latent-len", ma.latent_len);
  mask_cmd->add_option("--split", ma.split, "Group sizes, e.g. 9,1")->delimiter(',');
  mask_cmd->add_option("--decay", ma.decay);
  mask_cmd->add_option("--seed", ma.seed);
  mask_cmd->add_option("--format", ma.format, "ascii | pgm");
  mask_cmd->add_option("--out", ma.out);

  GrangerArgs ga;
  auto* granger_cmd = app.add_subcommand("granger", "Granger tests between latent groups");
  granger_cmd->add_option("--input", ga.input)->required();
  granger_cmd->add_option("--field", ga.field);
  granger_cmd->add_option("--group-size", ga.group_size);
  granger_cmd->add_option("--lag", ga.lag);
  granger_cmd->add_option("--out", ga.out, "Directory for causality.json and causality.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what(), 1);
    return 1;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(tr);
    if (*sample_cmd) return run_sample(sa);
    if (*eval_cmd) return run_eval(ev);
    if (*mask_cmd) return run_mask(ma);
    if (*granger_cmd) return run_granger(ga);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    report_error(to_string(e.code()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error("internal", e.what(), 1);
    return 1;
  }
  return 1;
}
