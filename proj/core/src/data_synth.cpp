#include "vmflow/data_synth.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <numeric>

#include "vmflow/error.hpp"
#include "vmflow/rng.hpp"

namespace vmflow {

using nlohmann::json;

void Dataset::validate() const {
  const std::size_t xw = sample_len * token_dim;
  const std::size_t cw = cond_len * cond_dim;
  if (xw == 0) throw Error(ErrorCode::kShapeMismatch, "dataset: empty sample shape");
  if (c.size() != x.size() || label.size() != x.size() || mode.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset: column lengths disagree");
  }
  if (!tokens.empty() && tokens.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset: token column length disagrees");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != xw || c[i].size() != cw) {
      throw Error(ErrorCode::kShapeMismatch, "dataset: row " + std::to_string(i) + " has the wrong width");
    }
  }
}

namespace {

void check_rows(const std::vector<std::size_t>& indices, std::size_t size) {
  for (std::size_t i : indices) {
    if (i >= size) {
      throw Error(ErrorCode::kInvalidArgument,
                  "dataset: row " + std::to_string(i) + " out of range (" + std::to_string(size) + " rows)");
    }
  }
}

}  // namespace

Tensor Dataset::gather_x(const std::vector<std::size_t>& indices) const {
  check_rows(indices, size());
  std::vector<float> out;
  out.reserve(indices.size() * sample_len * token_dim);
  for (std::size_t i : indices) out.insert(out.end(), x.at(i).begin(), x.at(i).end());
  return Tensor::from_data({indices.size(), sample_len, token_dim}, std::move(out));
}

Tensor Dataset::gather_c(const std::vector<std::size_t>& indices) const {
  check_rows(indices, size());
  std::vector<float> out;
  out.reserve(indices.size() * cond_len * cond_dim);
  for (std::size_t i : indices) out.insert(out.end(), c.at(i).begin(), c.at(i).end());
  return Tensor::from_data({indices.size(), cond_len, cond_dim}, std::move(out));
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  check_rows(indices, size());
  Dataset out;
  out.sample_len = sample_len;
  out.token_dim = token_dim;
  out.cond_len = cond_len;
  out.cond_dim = cond_dim;
  for (std::size_t i : indices) {
    out.x.push_back(x.at(i));
    out.c.push_back(c.at(i));
    out.label.push_back(label.at(i));
    out.mode.push_back(mode.at(i));
    if (!tokens.empty()) out.tokens.push_back(tokens.at(i));
  }
  return out;
}

GmmSpec ring_gmm_spec(std::size_t modes, float radius, float scale, std::size_t samples_per_mode,
                      bool shared_label, std::uint64_t seed) {
  GmmSpec spec;
  spec.dim = 2;
  spec.samples_per_mode = samples_per_mode;
  spec.seed = seed;
  for (std::size_t k = 0; k < modes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(modes);
    GmmMode m;
    m.mean = {static_cast<float>(radius * std::cos(angle)), static_cast<float>(radius * std::sin(angle))};
    m.scale = scale;
    m.label = shared_label ? 0 : static_cast<int>(k);
    spec.modes.push_back(std::move(m));
  }
  return spec;
}

std::vector<float> gmm_condition(const GmmSpec& spec, int label) {
  if (label < 0) throw Error(ErrorCode::kInvalidArgument, "gmm: negative label");
  Rng rng = Rng(spec.seed).split("condition").split(static_cast<std::uint64_t>(label));
  std::vector<float> c(spec.cond_dim);
  for (auto& v : c) v = rng.normal();
  return c;
}

Dataset make_gmm_dataset(const GmmSpec& spec) {
  if (spec.dim == 0) throw Error(ErrorCode::kInvalidArgument, "gmm: dim must be >= 1");
  if (spec.modes.empty()) throw Error(ErrorCode::kInvalidArgument, "gmm: no modes");
  if (spec.cond_dim == 0) throw Error(ErrorCode::kInvalidArgument, "gmm: cond_dim must be >= 1");
  for (std::size_t a = 0; a < spec.modes.size(); ++a) {
    const GmmMode& m = spec.modes[a];
    if (m.mean.size() != spec.dim) throw Error(ErrorCode::kShapeMismatch, "gmm: mode mean has the wrong dim");
    if (!(m.scale > 0.0f) || !std::isfinite(m.scale)) {
      throw Error(ErrorCode::kDegenerate, "gmm: mode " + std::to_string(a) + " has non-positive scale");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (spec.modes[b].mean == m.mean) throw Error(ErrorCode::kInvalidArgument, "gmm: duplicate mode means");
    }
  }
  Dataset out;
  out.sample_len = 1;
  out.token_dim = spec.dim;
  out.cond_len = 1;
  out.cond_dim = spec.cond_dim;
  const Rng root(spec.seed);
  for (std::size_t k = 0; k < spec.modes.size(); ++k) {
    const GmmMode& m = spec.modes[k];
    const std::vector<float> c = gmm_condition(spec, m.label);
    Rng rng = root.split("mode").split(k);
    for (std::size_t i = 0; i < spec.samples_per_mode; ++i) {
      std::vector<float> x(spec.dim);
      for (std::size_t d = 0; d < spec.dim; ++d) x[d] = m.mean[d] + m.scale * rng.normal();
      out.x.push_back(std::move(x));
      out.c.push_back(c);
      out.label.push_back(m.label);
      out.mode.push_back(static_cast<int>(k));
    }
  }
  return out;
}

ToyCodec::ToyCodec(const ToySequenceSpec& spec) : spec_(spec) {
  if (spec.vocab < 2 || spec.dim == 0 || spec.length == 0) {
    throw Error(ErrorCode::kInvalidArgument, "codec: need vocab >= 2, dim >= 1, length >= 1");
  }
  Rng rng = Rng(spec.codec_seed).split("codebook");
  codebook_.resize(spec.vocab * spec.dim);
  for (auto& v : codebook_) v = rng.normal();
  if (min_gap() <= 0.0) throw Error(ErrorCode::kDegenerate, "codec: coincident codewords");
}

std::vector<float> ToyCodec::encode(const std::vector<int>& tokens) const {
  if (tokens.size() != spec_.length) {
    throw Error(ErrorCode::kShapeMismatch, "codec: expected " + std::to_string(spec_.length) + " tokens, got " +
                                               std::to_string(tokens.size()));
  }
  std::vector<float> out;
  out.reserve(spec_.length * spec_.dim);
  for (int tok : tokens) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= spec_.vocab) {
      throw Error(ErrorCode::kInvalidArgument, "codec: token " + std::to_string(tok) + " outside vocab");
    }
    const float* row = codebook_.data() + static_cast<std::size_t>(tok) * spec_.dim;
    out.insert(out.end(), row, row + spec_.dim);
  }
  return out;
}

std::vector<int> ToyCodec::decode(std::span<const float> latent) const {
  if (latent.size() != spec_.length * spec_.dim) {
    throw Error(ErrorCode::kShapeMismatch, "codec: latent width " + std::to_string(latent.size()) +
                                               ", expected " + std::to_string(spec_.length * spec_.dim));
  }
  std::vector<int> tokens(spec_.length);
  for (std::size_t p = 0; p < spec_.length; ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < spec_.vocab; ++k) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < spec_.dim; ++j) {
        const double diff = static_cast<double>(latent[p * spec_.dim + j]) - codebook_[k * spec_.dim + j];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        tokens[p] = static_cast<int>(k);
      }
    }
  }
  return tokens;
}

double ToyCodec::min_gap() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < spec_.vocab; ++a) {
    for (std::size_t b = a + 1; b < spec_.vocab; ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < spec_.dim; ++j) {
        const double diff = static_cast<double>(codebook_[a * spec_.dim + j]) - codebook_[b * spec_.dim + j];
        d2 += diff * diff;
      }
      best = std::min(best, d2);
    }
  }
  return std::sqrt(best);
}

std::vector<float> token_histogram(const std::vector<int>& tokens, std::size_t vocab) {
  std::vector<float> h(vocab, 0.0f);
  for (int t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) throw Error(ErrorCode::kInvalidArgument, "token outside vocab");
    h[static_cast<std::size_t>(t)] += 1.0f;
  }
  if (!tokens.empty()) {
    for (auto& v : h) v /= static_cast<float>(tokens.size());
  }
  return h;
}

std::vector<int> class_tokens(const ToySequenceSpec& spec, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= spec.classes) {
    throw Error(ErrorCode::kInvalidArgument, "toy: label " + std::to_string(label) + " out of range");
  }
  if (spec.tokens_per_class == 0 || spec.tokens_per_class > spec.vocab) {
    throw Error(ErrorCode::kInvalidArgument, "toy: tokens_per_class must lie in [1, vocab]");
  }
  std::vector<int> pool(spec.vocab);
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng = Rng(spec.codec_seed).split("classes").split(static_cast<std::uint64_t>(label));
  for (std::size_t i = 0; i < spec.tokens_per_class; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                            static_cast<std::int64_t>(spec.vocab) - 1));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(spec.tokens_per_class);
  return pool;
}

std::vector<int> sample_sequence(const ToySequenceSpec& spec, int label, std::uint64_t seed, std::uint64_t index) {
  const std::vector<int> allowed = class_tokens(spec, label);
  const auto n = static_cast<std::int64_t>(allowed.size());
  Rng rng = Rng(seed).split("sequence").split(index);
  std::vector<int> out(spec.length);
  std::int64_t pos = rng.uniform_int(0, n - 1);
  for (std::size_t i = 0; i < spec.length; ++i) {
    if (i > 0) pos = rng.bernoulli(spec.continuation) ? (pos + 1) % n : rng.uniform_int(0, n - 1);
    out[i] = allowed[static_cast<std::size_t>(pos)];
  }
  return out;
}

Dataset make_toy_dataset(const ToySequenceSpec& spec, std::size_t count, std::uint64_t seed) {
  const ToyCodec codec(spec);
  Dataset out;
  out.sample_len = spec.length;
  out.token_dim = spec.dim;
  out.cond_len = 1;
  out.cond_dim = spec.vocab;
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % spec.classes);
    std::vector<int> tokens = sample_sequence(spec, label, seed, i);
    out.x.push_back(codec.encode(tokens));
    out.c.push_back(token_histogram(tokens, spec.vocab));
    out.label.push_back(label);
    out.mode.push_back(-1);
    out.tokens.push_back(std::move(tokens));
  }
  return out;
}

void write_dataset_jsonl(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (std::size_t i = 0; i < data.size(); ++i) {
    json meta = {{"label", data.label[i]}};
    if (data.tokens.empty()) {
      meta["mode"] = data.mode[i];
    } else {
      meta["tokens"] = data.tokens[i];
    }
    json row = {{"x", data.x[i]},
                {"c", data.c[i]},
                {"meta", meta},
                {"shape", {data.sample_len, data.token_dim, data.cond_len, data.cond_dim}}};
    out << row.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

Dataset read_dataset_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Dataset out;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json row = json::parse(line);
      const auto shape = row.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 4) throw Error(ErrorCode::kFormat, "shape needs 4 entries");
      if (first) {
        out.sample_len = shape[0];
        out.token_dim = shape[1];
        out.cond_len = shape[2];
        out.cond_dim = shape[3];
        first = false;
      } else if (shape != std::vector<std::size_t>{out.sample_len, out.token_dim, out.cond_len, out.cond_dim}) {
        throw Error(ErrorCode::kFormat, "shape differs from the first row");
      }
      out.x.push_back(row.at("x").get<std::vector<float>>());
      out.c.push_back(row.at("c").get<std::vector<float>>());
      const json& meta = row.at("meta");
      out.label.push_back(meta.at("label").get<int>());
      out.mode.push_back(meta.value("mode", -1));
      if (meta.contains("tokens")) out.tokens.push_back(meta["tokens"].get<std::vector<int>>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.x.empty()) throw Error(ErrorCode::kFormat, path.string() + ": no rows");
  out.validate();
  return out;
}

}  // namespace vmflow
