#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "vmflow_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code = -1;
  std::string out, err;
};

Run cli(const std::string& args) {
  const fs::path o = workdir() / "stdout.txt", e = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" + VMFLOW_CLI_PATH + "' " + args + " > '" +
                          o.string() + "' 2> '" + e.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

const char* kTiny =
    "--set width=8 --set heads=2 --set blocks=1 --set mlp_ratio=2 --set time_freqs=2 --set latent_dim=2 "
    "--set disp_layer=1 --set phi_hidden=8 --set batch_size=16 --set steps=3";

}  // namespace

TEST_CASE("exit codes") {
  REQUIRE(cli("gen-data --kind gmm --out data/gmm.jsonl --modes 4 --per-mode 8 --seed 1").code == 0);

  const auto fm = cli(std::string("train --dataset data/gmm.jsonl --out runs/bad --set variant=FM --set p_equal=0.3 ") +
                      kTiny);
  CHECK(fm.code == 3);
  const auto err = json::parse(lines_of(fm.err).back());
  CHECK(err.at("exit_code") == 3);
  CHECK(err.at("error").get<std::string>().size() > 0);

  CHECK(cli("train --dataset data/gmm.jsonl --set variant=VMFQ").code == 2);
  CHECK(cli("train --dataset data/nope.jsonl --out runs/x").code == 4);
  CHECK(cli("train --config missing.json --dataset data/gmm.jsonl").code == 4);
  CHECK(cli("sample --run runs/none").code == 4);
  CHECK(cli("train --dataset data/gmm.jsonl --set bogus_key=1").code == 3);
  CHECK(cli("frobnicate").code == 1);
}

TEST_CASE("mask dump") {
  const auto r = cli("mask --sample-len 10 --cond-len 4 --latent-len 4 --split 9,1 --out mask.txt");
  REQUIRE(r.code == 0);
  const auto rows = lines_of(slurp(workdir() / "mask.txt"));
  REQUIRE(rows.size() == 27);
  for (const auto& row : rows) {
    CHECK(row.size() == 27);
    CHECK(row.substr(0, 8) == "........");
  }
  const auto side = json::parse(slurp(workdir() / "mask.txt.json"));
  CHECK(side.at("seq_len") == 27);
  CHECK(side.at("visible_len") == 9);
  CHECK(side.at("split") == json::array({9, 1}));
  const auto pgm = cli("mask --sample-len 4 --cond-len 1 --latent-len 1 --split 2,2 --format pgm");
  CHECK(pgm.out.rfind("P2", 0) == 0);
  CHECK(cli("mask --sample-len 4 --split 2,3").code == 3);
}

TEST_CASE("train, sample, eval") {
  REQUIRE(cli("gen-data --kind gmm --out data/ring.jsonl --modes 4 --per-mode 8 --seed 2").code == 0);
  const auto tr = cli(std::string("train --dataset data/ring.jsonl --out runs/a --set variant=VMF ") + kTiny);
  REQUIRE(tr.code == 0);
  const fs::path run = workdir() / "runs" / "a";
  CHECK(fs::exists(run / "config.json"));
  CHECK(fs::exists(run / "checkpoints" / "final.ckpt"));
  CHECK(lines_of(slurp(run / "train.log.jsonl")).size() == 3);
  const auto cfg = json::parse(slurp(run / "config.json"));
  CHECK(cfg.at("token_dim") == 2);
  CHECK(cfg.at("variant") == "VMF");

  REQUIRE(cli("sample --run runs/a --nfe 1 --w 1.0 --num 7").code == 0);
  const auto rows = lines_of(slurp(run / "samples.jsonl"));
  REQUIRE(rows.size() == 7);
  for (const auto& line : rows) {
    const auto j = json::parse(line);
    CHECK(j.at("nfe") == 1);
    CHECK(j.at("x").size() == 2);
  }
  REQUIRE(cli("sample --run runs/a --nfe 3 --num 5 --out runs/a/s3.jsonl").code == 0);
  for (const auto& line : lines_of(slurp(run / "s3.jsonl"))) CHECK(json::parse(line).at("nfe") == 3);

  REQUIRE(cli("eval --run runs/a").code == 0);
  const auto metrics = json::parse(slurp(run / "metrics.json"));
  CHECK(metrics.at("kind") == "gmm");
  CHECK(metrics.at("n_samples") == 7);
  CHECK(metrics.at("mode_coverage").get<double>() >= 0.0);
}

TEST_CASE("toy run and granger") {
  REQUIRE(cli("gen-data --kind toy --out data/toy.jsonl --count 40 --seed 3").code == 0);
  REQUIRE(cli(std::string("train --dataset data/toy.jsonl --out runs/toy --set variant=MF ") + kTiny).code == 0);
  REQUIRE(cli("sample --run runs/toy --num 12").code == 0);
  REQUIRE(cli("eval --run runs/toy").code == 0);
  const auto m = json::parse(slurp(workdir() / "runs" / "toy" / "metrics.json"));
  CHECK(m.at("conditional").at("metrics").at("validity") == 100.0);

  const auto g = cli("granger --input runs/toy/samples.jsonl --field x --group-size 8 --lag 1 --out runs/toy");
  REQUIRE(g.code == 0);
  const auto hist = json::parse(slurp(workdir() / "runs" / "toy" / "causality.json"));
  CHECK(hist.at("samples") == 12);
  CHECK(fs::exists(workdir() / "runs" / "toy" / "causality.csv"));
  CHECK(cli("granger --input runs/toy/samples.jsonl --field x --lag 1").code == 3);
}

TEST_CASE("same seed, same bytes") {
  REQUIRE(cli("gen-data --kind gmm --out data/rep.jsonl --modes 3 --per-mode 6 --seed 4").code == 0);
  for (const char* name : {"r1", "r2"}) {
    REQUIRE(cli(std::string("train --dataset data/rep.jsonl --out runs/") + name + " " + kTiny).code == 0);
    REQUIRE(cli(std::string("sample --run runs/") + name + " --num 9 --nfe 2").code == 0);
  }
  const auto a = slurp(workdir() / "runs" / "r1" / "samples.jsonl");
  CHECK(!a.empty());
  CHECK(a == slurp(workdir() / "runs" / "r2" / "samples.jsonl"));
  CHECK(slurp(workdir() / "runs" / "r1" / "checkpoints" / "final.ckpt") ==
        slurp(workdir() / "runs" / "r2" / "checkpoints" / "final.ckpt"));
}
