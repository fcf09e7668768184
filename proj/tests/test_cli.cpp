#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "embalign/cli.hpp"
#include "embalign/io.hpp"
#include "test_util.hpp"

using namespace embalign;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("embalign_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// A small synthetic pair plus quick fit flags, shared by several cases.
const TempDir& workspace() {
  static const TempDir dir = [] {
    TempDir d;
    const Run r = run({"synth", "--n", "600", "--d", "12", "--components", "6", "--noise", "0.01",
                       "--eval-pairs", "80", "--seed", "1", "--out-dir", d.path.string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::vector<std::string> fit_args(const TempDir& d, const std::string& out) {
  return {"fit",       "--source",  d / "XA.emb", "--target", d / "XB.emb", "--out",  out,
          "--preset",  "small",     "--c",        "6",        "--n-sample", "300",  "--c-prime",
          "30",        "--t",       "20"};
}

std::vector<std::string> with(std::vector<std::string> args, const std::string& flag,
                              const std::string& value) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == flag) {
      args[i + 1] = value;
      return args;
    }
  args.push_back(flag);
  args.push_back(value);
  return args;
}

}  // namespace

TEST_CASE("synth writes every artifact") {
  const auto& d = workspace();
  for (const char* name : {"XA.emb", "XB.emb", "evalA.emb", "evalB.emb", "truth.json"})
    CHECK(fs::exists(d.path / name));
  CHECK(read_embeddings(d / "XA.emb").rows() == 600);
  CHECK(read_embeddings(d / "evalB.emb").rows() == 80);
  const auto truth = nlohmann::json::parse(slurp(d.path / "truth.json"));
  CHECK(truth["rotation"].size() == 12);
  CHECK(truth["translation"].size() == 12);
  CHECK(truth["scale"].get<double>() > 0.0);
}

TEST_CASE("fit, translate, eval and inspect") {
  const auto& d = workspace();
  const std::string model = d / "m1.bin";
  Run r = run(fit_args(d, model));
  REQUIRE_MESSAGE(r.code == 0, r.err);

  r = run({"eval", "--model", model, "--eval-source", d / "evalA.emb", "--eval-target", d / "evalB.emb",
           "--json"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = nlohmann::json::parse(r.out);
  for (const char* key : {"top1", "avgRank", "meanCosine", "n", "perStage"}) CHECK(report.contains(key));
  CHECK(report["n"].get<int>() == 80);
  CHECK(report["top1"].get<double>() >= 0.0);
  CHECK(report["avgRank"].get<double>() >= 1.0);

  r = run({"eval", "--model", model, "--eval-source", d / "evalA.emb", "--eval-target", d / "evalB.emb"});
  CHECK(r.code == 0);
  CHECK(r.out.find("top1") != std::string::npos);

  r = run({"translate", "--model", model, "--in", d / "evalA.emb", "--out", d / "mapped.emb"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto mapped = read_embeddings(d / "mapped.emb");
  CHECK(mapped.rows() == 80);
  CHECK(mapped.dim() == 12);

  r = run({"inspect", "--model", model});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("orthogonality") != std::string::npos);
  CHECK(r.out.find("12") != std::string::npos);
}

TEST_CASE("fit is byte-identical across runs") {
  const auto& d = workspace();
  REQUIRE(run(fit_args(d, d / "a.bin")).code == 0);
  REQUIRE(run(fit_args(d, d / "b.bin")).code == 0);
  CHECK(slurp(d.path / "a.bin") == slurp(d.path / "b.bin"));
  REQUIRE(run(with(fit_args(d, d / "c.bin"), "--seed", "9")).code == 0);
  CHECK(slurp(d.path / "a.bin") != slurp(d.path / "c.bin"));
}

TEST_CASE("invalid flag value is a usage error naming the flag") {
  const auto& d = workspace();
  const Run r = run(with(fit_args(d, d / "bad.bin"), "--c", "0"));
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("invalid value for --c") != std::string::npos);
  CHECK_FALSE(fs::exists(d.path / "bad.bin"));

  const Run a = run(with(fit_args(d, d / "bad.bin"), "--alpha", "2"));
  CHECK(a.code == kExitUsage);
  CHECK(a.err.find("invalid value for --alpha") != std::string::npos);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"fit", "--source", "x"}).code == kExitUsage);
}

TEST_CASE("config file feeds the fit and flags override it") {
  const auto& d = workspace();
  {
    std::ofstream cfg(d.path / "cfg.json");
    cfg << R"({"t": 3, "seed": 5, "kprime": 7})";
  }
  auto args = with(fit_args(d, d / "cfg.bin"), "--t", "4");
  args.insert(args.end(), {"--config", d / "cfg.json"});
  REQUIRE(run(args).code == 0);
  const auto model = load_model(d / "cfg.bin");
  CHECK(model.config.iterations == 4);
  CHECK(model.config.seed == 5);
  CHECK(model.config.k_prime == 7);
  CHECK(model.config.c == 6);

  {
    std::ofstream cfg(d.path / "unknown.json");
    cfg << R"({"clusters": 3})";
  }
  args = fit_args(d, d / "x.bin");
  args.insert(args.end(), {"--config", d / "unknown.json"});
  const Run r = run(args);
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("clusters") != std::string::npos);
}

TEST_CASE("data and numerical failures map to their exit codes") {
  const auto& d = workspace();
  Run r = run({"fit", "--source", d / "missing.emb", "--target", d / "XB.emb", "--out", d / "x.bin"});
  CHECK(r.code == kExitData);
  {
    std::ofstream bad(d.path / "bad.emb", std::ios::binary);
    bad << "garbage";
  }
  r = run({"translate", "--model", d / "bad.emb", "--in", d / "evalA.emb", "--out", d / "y.emb"});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("BadMagic") != std::string::npos);

  r = run(with(fit_args(d, d / "z.bin"), "--c", "700"));
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("anchors") != std::string::npos);
}

TEST_CASE("degenerate rows are dropped with a warning") {
  const auto& d = workspace();
  Matrix pool = read_embeddings(d / "XA.emb").data();
  pool.row(0) = (pool.colwise().sum() - pool.row(0)) / static_cast<double>(pool.rows() - 1);
  write_embeddings(d / "XAdeg.emb", EmbeddingMatrix(pool));
  auto args = fit_args(d, d / "deg.bin");
  args[2] = d / "XAdeg.emb";
  const Run r = run(args);
  CHECK(r.code == 0);
  CHECK(r.err.find("warning: dropping 1 degenerate") != std::string::npos);
}
