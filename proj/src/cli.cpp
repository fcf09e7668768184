#include "embalign/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "embalign/core.hpp"
#include "embalign/error.hpp"
#include "embalign/io.hpp"
#include "embalign/mapping.hpp"
#include "embalign/parallel.hpp"
#include "embalign/pipeline.hpp"
#include "embalign/synth.hpp"

namespace embalign {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Config-file key -> command-line flag.
const std::map<std::string, std::string>& flag_names() {
  static const std::map<std::string, std::string> names = {
      {"c", "--c"},
      {"k", "--k"},
      {"s", "--s"},
      {"t", "--t"},
      {"alpha", "--alpha"},
      {"kprime", "--k-prime"},
      {"cprime", "--c-prime"},
      {"nsample", "--n-sample"},
      {"qaprestarts", "--qap-restarts"},
      {"refine2iters", "--refine2-iters"},
      {"seed", "--seed"},
  };
  return names;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code_for(const Error& e) {
  if (!e.stage().empty()) return kExitNumerical;
  switch (e.code()) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kSpecInvalid:
      return kExitUsage;
    case ErrorCode::kTooFewPoints:
    case ErrorCode::kZeroCentroid:
    case ErrorCode::kZeroAnchor:
    case ErrorCode::kKTooLarge:
    case ErrorCode::kTooFewPairs:
    case ErrorCode::kShapeMismatch:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

json config_to_json(const PipelineConfig& c) {
  return json{{"c", c.c},           {"k", c.k},
              {"s", c.s},           {"t", c.iterations},
              {"alpha", c.alpha},   {"kprime", c.k_prime},
              {"cprime", c.c_prime}, {"nsample", c.n_sample},
              {"qaprestarts", c.qap_restarts}, {"refine2iters", c.refine2_iterations},
              {"seed", c.seed}};
}

PipelineConfig preset_config(const std::string& preset) {
  if (preset == "paper") return PipelineConfig::paper_defaults();
  if (preset == "small") return PipelineConfig::small_preset();
  throw UsageError("unknown preset '" + preset + "' (expected 'paper' or 'small')");
}

Index json_count(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw UsageError("config key '" + key + "' must be an integer");
  return v.get<Index>();
}

void apply_config_file(const fs::path& path, PipelineConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  if (doc.contains("preset")) cfg = preset_config(doc["preset"].get<std::string>());
  for (const auto& [key, value] : doc.items()) {
    if (key == "preset") continue;
    if (key == "c") cfg.c = json_count(value, key);
    else if (key == "k") cfg.k = json_count(value, key);
    else if (key == "s") cfg.s = json_count(value, key);
    else if (key == "t") cfg.iterations = json_count(value, key);
    else if (key == "kprime") cfg.k_prime = json_count(value, key);
    else if (key == "cprime") cfg.c_prime = json_count(value, key);
    else if (key == "nsample") cfg.n_sample = json_count(value, key);
    else if (key == "qaprestarts") cfg.qap_restarts = json_count(value, key);
    else if (key == "refine2iters") cfg.refine2_iterations = json_count(value, key);
    else if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer())
        throw UsageError("config key 'seed' must be an integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "alpha") {
      if (!value.is_number()) throw UsageError("config key 'alpha' must be a number");
      cfg.alpha = value.get<double>();
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
}

// Drops rows that center to zero, warning about each batch.
EmbeddingMatrix without_degenerate(const EmbeddingMatrix& x, const std::string& what, std::ostream& err) {
  EmbeddingMatrix current = x;
  for (;;) {
    auto [kept, dropped] = drop_degenerate_rows(current);
    if (dropped.empty()) return kept;
    err << "warning: dropping " << dropped.size() << " degenerate row(s) from " << what << "\n";
    current = std::move(kept);
  }
}

struct Timer {
  bool enabled;
  std::ostream& err;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  ~Timer() {
    if (!enabled) return;
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    err << "elapsed: " << ms << " ms\n";
  }
};

struct FitArgs {
  std::string source, target, out, config, preset = "paper";
  Index c = 0, k = 0, s = 0, t = 0, k_prime = 0, c_prime = 0, n_sample = 0, qap_restarts = 0,
        refine2_iters = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, CLI::Option*> opts;
};

int run_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  PipelineConfig cfg = preset_config(a.preset);
  if (!a.config.empty()) apply_config_file(a.config, cfg);
  auto given = [&](const char* key) { return a.opts.at(key)->count() > 0; };
  if (given("c")) cfg.c = a.c;
  if (given("k")) cfg.k = a.k;
  if (given("s")) cfg.s = a.s;
  if (given("t")) cfg.iterations = a.t;
  if (given("alpha")) cfg.alpha = a.alpha;
  if (given("kprime")) cfg.k_prime = a.k_prime;
  if (given("cprime")) cfg.c_prime = a.c_prime;
  if (given("nsample")) cfg.n_sample = a.n_sample;
  if (given("qaprestarts")) cfg.qap_restarts = a.qap_restarts;
  if (given("refine2iters")) cfg.refine2_iterations = a.refine2_iters;
  if (given("seed")) cfg.seed = a.seed;
  cfg.validate();

  const EmbeddingMatrix xa = without_degenerate(read_embeddings(a.source), "source pool", err);
  const EmbeddingMatrix xb = without_degenerate(read_embeddings(a.target), "target pool", err);

  FitLog log;
  const AlignmentModel model = fit(xa, xb, cfg, &log);
  for (const auto& w : log.warnings) err << "warning: " << w << "\n";
  save_model(a.out, model);

  out << "model: " << a.out << "\n";
  out << "dimension: " << model.dim() << "\n";
  out << "mean cosine initial: " << format_double(model.diagnostics.initial) << "\n";
  out << "mean cosine refine-1: " << format_double(model.diagnostics.refine1) << "\n";
  out << "mean cosine refine-2: " << format_double(model.diagnostics.refine2) << "\n";
  return kExitOk;
}

int run_translate(const std::string& model_path, const std::string& in_path,
                  const std::string& out_path, std::ostream& out, std::ostream& err) {
  const AlignmentModel model = load_model(model_path);
  const EmbeddingMatrix x = read_embeddings(in_path);
  if (x.dim() != model.dim())
    throw Error(ErrorCode::kDimensionMismatch, "input dimension " + std::to_string(x.dim()) +
                                                   " does not match model dimension " +
                                                   std::to_string(model.dim()));
  auto [kept, dropped] = drop_degenerate_rows(x, model.stats_a.mean);
  if (!dropped.empty()) {
    err << "warning: dropping " << dropped.size() << " degenerate input row(s):";
    for (Index i : dropped) err << " " << i;
    err << "\n";
  }
  const EmbeddingMatrix y = translate(model, kept);
  write_embeddings(out_path, y);
  out << "translated " << y.rows() << " row(s) -> " << out_path << "\n";
  return kExitOk;
}

int run_eval(const std::string& model_path, const std::string& ea_path, const std::string& eb_path,
             bool as_json, std::ostream& out, std::ostream& err) {
  const AlignmentModel model = load_model(model_path);
  EmbeddingMatrix ea = read_embeddings(ea_path);
  EmbeddingMatrix eb = read_embeddings(eb_path);
  if (ea.rows() != eb.rows())
    throw Error(ErrorCode::kLengthMismatch, "evaluation sets have " + std::to_string(ea.rows()) +
                                                " and " + std::to_string(eb.rows()) + " rows");
  if (ea.dim() != model.dim() || eb.dim() != model.dim())
    throw Error(ErrorCode::kDimensionMismatch, "evaluation dimension does not match model");

  // Drop pairs where either side is degenerate under the model statistics.
  std::vector<Index> keep;
  for (Index i = 0; i < ea.rows(); ++i) {
    const bool bad_a = (ea.data().row(i) - model.stats_a.mean).norm() < kDegenerateNorm;
    const bool bad_b = (eb.data().row(i) - model.stats_b.mean).norm() < kDegenerateNorm;
    if (!bad_a && !bad_b) keep.push_back(i);
  }
  if (keep.empty()) throw Error(ErrorCode::kEmptyInput, "every evaluation pair is degenerate");
  if (static_cast<Index>(keep.size()) != ea.rows()) {
    err << "warning: dropping " << ea.rows() - static_cast<Index>(keep.size())
        << " degenerate evaluation pair(s)\n";
    Matrix ka(static_cast<Index>(keep.size()), ea.dim()), kb(static_cast<Index>(keep.size()), eb.dim());
    for (std::size_t r = 0; r < keep.size(); ++r) {
      ka.row(static_cast<Index>(r)) = ea.data().row(keep[r]);
      kb.row(static_cast<Index>(r)) = eb.data().row(keep[r]);
    }
    ea = EmbeddingMatrix(std::move(ka), ea.label());
    eb = EmbeddingMatrix(std::move(kb), eb.label());
  }

  const EvalReport report = evaluate(model, ea, eb);
  if (as_json) {
    json per_stage = json::object();
    for (const auto& [stage, value] : report.per_stage) per_stage[stage] = value;
    json doc{{"top1", report.top1},
             {"avgRank", report.avg_rank},
             {"meanCosine", report.mean_cosine},
             {"n", report.n},
             {"perStage", per_stage}};
    out << doc.dump(2) << "\n";
  } else {
    out << "pairs: " << report.n << "\n";
    out << "top1: " << format_double(report.top1) << "\n";
    out << "avg rank: " << format_double(report.avg_rank) << "\n";
    out << "mean cosine: " << format_double(report.mean_cosine) << "\n";
  }
  return kExitOk;
}

int run_synth(const SynthSpec& spec, const std::string& out_dir, std::ostream& out) {
  const SynthData data = synth_generate(spec);
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  write_embeddings(dir / "XA.emb", data.xa);
  write_embeddings(dir / "XB.emb", data.xb);
  write_embeddings(dir / "evalA.emb", data.eval_a);
  write_embeddings(dir / "evalB.emb", data.eval_b);

  json rotation = json::array();
  for (Index i = 0; i < data.truth.rotation.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < data.truth.rotation.cols(); ++j) row.push_back(data.truth.rotation(i, j));
    rotation.push_back(std::move(row));
  }
  json translation = json::array();
  for (Index j = 0; j < data.truth.translation.size(); ++j) translation.push_back(data.truth.translation(j));
  json doc{{"rotation", rotation},
           {"translation", translation},
           {"scale", data.truth.scale},
           {"convention", "xB = scale * (xA * rotation) + translation + noise"},
           {"spec",
            {{"n", spec.n},
             {"d", spec.d},
             {"components", spec.components},
             {"noise", spec.noise_sigma},
             {"anisotropy", spec.anisotropy},
             {"evalPairs", spec.eval_pairs},
             {"seed", spec.seed}}}};
  std::ofstream truth(dir / "truth.json");
  if (!truth) throw Error(ErrorCode::kIo, "cannot write truth.json");
  truth << doc.dump(2) << "\n";

  out << "wrote " << data.xa.rows() << " + " << data.xb.rows() << " pool rows and " << data.eval_a.rows()
      << " evaluation pairs to " << dir.string() << "\n";
  return kExitOk;
}

int run_inspect(const std::string& model_path, std::ostream& out) {
  const AlignmentModel model = load_model(model_path);
  out << "dimension: " << model.dim() << "\n";
  out << "config: " << config_to_json(model.config).dump() << "\n";
  out << "mean cosine initial: " << format_double(model.diagnostics.initial) << "\n";
  out << "mean cosine refine-1: " << format_double(model.diagnostics.refine1) << "\n";
  out << "mean cosine refine-2: " << format_double(model.diagnostics.refine2) << "\n";
  out << "refine-1 iterations traced: " << model.diagnostics.refine1_trace.size() << "\n";
  out << "mean-norm share A/B: " << format_double(model.stats_a.mean_norm_share) << " / "
      << format_double(model.stats_b.mean_norm_share) << "\n";
  std::ostringstream defect;
  defect << std::scientific << std::setprecision(3) << orthogonality_defect(model.w);
  out << "orthogonality defect max|W^T W - I|: " << defect.str() << "\n";
  out << "spectral norm: " << format_double(spectral_norm(model.w)) << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised linear alignment of two embedding pools"};
  app.require_subcommand(1);
  unsigned threads = 0;
  bool verbose = false;
  app.add_option("--threads", threads, "Worker thread cap for inner kernels (0 = all cores)");
  app.add_flag("--verbose", verbose, "Print timing information to stderr");

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Learn a map from a source pool to a target pool");
  fit_cmd->add_option("--source", fa.source, "Source embeddings (EMB1 or .csv)")->required();
  fit_cmd->add_option("--target", fa.target, "Target embeddings (EMB1 or .csv)")->required();
  fit_cmd->add_option("--out", fa.out, "Output model file")->required();
  fit_cmd->add_option("--config", fa.config, "JSON file with hyperparameters");
  fit_cmd->add_option("--preset", fa.preset, "Base hyperparameters: paper (default) or small");
  fa.opts["c"] = fit_cmd->add_option("--c", fa.c, "Clusters per anchor run");
  fa.opts["k"] = fit_cmd->add_option("--k", fa.k, "Neighbors averaged per pseudo-pair");
  fa.opts["s"] = fit_cmd->add_option("--s", fa.s, "Anchor runs");
  fa.opts["t"] = fit_cmd->add_option("--t", fa.t, "Refine-1 iterations");
  fa.opts["alpha"] = fit_cmd->add_option("--alpha", fa.alpha, "Smoothing weight in (0, 1]");
  fa.opts["kprime"] = fit_cmd->add_option("--k-prime", fa.k_prime, "Refine-1 neighbors");
  fa.opts["cprime"] = fit_cmd->add_option("--c-prime", fa.c_prime, "Refine-2 clusters");
  fa.opts["nsample"] = fit_cmd->add_option("--n-sample", fa.n_sample, "Refine-1 sample size");
  fa.opts["qaprestarts"] = fit_cmd->add_option("--qap-restarts", fa.qap_restarts, "2-OPT restarts");
  fa.opts["refine2iters"] = fit_cmd->add_option("--refine2-iters", fa.refine2_iters, "Refine-2 passes");
  fa.opts["seed"] = fit_cmd->add_option("--seed", fa.seed, "Master random seed");

  std::string model_path, in_path, out_path;
  auto* tr_cmd = app.add_subcommand("translate", "Map embeddings into the target space");
  tr_cmd->add_option("--model", model_path, "Model file")->required();
  tr_cmd->add_option("--in", in_path, "Input embeddings")->required();
  tr_cmd->add_option("--out", out_path, "Output embeddings")->required();

  std::string ea_path, eb_path;
  bool as_json = false;
  auto* ev_cmd = app.add_subcommand("eval", "Retrieval metrics on parallel evaluation pairs");
  ev_cmd->add_option("--model", model_path, "Model file")->required();
  ev_cmd->add_option("--eval-source", ea_path, "Evaluation queries (source space)")->required();
  ev_cmd->add_option("--eval-target", eb_path, "Evaluation targets, row-aligned")->required();
  ev_cmd->add_flag("--json", as_json, "Emit a JSON report");

  SynthSpec spec;
  std::string out_dir;
  auto* sy_cmd = app.add_subcommand("synth", "Generate a synthetic pair of pools with known map");
  sy_cmd->add_option("--n", spec.n, "Pool size per space")->capture_default_str();
  sy_cmd->add_option("--d", spec.d, "Dimension")->capture_default_str();
  sy_cmd->add_option("--components", spec.components, "Mixture components")->capture_default_str();
  sy_cmd->add_option("--noise", spec.noise_sigma, "Per-coordinate noise sigma")->capture_default_str();
  sy_cmd->add_option("--anisotropy", spec.anisotropy, "Component covariance spread")->capture_default_str();
  sy_cmd->add_option("--eval-pairs", spec.eval_pairs, "Held-out parallel pairs")->capture_default_str();
  sy_cmd->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  sy_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* in_cmd = app.add_subcommand("inspect", "Describe a model file");
  in_cmd->add_option("--model", model_path, "Model file")->required();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("embalign");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  set_max_threads(threads);
  Timer timer{verbose, err};
  try {
    if (fit_cmd->parsed()) return run_fit(fa, out, err);
    if (tr_cmd->parsed()) return run_translate(model_path, in_path, out_path, out, err);
    if (ev_cmd->parsed()) return run_eval(model_path, ea_path, eb_path, as_json, out, err);
    if (sy_cmd->parsed()) return run_synth(spec, out_dir, out);
    if (in_cmd->parsed()) return run_inspect(model_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    const auto it = flag_names().find(e.field());
    const std::string flag = it == flag_names().end() ? e.field() : it->second;
    err << "error: invalid value for " << flag << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: ";
    if (!e.stage().empty()) err << "stage " << e.stage() << ": ";
    err << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace embalign
