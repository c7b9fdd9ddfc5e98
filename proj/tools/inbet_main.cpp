// inbet: vectorize | synth | train | inbetween | eval
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "inbet/config.hpp"
#include "inbet/eval.hpp"
#include "inbet/log.hpp"
#include "inbet/params_io.hpp"
#include "inbet/pipeline.hpp"
#include "inbet/rng.hpp"
#include "inbet/synth.hpp"
#include "inbet/train.hpp"
#include "inbet/vectorize.hpp"

namespace {

using namespace inbet;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error("write failed: " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::vector<int> parse_gaps(const std::string& text) {
  std::vector<int> gaps;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      gaps.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error("--gaps: '" + item + "' is not an integer");
    }
  }
  if (gaps.empty()) throw Error("--gaps: empty list");
  return gaps;
}

struct VectorizeArgs {
  std::string in, out;
  double tol = kDefaultSimplifyTol;
};

int run_vectorize(const VectorizeArgs& a) {
  if (!(a.tol >= 0.0)) throw Error("--tol must be >= 0");
  save_graph(geometrize(load_image(a.in), a.tol), a.out);
  return 0;
}

struct SynthArgs {
  SynthConfig config;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  const DatasetManifest m = generate_dataset(a.config, a.out);
  log_info("wrote " + std::to_string(m.sequences.size()) + " sequences to " + a.out);
  return 0;
}

struct TrainArgs {
  std::string data, config, out, log, split = "train";
  // Overrides; applied only when given on the command line.
  CLI::Option *lr = nullptr, *epochs = nullptr, *phase1 = nullptr, *seed = nullptr,
              *accum = nullptr, *max_steps = nullptr, *feature_dim = nullptr, *layers = nullptr,
              *sinkhorn = nullptr, *gap_min = nullptr, *gap_max = nullptr;
  double v_lr = 0;
  int v_epochs = 0, v_phase1 = 0, v_accum = 0, v_max_steps = 0, v_feature_dim = 0, v_layers = 0,
      v_sinkhorn = 0, v_gap_min = 0, v_gap_max = 0;
  std::uint64_t v_seed = 0;
};

int run_train(const TrainArgs& a) {
  ModelConfig mc;
  TrainConfig tc;
  if (!a.config.empty()) {
    const nlohmann::json j = read_json(a.config);
    if (!j.is_object()) throw Error(a.config + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "model" && it.key() != "train")
        throw Error(a.config + ": unknown key '" + it.key() + "' (expected model, train)");
    if (j.contains("model")) update_from_json(mc, j["model"]);
    if (j.contains("train")) update_from_json(tc, j["train"]);
  }
  if (a.lr->count()) tc.learning_rate = a.v_lr;
  if (a.epochs->count()) tc.epochs_total = a.v_epochs;
  if (a.phase1->count()) tc.epochs_phase1 = a.v_phase1;
  if (a.seed->count()) tc.seed = a.v_seed;
  if (a.accum->count()) tc.accumulation_steps = a.v_accum;
  if (a.max_steps->count()) tc.max_steps = a.v_max_steps;
  if (a.gap_min->count()) tc.gap_min = a.v_gap_min;
  if (a.gap_max->count()) tc.gap_max = a.v_gap_max;
  if (a.feature_dim->count()) mc.feature_dim = a.v_feature_dim;
  if (a.layers->count()) mc.layers = a.v_layers;
  if (a.sinkhorn->count()) mc.sinkhorn_iters = a.v_sinkhorn;
  if (tc.epochs_phase1 > tc.epochs_total) tc.epochs_phase1 = tc.epochs_total;
  mc.validate();
  tc.validate();

  const DatasetManifest manifest = load_manifest(a.data);
  const auto seqs = load_sequences(manifest, a.split, mc.spectral_dim);
  const auto samples = build_samples(seqs, tc.gap_min, tc.gap_max);
  if (samples.empty())
    throw Error("no training pairs in split '" + a.split + "' for gaps " +
                std::to_string(tc.gap_min) + ".." + std::to_string(tc.gap_max));
  log_info(std::to_string(samples.size()) + " training pairs");
  const TrainResult r = train(samples, init_model(mc, mix_seed(tc.seed, 1)), tc);
  save_params(r.params, a.out);
  if (!a.log.empty()) write_text(a.log, loss_log_csv(r.log));
  return 0;
}

struct InbetweenArgs {
  std::string g0, g1, i0, i1, params, out_graph, out_png;
  double t = 0.5;
};

int run_inbetween(const InbetweenArgs& a) {
  const ModelParams params = load_params(a.params);
  const InbetweenResult r = inbetween(load_graph(a.g0), load_image(a.i0), load_graph(a.g1),
                                      load_image(a.i1), params, a.t);
  if (!a.out_graph.empty()) save_graph(r.graph, a.out_graph);
  if (!a.out_png.empty()) save_image(rasterize(r.graph, kEvalLineWidth), a.out_png);
  return 0;
}

struct EvalArgs {
  std::string data, params, out, gaps = "1,5,9", d = "auto", split = "test";
  double t = 0.5;
};

int run_eval(const EvalArgs& a) {
  EvalConfig cfg;
  cfg.gaps = parse_gaps(a.gaps);
  cfg.t = a.t;
  cfg.split = a.split;
  if (a.d != "auto") {
    try {
      cfg.d = std::stod(a.d);
    } catch (const std::exception&) {
      throw Error("--d: expected 'auto' or a positive number, got '" + a.d + "'");
    }
    if (!(cfg.d > 0.0)) throw Error("--d must be > 0");
  }
  const ModelParams params = load_params(a.params);
  const DatasetManifest manifest = load_manifest(a.data);
  const auto seqs = load_sequences(manifest, cfg.split, params.config.spectral_dim);
  if (seqs.empty()) throw Error("split '" + cfg.split + "' has no sequences");
  const CDReport rep = evaluate(params, seqs, cfg);
  const std::string csv = report_csv(rep);
  if (a.out.empty()) std::cout << csv;
  else write_text(a.out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometrized line-drawing inbetweening"};
  app.require_subcommand(1);

  VectorizeArgs va;
  auto* vec = app.add_subcommand("vectorize", "Raster line drawing -> graph JSON");
  vec->add_option("--in", va.in, "input image (.png/.pgm)");
  vec->add_option("--out", va.out, "output graph JSON");
  vec->add_option("--tol", va.tol, "polyline simplification tolerance (px)");

  SynthArgs sa;
  auto* syn = app.add_subcommand("synth", "Generate the synthetic articulated-figure dataset");
  syn->add_option("--figures", sa.config.figures);
  syn->add_option("--motions", sa.config.motions);
  syn->add_option("--frames", sa.config.frames);
  syn->add_option("--canvas", sa.config.canvas);
  syn->add_option("--seed", sa.config.seed);
  syn->add_option("--amplitude", sa.config.amplitude, "motion amplitude scale");
  syn->add_option("--line-width", sa.config.line_width);
  syn->add_option("--out", sa.out, "output directory");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train on a generated dataset");
  tr->add_option("--data", ta.data, "dataset directory");
  tr->add_option("--config", ta.config, "JSON with optional \"model\" and \"train\" objects");
  tr->add_option("--out", ta.out, "output parameter file");
  tr->add_option("--log", ta.log, "loss log CSV");
  tr->add_option("--split", ta.split, "dataset split to train on");
  ta.lr = tr->add_option("--lr", ta.v_lr);
  ta.epochs = tr->add_option("--epochs", ta.v_epochs);
  ta.phase1 = tr->add_option("--phase1-epochs", ta.v_phase1);
  ta.seed = tr->add_option("--seed", ta.v_seed);
  ta.accum = tr->add_option("--accumulation", ta.v_accum);
  ta.max_steps = tr->add_option("--max-steps", ta.v_max_steps);
  ta.gap_min = tr->add_option("--gap-min", ta.v_gap_min);
  ta.gap_max = tr->add_option("--gap-max", ta.v_gap_max);
  ta.feature_dim = tr->add_option("--feature-dim", ta.v_feature_dim);
  ta.layers = tr->add_option("--layers", ta.v_layers);
  ta.sinkhorn = tr->add_option("--sinkhorn-iters", ta.v_sinkhorn);

  InbetweenArgs ia;
  auto* inb = app.add_subcommand("inbetween", "Synthesize the frame at time t between two frames");
  inb->add_option("--g0", ia.g0);
  inb->add_option("--g1", ia.g1);
  inb->add_option("--i0", ia.i0);
  inb->add_option("--i1", ia.i1);
  inb->add_option("--t", ia.t);
  inb->add_option("--params", ia.params);
  inb->add_option("--out-graph", ia.out_graph);
  inb->add_option("--out-png", ia.out_png);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Chamfer-distance evaluation over frame gaps");
  ev->add_option("--data", ea.data);
  ev->add_option("--params", ea.params);
  ev->add_option("--gaps", ea.gaps, "comma-separated odd gaps");
  ev->add_option("--d", ea.d, "search diameter in px, or auto = max(H, W)/10");
  ev->add_option("--t", ea.t);
  ev->add_option("--split", ea.split);
  ev->add_option("--out", ea.out, "report CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "inbet: usage error: " << e.what() << '\n';
    return 2;
  }

  // Required flags are checked after parsing so that an unknown flag is reported first.
  const std::vector<std::pair<CLI::App*, std::vector<std::string>>> required = {
      {vec, {"--in", "--out"}},
      {syn, {"--out"}},
      {tr, {"--data", "--out"}},
      {inb, {"--g0", "--g1", "--i0", "--i1", "--params"}},
      {ev, {"--data", "--params"}},
  };
  for (const auto& [cmd, flags] : required)
    if (cmd->parsed())
      for (const auto& f : flags)
        if (cmd->get_option(f)->count() == 0) {
          std::cerr << "inbet: usage error: " << f << " is required\n";
          return 2;
        }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == vec) return run_vectorize(va);
    if (sub == syn) return run_synth(sa);
    if (sub == tr) return run_train(ta);
    if (sub == inb) return run_inbetween(ia);
    if (sub == ev) return run_eval(ea);
  } catch (const std::exception& e) {
    std::cerr << "inbet " << sub->get_name() << ": error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
