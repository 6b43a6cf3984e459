/*
 * Copyright 2026 the bigi authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bigi/eval.hpp"
#include "bigi/graph.hpp"
#include "bigi/kernels.hpp"
#include "bigi/synth.hpp"
#include "bigi/trainer.hpp"

namespace fs = std::filesystem;
using namespace bigi;

namespace {

EdgeListFormat parse_format(const std::string& s) {
  if (s == "tsv-pair") return EdgeListFormat::TsvPair;
  if (s == "tsv-rated") return EdgeListFormat::TsvRated;
  throw ConfigError("unknown edge list format: " + s);
}

struct RunManifest {
  std::string command;
  std::string data;
  std::string format;
  double train_ratio = 0.6;
  std::string run_dir;

  std::string to_key_values() const {
    std::ostringstream os;
    os << "command=" << command << '\n'
       << "data=" << data << '\n'
       << "format=" << format << '\n'
       << "train_ratio=" << train_ratio << '\n'
       << "run_dir=" << run_dir << '\n';
    return os.str();
  }

  static RunManifest from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    RunManifest m;
    std::string line;
    while (std::getline(is, line)) {
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
      if (key == "command") m.command = val;
      else if (key == "data") m.data = val;
      else if (key == "format") m.format = val;
      else if (key == "train_ratio") m.train_ratio = std::stod(val);
      else if (key == "run_dir") m.run_dir = val;
    }
    return m;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path);
  os << text;
}

std::string find_checkpoint(const std::string& run_dir, const std::string& explicit_path) {
  if (!explicit_path.empty()) {
    if (!fs::exists(explicit_path)) throw IoError("checkpoint not found: " + explicit_path);
    return explicit_path;
  }
  int best_epoch = -1;
  std::string best;
  if (fs::is_directory(run_dir)) {
    for (const auto& de : fs::directory_iterator(run_dir)) {
      const std::string name = de.path().filename().string();
      if (name.rfind("epoch_", 0) == 0 && name.size() > 11 &&
          name.substr(name.size() - 5) == ".ckpt") {
        const int ep = std::atoi(name.substr(6, name.size() - 11).c_str());
        if (ep > best_epoch) {
          best_epoch = ep;
          best = de.path().string();
        }
      }
    }
  }
  if (best.empty())
    throw IoError("no checkpoint found under " + run_dir + " (expected epoch_<n>.ckpt)");
  return best;
}

struct LoadedRun {
  RunManifest manifest;
  Dataset dataset;
  EdgeSplit split;
  TrainedModel model;
};

LoadedRun load_run(const std::string& run_dir, const std::string& checkpoint) {
  LoadedRun run;
  run.manifest = RunManifest::from_file(run_dir + "/manifest");
  run.dataset = load_edgelist(run.manifest.data, parse_format(run.manifest.format));
  const std::string ckpt = find_checkpoint(run_dir, checkpoint);
  CheckpointData data = load_checkpoint_file(ckpt);
  TrainConfig cfg = TrainConfig::from_key_values(data.config_text);
  run.split = split_train_test(run.dataset.graph, run.manifest.train_ratio, cfg.seed);
  run.model.cfg = cfg;
  run.model.store = std::move(data.store);
  auto emb = infer_embeddings(run.split.train, run.model.store, cfg);
  run.model.u_emb = std::move(emb.first);
  run.model.v_emb = std::move(emb.second);
  return run;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list, got: " + csv);
  return out;
}

void add_train_config_flags(CLI::App* cmd, TrainConfig& cfg, std::string& local_rep) {
  cmd->add_option("--dim", cfg.dim, "embedding size d")->envname("BIGI_DIM");
  cmd->add_option("--depth", cfg.depth, "encoder layers")->envname("BIGI_DEPTH");
  cmd->add_option("--lr", cfg.lr, "learning rate")->envname("BIGI_LR");
  cmd->add_option("--epochs", cfg.epochs, "training epochs")->envname("BIGI_EPOCHS");
  cmd->add_option("--gamma", cfg.gamma, "ranking margin")->envname("BIGI_GAMMA");
  cmd->add_option("--beta", cfg.beta, "corruption rate")->envname("BIGI_BETA");
  cmd->add_option("--lambda", cfg.lambda, "harmonic factor")->envname("BIGI_LAMBDA");
  cmd->add_option("--hop", cfg.hop, "enclosing subgraph hops (odd)")->envname("BIGI_HOP");
  cmd->add_option("--dropout", cfg.dropout, "dropout rate")->envname("BIGI_DROPOUT");
  cmd->add_option("--leaky-slope,--leaky_slope", cfg.leaky_slope, "LeakyReLU slope")
      ->envname("BIGI_LEAKY_SLOPE");
  cmd->add_option("--neighbor-cap,--neighbor_cap", cfg.neighbor_cap,
                  "subgraph neighbor cap (0 = uncapped)")
      ->envname("BIGI_NEIGHBOR_CAP");
  cmd->add_option("--neg-per-pos,--neg_per_pos", cfg.neg_per_pos, "ranking negatives per edge")
      ->envname("BIGI_NEG_PER_POS");
  cmd->add_option("--batch,--batch_size", cfg.batch_size, "minibatch size")
      ->envname("BIGI_BATCH_SIZE");
  cmd->add_option("--seed", cfg.seed, "master RNG seed")->envname("BIGI_SEED");
  cmd->add_option("--hidden", cfg.hidden, "ranking MLP width (0 = dim)")->envname("BIGI_HIDDEN");
  cmd->add_option("--local-rep,--local_rep", local_rep,
                  "local representation: subgraph|subgraph-mean|pair|node")
      ->envname("BIGI_LOCAL_REP");
  cmd->add_flag("--filter-negatives,--filter_negatives", cfg.filter_negatives,
                "reject true edges when sampling ranking negatives")
      ->envname("BIGI_FILTER_NEGATIVES");
  cmd->add_flag("--exact-mode,--exact_mode", cfg.exact_mode,
                "uncapped subgraphs and the full corrupted edge set")
      ->envname("BIGI_EXACT_MODE");
}

int cmd_train(const std::string& data, const std::string& format, const std::string& out,
              double train_ratio, TrainConfig cfg, const std::string& local_rep,
              int checkpoint_every, bool quiet) {
  cfg.local_rep = local_rep_kind_from_string(local_rep);
  cfg.validate();
  fs::create_directories(out);

  RunManifest manifest{"train", data, format, train_ratio, out};
  write_text(out + "/manifest", manifest.to_key_values());
  write_text(out + "/config", cfg.to_key_values());

  Dataset ds = load_edgelist(data, parse_format(format));
  if (!quiet)
    std::cout << "loaded " << data << ": |U|=" << ds.graph.num_u() << " |V|=" << ds.graph.num_v()
              << " |E|=" << ds.graph.num_edges() << '\n';
  EdgeSplit split = split_train_test(ds.graph, train_ratio, cfg.seed);
  if (!quiet)
    std::cout << "split: " << split.train.num_edges() << " train / " << split.test_edges.size()
              << " test edges (seed " << cfg.seed << ")\n";

  TrainOptions opts;
  opts.run_dir = out;
  opts.checkpoint_every = checkpoint_every;
  opts.log = quiet ? nullptr : &std::cout;
  TrainedModel model = train(split, cfg, opts);
  write_loss_csv(model.history, out + "/loss.csv");
  if (!quiet) std::cout << "run artifacts written to " << out << '\n';
  return 0;
}

int cmd_evaluate(const std::string& run_dir, const std::string& checkpoint,
                 const std::string& task, const std::string& ks_csv, int neg_ratio,
                 const std::string& out_csv) {
  LoadedRun run = load_run(run_dir, checkpoint);
  MetricsReport report;
  report.set_meta("dataset", run.manifest.data);
  report.set_meta("split_seed", std::to_string(run.model.cfg.seed));
  report.set_meta("config_digest",
                  std::to_string(fnv1a(run.model.cfg.to_key_values())));
  report.set_meta("local_rep", to_string(run.model.cfg.local_rep));
  if (task == "topk" || task == "both") {
    MetricsReport r = topk_evaluate(run.model, run.split, parse_int_list(ks_csv));
    for (auto& [n, v] : r.values) report.set(n, v);
  }
  if (task == "link" || task == "both") {
    MetricsReport r = link_predict_evaluate(run.model, run.split, neg_ratio, run.model.cfg.seed);
    for (auto& [n, v] : r.values) report.set(n, v);
  }
  if (task != "topk" && task != "link" && task != "both")
    throw ConfigError("unknown task: " + task + " (expected topk|link|both)");
  const std::string out = out_csv.empty() ? run_dir + "/metrics.csv" : out_csv;
  report.write_csv(out);
  report.print_table(std::cout);
  std::cout << "metrics written to " << out << '\n';
  return 0;
}

int cmd_embed(const std::string& run_dir, const std::string& checkpoint,
              const std::string& out_path) {
  LoadedRun run = load_run(run_dir, checkpoint);
  const std::string out = out_path.empty() ? run_dir + "/embeddings.tsv" : out_path;
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw IoError("cannot write " + out);
  auto write_rows = [&os](const std::vector<std::string>& tokens, const Tensor& emb) {
    for (int i = 0; i < emb.rows; ++i) {
      os << tokens[static_cast<std::size_t>(i)];
      for (int j = 0; j < emb.cols; ++j) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", emb.at(i, j));
        os << '\t' << buf;
      }
      os << '\n';
    }
  };
  write_rows(run.dataset.u_tokens, run.model.u_emb);
  write_rows(run.dataset.v_tokens, run.model.v_emb);
  if (!os) throw IoError("embedding write failed: " + out);
  std::cout << "wrote " << (run.model.u_emb.rows + run.model.v_emb.rows) << " rows to " << out
            << '\n';
  return 0;
}

int cmd_analyze(const std::string& run_dir, const std::string& checkpoint,
                const std::string& clusters_csv, int num_pairs) {
  LoadedRun run = load_run(run_dir, checkpoint);
  const std::vector<int> ks = parse_int_list(clusters_csv);

  MetricsReport chi_u = clustering_analysis(run.model.u_emb, ks, run.model.cfg.seed);
  chi_u.set_meta("side", "U");
  chi_u.write_csv(run_dir + "/chi_u.csv");
  MetricsReport chi_v = clustering_analysis(run.model.v_emb, ks, run.model.cfg.seed);
  chi_v.set_meta("side", "V");
  chi_v.write_csv(run_dir + "/chi_v.csv");
  chi_u.print_table(std::cout);
  chi_v.print_table(std::cout);

  std::vector<Edge> pairs = run.split.test_edges;
  Rng rng = substream(run.model.cfg.seed, "analyze-pairs");
  std::shuffle(pairs.begin(), pairs.end(), rng);
  if (static_cast<int>(pairs.size()) > num_pairs) pairs.resize(num_pairs);
  const std::vector<PairScoreRow> rows = dump_pair_scores(run.model, run.split.train, pairs);
  std::ofstream os(run_dir + "/pair_scores.csv", std::ios::trunc);
  if (!os) throw IoError("cannot write pair score csv");
  os << "u,v,distance,score\n";
  for (const PairScoreRow& r : rows) {
    os << run.dataset.u_tokens[static_cast<std::size_t>(r.u)] << ','
       << run.dataset.v_tokens[static_cast<std::size_t>(r.v)] << ',';
    if (r.distance < 0) os << "inf";
    else os << r.distance;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", r.score);
    os << ',' << buf << '\n';
  }
  std::cout << "analysis written to " << run_dir << "/{chi_u,chi_v,pair_scores}.csv\n";
  return 0;
}

int cmd_synth(const std::string& kind, int num_u, int num_v, std::int64_t edges, int blocks,
              double p_in, int rank, double temperature, std::uint64_t seed,
              const std::string& out) {
  SynthSpec spec;
  if (kind == "blocks") spec.kind = SynthSpec::Kind::Blocks;
  else if (kind == "latent") spec.kind = SynthSpec::Kind::Latent;
  else throw ConfigError("unknown synth kind: " + kind);
  spec.num_u = num_u;
  spec.num_v = num_v;
  spec.num_edges = edges;
  spec.blocks = blocks;
  spec.p_in = p_in;
  spec.latent_rank = rank;
  spec.temperature = temperature;
  synth_write(spec, seed, out);
  std::cout << "wrote " << out << " (" << num_u << " x " << num_v << ", " << edges
            << " edges)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bipartite graph embedding with a local-global infomax objective"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a key=value file");
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)")
      ->envname("BIGI_THREADS");

  // train
  auto* tr = app.add_subcommand("train", "split a dataset and train a model");
  std::string data, format = "tsv-pair", out_dir, local_rep = "subgraph";
  double train_ratio = 0.6;
  int checkpoint_every = 0;
  bool quiet = false;
  TrainConfig cfg;
  tr->add_option("--data", data, "edge list path")->required()->envname("BIGI_DATA");
  tr->add_option("--format", format, "tsv-pair | tsv-rated")->envname("BIGI_FORMAT");
  tr->add_option("--out", out_dir, "run directory")->required()->envname("BIGI_OUT");
  tr->add_option("--train-ratio,--train_ratio", train_ratio, "train split fraction")
      ->envname("BIGI_TRAIN_RATIO");
  tr->add_option("--checkpoint-every,--checkpoint_every", checkpoint_every,
                 "checkpoint period in epochs (0 = final only)")
      ->envname("BIGI_CHECKPOINT_EVERY");
  tr->add_flag("--quiet", quiet, "suppress progress output");
  add_train_config_flags(tr, cfg, local_rep);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run the evaluation protocol on a checkpoint");
  std::string ev_run, ev_ckpt, ev_task = "topk", ev_ks = "3,5,10", ev_out, ev_local_rep;
  int ev_neg_ratio = 1;
  ev->add_option("--run", ev_run, "run directory")->required();
  ev->add_option("--checkpoint", ev_ckpt, "explicit checkpoint path");
  ev->add_option("--task", ev_task, "topk | link | both");
  ev->add_option("--K,--ks", ev_ks, "comma-separated cutoffs");
  ev->add_option("--neg-ratio,--neg_ratio", ev_neg_ratio, "classifier negatives per positive");
  ev->add_option("--local-rep,--local_rep", ev_local_rep,
                 "ablation variant label (echoed into the report)");
  ev->add_option("--out", ev_out, "metrics CSV path (default <run>/metrics.csv)");

  // embed
  auto* em = app.add_subcommand("embed", "export final embeddings as TSV");
  std::string em_run, em_ckpt, em_out;
  em->add_option("--run", em_run, "run directory")->required();
  em->add_option("--checkpoint", em_ckpt, "explicit checkpoint path");
  em->add_option("--out", em_out, "output TSV (default <run>/embeddings.tsv)");

  // analyze
  auto* an = app.add_subcommand("analyze", "clustering quality and pair-score dumps");
  std::string an_run, an_ckpt, an_clusters = "2,4,8,16";
  int an_pairs = 15;
  an->add_option("--run", an_run, "run directory")->required();
  an->add_option("--checkpoint", an_ckpt, "explicit checkpoint path");
  an->add_option("--clusters", an_clusters, "comma-separated k values");
  an->add_option("--pairs", an_pairs, "number of test pairs to score");

  // synth
  auto* sy = app.add_subcommand("synth", "generate a structured random dataset");
  std::string sy_kind = "blocks", sy_out;
  int sy_nu = 200, sy_nv = 100, sy_blocks = 8, sy_rank = 8;
  std::int64_t sy_edges = 2000;
  double sy_pin = 0.9, sy_temp = 0.4;
  std::uint64_t sy_seed = 1;
  sy->add_option("--kind", sy_kind, "blocks | latent");
  sy->add_option("--num-u,--num_u", sy_nu, "U-side nodes");
  sy->add_option("--num-v,--num_v", sy_nv, "V-side nodes");
  sy->add_option("--edges", sy_edges, "edge count");
  sy->add_option("--blocks", sy_blocks, "community count (blocks)");
  sy->add_option("--p-in,--p_in", sy_pin, "in-community probability (blocks)");
  sy->add_option("--rank", sy_rank, "latent rank (latent)");
  sy->add_option("--temperature", sy_temp, "affinity temperature (latent)");
  sy->add_option("--seed", sy_seed, "generator seed");
  sy->add_option("--out", sy_out, "output edge list")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    kern::set_max_threads(threads);
    if (tr->parsed())
      return cmd_train(data, format, out_dir, train_ratio, cfg, local_rep, checkpoint_every,
                       quiet);
    if (ev->parsed()) return cmd_evaluate(ev_run, ev_ckpt, ev_task, ev_ks, ev_neg_ratio, ev_out);
    if (em->parsed()) return cmd_embed(em_run, em_ckpt, em_out);
    if (an->parsed()) return cmd_analyze(an_run, an_ckpt, an_clusters, an_pairs);
    if (sy->parsed())
      return cmd_synth(sy_kind, sy_nu, sy_nv, sy_edges, sy_blocks, sy_pin, sy_rank, sy_temp,
                       sy_seed, sy_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
