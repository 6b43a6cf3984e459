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

#include "bigi/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "bigi/common.hpp"

namespace bigi {

void TrainConfig::validate() const {
  encoder_config().validate();
  if (lr <= 0.0) throw ConfigError("config: lr must be positive");
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (gamma < 0.0) throw ConfigError("config: gamma must be >= 0");
  if (beta < 0.0 || beta > 1.0) throw ConfigError("config: beta must lie in [0,1]");
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("config: lambda must lie in [0,1]");
  if (hop < 1 || hop % 2 == 0) throw ConfigError("config: hop must be odd");
  if (neighbor_cap < 0) throw ConfigError("config: neighbor cap must be >= 0");
  if (neg_per_pos < 1) throw ConfigError("config: neg_per_pos must be >= 1");
  if (batch_size < 1) throw ConfigError("config: batch size must be >= 1");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string TrainConfig::to_key_values() const {
  std::ostringstream os;
  os << "dim=" << dim << '\n'
     << "depth=" << depth << '\n'
     << "lr=" << fmt_double(lr) << '\n'
     << "epochs=" << epochs << '\n'
     << "gamma=" << fmt_double(gamma) << '\n'
     << "beta=" << fmt_double(beta) << '\n'
     << "lambda=" << fmt_double(lambda) << '\n'
     << "hop=" << hop << '\n'
     << "dropout=" << fmt_double(dropout) << '\n'
     << "leaky_slope=" << fmt_double(leaky_slope) << '\n'
     << "neighbor_cap=" << neighbor_cap << '\n'
     << "neg_per_pos=" << neg_per_pos << '\n'
     << "batch_size=" << batch_size << '\n'
     << "seed=" << seed << '\n'
     << "hidden=" << hidden << '\n'
     << "local_rep=" << to_string(local_rep) << '\n'
     << "filter_negatives=" << (filter_negatives ? 1 : 0) << '\n'
     << "exact_mode=" << (exact_mode ? 1 : 0) << '\n';
  return os.str();
}

TrainConfig TrainConfig::from_key_values(const std::string& text) {
  TrainConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    try {
      if (key == "dim") cfg.dim = std::stoi(val);
      else if (key == "depth") cfg.depth = std::stoi(val);
      else if (key == "lr") cfg.lr = std::stod(val);
      else if (key == "epochs") cfg.epochs = std::stoi(val);
      else if (key == "gamma") cfg.gamma = std::stod(val);
      else if (key == "beta") cfg.beta = std::stod(val);
      else if (key == "lambda") cfg.lambda = std::stod(val);
      else if (key == "hop") cfg.hop = std::stoi(val);
      else if (key == "dropout") cfg.dropout = std::stod(val);
      else if (key == "leaky_slope") cfg.leaky_slope = std::stod(val);
      else if (key == "neighbor_cap") cfg.neighbor_cap = std::stoi(val);
      else if (key == "neg_per_pos") cfg.neg_per_pos = std::stoi(val);
      else if (key == "batch_size") cfg.batch_size = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "hidden") cfg.hidden = std::stoi(val);
      else if (key == "local_rep") cfg.local_rep = local_rep_kind_from_string(val);
      else if (key == "filter_negatives") cfg.filter_negatives = std::stoi(val) != 0;
      else if (key == "exact_mode") cfg.exact_mode = std::stoi(val) != 0;
      else throw ParseError("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParseError("config: bad value for '" + key + "': " + val);
    }
  }
  return cfg;
}

void register_model_params(ParamStore& store, int num_u, int num_v, const TrainConfig& cfg) {
  cfg.validate();
  Rng init = substream(cfg.seed, "init");
  register_encoder_params(store, num_u, num_v, cfg.encoder_config(), init);
  register_infomax_params(store, cfg.dim, init);
  register_ranking_params(store, cfg.dim, cfg.hidden_width(), init);
}

BatchLossVars build_batch_loss(Tape& tape, const BipartiteGraph& g_clean,
                               const BipartiteGraph* g_corrupt, ParamStore& store,
                               const TrainConfig& cfg, const BatchPlan& plan, Mode mode,
                               Rng* dropout_rng) {
  const bool want_infomax = cfg.lambda > 0.0 || plan.include_dead_branches;
  const bool want_ranking = cfg.lambda < 1.0 || plan.include_dead_branches;
  const EncoderConfig ecfg = cfg.encoder_config();

  Embeddings clean = encode(tape, g_clean, store, ecfg, mode, dropout_rng);
  BatchLossVars out;

  if (want_infomax) {
    if (g_corrupt == nullptr)
      throw ConfigError("build_batch_loss: corrupted graph required for the infomax term");
    if (plan.neg_edges.empty())
      throw ConfigError("build_batch_loss: no corrupted edges to score as negatives");
    Embeddings corrupt = encode(tape, *g_corrupt, store, ecfg, mode, dropout_rng);
    Var g = global_representation(tape, clean.u, clean.v);

    std::vector<Var> pos_cols, neg_cols;
    if (cfg.local_rep == LocalRepKind::Node) {
      auto [pu, pv] = node_score_cols(tape, plan.pos_edges, clean.u, clean.v, g, store);
      auto [nu, nv] = node_score_cols(tape, plan.neg_edges, corrupt.u, corrupt.v, g, store);
      pos_cols = {pu, pv};
      neg_cols = {nu, nv};
    } else if (cfg.local_rep == LocalRepKind::Pair) {
      pos_cols = {discriminate_batch(
          tape, pair_locals_batch(tape, plan.pos_edges, clean.u, clean.v), g, store)};
      neg_cols = {discriminate_batch(
          tape, pair_locals_batch(tape, plan.neg_edges, corrupt.u, corrupt.v), g, store)};
    } else {
      if (plan.pos_samples.size() != plan.pos_edges.size() ||
          plan.neg_samples.size() != plan.neg_edges.size())
        throw ConfigError("build_batch_loss: subgraph samples misaligned");
      const bool att = cfg.local_rep == LocalRepKind::Subgraph;
      AttentionMaps maps_clean{{-1}, {-1}}, maps_corrupt{{-1}, {-1}};
      if (att) {
        maps_clean = attention_precompute(tape, clean.u, clean.v, store);
        maps_corrupt = attention_precompute(tape, corrupt.u, corrupt.v, store);
      }
      Var pos_locals =
          local_representations_batch(tape, EdgeBatch::from_samples(plan.pos_samples), clean.u,
                                      clean.v, maps_clean, cfg.local_rep);
      Var neg_locals =
          local_representations_batch(tape, EdgeBatch::from_samples(plan.neg_samples), corrupt.u,
                                      corrupt.v, maps_corrupt, cfg.local_rep);
      pos_cols = {discriminate_batch(tape, pos_locals, g, store)};
      neg_cols = {discriminate_batch(tape, neg_locals, g, store)};
    }
    out.infomax = infomax_loss_cols(tape, pos_cols, neg_cols);
  }

  if (want_ranking) {
    if (plan.rank_negatives.size() !=
        plan.pos_edges.size() * static_cast<std::size_t>(cfg.neg_per_pos))
      throw ConfigError("build_batch_loss: ranking negatives misaligned");
    Var pos_scores = score_pairs(tape, clean.u, clean.v, plan.pos_edges, store, cfg.leaky_slope);
    Var neg_scores =
        score_pairs(tape, clean.u, clean.v, plan.rank_negatives, store, cfg.leaky_slope);
    out.ranking = margin_loss_from_scores(tape, pos_scores, neg_scores, cfg.gamma);
  }

  if (out.infomax.valid() && out.ranking.valid()) {
    out.total = tape.add(tape.affine(out.infomax, cfg.lambda, 0.0),
                         tape.affine(out.ranking, 1.0 - cfg.lambda, 0.0));
  } else if (out.infomax.valid()) {
    out.total = tape.affine(out.infomax, cfg.lambda, 0.0);
  } else if (out.ranking.valid()) {
    out.total = tape.affine(out.ranking, 1.0 - cfg.lambda, 0.0);
  } else {
    throw ConfigError("build_batch_loss: nothing to optimize");
  }
  return out;
}

namespace {

SubgraphSample extract_sample(const BipartiteGraph& g, const Edge& e, const TrainConfig& cfg,
                              Rng& rng) {
  const int cap = cfg.exact_mode ? 0 : cfg.neighbor_cap;
  return enclosing_subgraph(g, e.first, e.second, cfg.hop, cap, cap > 0 ? &rng : nullptr);
}

}  // namespace

TrainedModel train(const EdgeSplit& split, const TrainConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  const BipartiteGraph& g = split.train;
  if (g.num_edges() == 0) throw ConfigError("train: empty training graph");

  TrainedModel model;
  model.cfg = cfg;
  register_model_params(model.store, g.num_u(), g.num_v(), cfg);

  Rng corr_rng = substream(cfg.seed, "corruption");
  Rng rank_rng = substream(cfg.seed, "ranking-negatives");
  Rng inf_rng = substream(cfg.seed, "infomax-negatives");
  Rng drop_rng = substream(cfg.seed, "dropout");
  Rng batch_rng = substream(cfg.seed, "batches");
  Rng subg_rng = substream(cfg.seed, "subgraph");

  const std::vector<Edge> train_edges = g.edges();
  const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  const bool want_infomax = cfg.lambda > 0.0;
  const bool want_ranking = cfg.lambda < 1.0;
  const bool need_samples = want_infomax && (cfg.local_rep == LocalRepKind::Subgraph ||
                                             cfg.local_rep == LocalRepKind::SubgraphMean);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    BipartiteGraph g_corrupt;
    std::vector<Edge> neg_pool;
    if (want_infomax) {
      g_corrupt = corrupt(g, cfg.beta, corr_rng);
      neg_pool = g_corrupt.edges();
      if (neg_pool.empty())
        throw NumericError("train: corrupted graph has no edges at epoch " +
                           std::to_string(epoch) + "; infomax negatives unavailable");
      std::shuffle(neg_pool.begin(), neg_pool.end(), inf_rng);
      if (!cfg.exact_mode && neg_pool.size() > train_edges.size())
        neg_pool.resize(train_edges.size());
    }

    std::vector<Edge> order = train_edges;
    std::shuffle(order.begin(), order.end(), batch_rng);
    const std::size_t n_batches =
        (order.size() + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size);

    EpochLoss sums;
    for (std::size_t b = 0; b < n_batches; ++b) {
      BatchPlan plan;
      const std::size_t lo = b * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      plan.pos_edges.assign(order.begin() + lo, order.begin() + hi);

      if (need_samples)
        for (const Edge& e : plan.pos_edges)
          plan.pos_samples.push_back(extract_sample(g, e, cfg, subg_rng));
      if (want_infomax) {
        // Proportional slice of the per-epoch negative pool.
        const std::size_t nlo = b * neg_pool.size() / n_batches;
        const std::size_t nhi = (b + 1) * neg_pool.size() / n_batches;
        plan.neg_edges.assign(neg_pool.begin() + nlo, neg_pool.begin() + nhi);
        if (plan.neg_edges.empty())  // pool smaller than batch count
          plan.neg_edges.push_back(neg_pool[b % neg_pool.size()]);
        if (need_samples)
          for (const Edge& e : plan.neg_edges)
            plan.neg_samples.push_back(extract_sample(g_corrupt, e, cfg, subg_rng));
      }
      if (want_ranking)
        for (const Edge& e : plan.pos_edges)
          for (int t = 0; t < cfg.neg_per_pos; ++t)
            plan.rank_negatives.push_back(
                sample_negative(e, g, rank_rng, cfg.filter_negatives).pair);

      try {
        Tape tape;
        BatchLossVars loss = build_batch_loss(tape, g, want_infomax ? &g_corrupt : nullptr,
                                              model.store, cfg, plan, Mode::Train, &drop_rng);
        sums.total += tape.value(loss.total).data[0];
        if (loss.infomax.valid()) sums.infomax += tape.value(loss.infomax).data[0];
        if (loss.ranking.valid()) sums.ranking += tape.value(loss.ranking).data[0];
        tape.backward(loss.total);
        model.store.adam_step(adam);
      } catch (const NumericError& e) {
        throw NumericError("train: epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + "/" + std::to_string(n_batches) + ": " +
                           e.what());
      }
    }

    const double inv = 1.0 / static_cast<double>(n_batches);
    model.history.push_back({sums.total * inv, sums.infomax * inv, sums.ranking * inv});

    const auto t1 = std::chrono::steady_clock::now();
    if (opts.epoch_seconds)
      opts.epoch_seconds->push_back(std::chrono::duration<double>(t1 - t0).count());
    if (opts.log) {
      (*opts.log) << "epoch " << epoch << "/" << cfg.epochs << "  total=" << model.history.back().total
                  << "  infomax=" << model.history.back().infomax
                  << "  ranking=" << model.history.back().ranking << '\n';
    }
    if (!opts.run_dir.empty() && opts.checkpoint_every > 0 && epoch % opts.checkpoint_every == 0)
      save_checkpoint(model.store, cfg.to_key_values(),
                      opts.run_dir + "/epoch_" + std::to_string(epoch) + ".ckpt");
  }

  auto emb = infer_embeddings(g, model.store, cfg);
  model.u_emb = std::move(emb.first);
  model.v_emb = std::move(emb.second);
  if (!opts.run_dir.empty())
    save_checkpoint(model.store, cfg.to_key_values(),
                    opts.run_dir + "/epoch_" + std::to_string(cfg.epochs) + ".ckpt");
  return model;
}

std::pair<Tensor, Tensor> infer_embeddings(const BipartiteGraph& g, ParamStore& store,
                                           const TrainConfig& cfg) {
  Tape tape;
  Embeddings emb = encode(tape, g, store, cfg.encoder_config(), Mode::Infer);
  return {tape.value(emb.u), tape.value(emb.v)};
}

void save_model(const TrainedModel& model, const std::string& path) {
  save_checkpoint(model.store, model.cfg.to_key_values(), path);
}

TrainedModel load_model(const std::string& path, const BipartiteGraph& train_graph) {
  CheckpointData data = load_checkpoint_file(path);
  TrainedModel model;
  model.cfg = TrainConfig::from_key_values(data.config_text);
  model.store = std::move(data.store);
  auto emb = infer_embeddings(train_graph, model.store, model.cfg);
  model.u_emb = std::move(emb.first);
  model.v_emb = std::move(emb.second);
  return model;
}

void write_loss_csv(const std::vector<EpochLoss>& history, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open loss csv for writing: " + path);
  os << "epoch,total,infomax,ranking\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    os << (i + 1) << ',' << fmt_double(history[i].total) << ',' << fmt_double(history[i].infomax)
       << ',' << fmt_double(history[i].ranking) << '\n';
  if (!os) throw IoError("loss csv write failed: " + path);
}

}  // namespace bigi
