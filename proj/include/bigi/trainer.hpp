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

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bigi/encoder.hpp"
#include "bigi/graph.hpp"
#include "bigi/infomax.hpp"
#include "bigi/param_store.hpp"
#include "bigi/ranking.hpp"

namespace bigi {

// Every knob of the joint objective. Defaults follow the reference
// hyperparameters; gaps the papers leave open carry the documented defaults.
struct TrainConfig {
  int dim = 128;
  int depth = 2;
  double lr = 0.001;
  int epochs = 100;
  double gamma = 0.3;       // ranking margin
  double beta = 1e-5;       // corruption rate
  double lambda = 0.3;      // harmonic mix: lambda*L_m + (1-lambda)*L_r
  int hop = 1;              // enclosing-subgraph radius, odd
  double dropout = 0.1;
  double leaky_slope = 0.01;
  int neighbor_cap = 50;    // 0 = uncapped
  int neg_per_pos = 1;
  int batch_size = 512;
  std::uint64_t seed = 1;
  int hidden = 0;           // ranking MLP width; 0 = dim
  LocalRepKind local_rep = LocalRepKind::Subgraph;
  bool filter_negatives = false;
  bool exact_mode = false;  // full corrupted edge set + uncapped subgraphs

  int hidden_width() const { return hidden > 0 ? hidden : dim; }
  EncoderConfig encoder_config() const { return {depth, dim, dropout, leaky_slope}; }
  void validate() const;

  // key=value text, one pair per line, stable key order; parses back exactly.
  std::string to_key_values() const;
  static TrainConfig from_key_values(const std::string& text);
};

struct EpochLoss {
  double total = 0.0;
  double infomax = 0.0;
  double ranking = 0.0;
};

struct TrainedModel {
  ParamStore store;
  TrainConfig cfg;
  Tensor u_emb;  // infer-mode outputs of the final layer
  Tensor v_emb;
  std::vector<EpochLoss> history;
};

// Registers every trainable tensor (encoder, infomax, ranking) in a fixed
// order from the "init" substream of cfg.seed.
void register_model_params(ParamStore& store, int num_u, int num_v, const TrainConfig& cfg);

// One batch with all randomness resolved up front, so the loss is a pure
// function of the parameters (used directly by the gradient checks).
struct BatchPlan {
  std::vector<Edge> pos_edges;
  std::vector<SubgraphSample> pos_samples;   // aligned with pos_edges
  std::vector<Edge> neg_edges;               // edges of the corrupted graph
  std::vector<SubgraphSample> neg_samples;   // aligned with neg_edges
  std::vector<Edge> rank_negatives;          // pos_edges.size()*neg_per_pos, grouped
  bool include_dead_branches = false;        // build both losses even at lambda 0/1
};

struct BatchLossVars {
  Var total;
  Var infomax;  // invalid when the branch was skipped
  Var ranking;
};

BatchLossVars build_batch_loss(Tape& tape, const BipartiteGraph& g_clean,
                               const BipartiteGraph* g_corrupt, ParamStore& store,
                               const TrainConfig& cfg, const BatchPlan& plan, Mode mode,
                               Rng* dropout_rng);

struct TrainOptions {
  std::string run_dir;       // when set, checkpoints land here as epoch_<n>.ckpt
  int checkpoint_every = 0;  // 0 = final epoch only
  std::ostream* log = nullptr;
  std::vector<double>* epoch_seconds = nullptr;  // wall time per epoch, for benchmarks
};

// Joint training: per epoch draws a fresh corrupted graph, then per minibatch
// encodes both graphs with the shared parameters, scores positive subgraphs
// against the clean global summary and corrupted ones as negatives, adds the
// margin ranking loss, and takes one Adam step.
TrainedModel train(const EdgeSplit& split, const TrainConfig& cfg, const TrainOptions& opts = {});

// Recomputes infer-mode embeddings from the current parameters.
std::pair<Tensor, Tensor> infer_embeddings(const BipartiteGraph& g, ParamStore& store,
                                           const TrainConfig& cfg);

void save_model(const TrainedModel& model, const std::string& path);
// The graph is needed to realize the embeddings by one infer-mode encode.
TrainedModel load_model(const std::string& path, const BipartiteGraph& train_graph);

// CSV "epoch,total,infomax,ranking" with full float round-trip precision.
void write_loss_csv(const std::vector<EpochLoss>& history, const std::string& path);

}  // namespace bigi
