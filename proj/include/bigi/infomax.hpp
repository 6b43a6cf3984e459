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

#include <vector>

#include "bigi/graph.hpp"
#include "bigi/param_store.hpp"
#include "bigi/tape.hpp"

namespace bigi {

inline const char* kInfoWa = "infomax/W_a";
inline const char* kInfoWaPrime = "infomax/W_a_prime";
inline const char* kInfoWb = "infomax/W_b";
inline const char* kInfoWbNode = "infomax/W_b_node";

// W_a, W_a' are d x d shared attention matrices, W_b the 2d x 2d
// discriminator bilinear form. W_b_node (d x 2d) backs the node-level
// ablation variant.
void register_infomax_params(ParamStore& store, int d, Rng& rng);

// Discriminator logits are clamped here before the sigmoid so downstream
// logs stay finite.
inline constexpr double kLogitClamp = 30.0;

// g = [sigma(mean of U rows) | sigma(mean of V rows)], a 1 x 2d row.
Var global_representation(Tape& tape, Var u_emb, Var v_emb);

// Attention projections shared across all edges of one embedding set:
// pv rows are W_a . v_j, pu rows are W_a' . u_i.
struct AttentionMaps {
  Var pv;  // num_v x d
  Var pu;  // num_u x d
};
AttentionMaps attention_precompute(Tape& tape, Var u_emb, Var v_emb, ParamStore& store);

// Local-representation construction variants (model ablations).
enum class LocalRepKind { Subgraph, SubgraphMean, Pair, Node };
LocalRepKind local_rep_kind_from_string(const std::string& s);
const char* to_string(LocalRepKind k);

// Attention-weighted, center-anchored summary of an edge's enclosing
// subgraph (1 x 2d). SubgraphMean replaces attention with a uniform mean;
// Pair concatenates the two center embeddings directly. Node is handled by
// node_local_scores instead.
Var local_representation(Tape& tape, const SubgraphSample& sample, Var u_emb, Var v_emb,
                         const AttentionMaps& maps, LocalRepKind kind = LocalRepKind::Subgraph);
// Convenience overload computing the attention maps on the fly.
Var local_representation(Tape& tape, const SubgraphSample& sample, Var u_emb, Var v_emb,
                         ParamStore& store, LocalRepKind kind = LocalRepKind::Subgraph);

// sigma(local^T W_b g), strictly inside (0,1).
Var discriminate(Tape& tape, Var local, Var g, ParamStore& store);

// Noise-contrastive estimator: -(sum log p_i + sum log(1 - q_j)) / (P + N).
// Scores are clamped into sigmoid(+-kLogitClamp) before the logs.
Var infomax_loss(Tape& tape, const std::vector<Var>& pos_scores,
                 const std::vector<Var>& neg_scores);

// ---------------------------------------------------------------------------
// Batched construction used by the trainer: one tape node per op instead of
// ~20 per edge. Numerically these match the per-edge ops above (same
// summation orders); tests pin that equivalence.
// ---------------------------------------------------------------------------

// Segment layout of many enclosing subgraphs.
struct EdgeBatch {
  std::vector<std::int32_t> u_centers, v_centers;
  std::vector<std::int64_t> u_off{0}, v_off{0};
  std::vector<std::int32_t> u_nbrs, v_nbrs;

  static EdgeBatch from_samples(const std::vector<SubgraphSample>& samples);
};

// E x 2d local representations for Subgraph / SubgraphMean kinds.
Var local_representations_batch(Tape& tape, const EdgeBatch& batch, Var u_emb, Var v_emb,
                                const AttentionMaps& maps, LocalRepKind kind);
// E x 2d concatenated center embeddings (Pair kind).
Var pair_locals_batch(Tape& tape, const std::vector<Edge>& edges, Var u_emb, Var v_emb);
// E x 1 discriminator probabilities for a block of local representations.
Var discriminate_batch(Tape& tape, Var locals, Var g, ParamStore& store);
// Node-variant scores as two E x 1 columns (u-endpoint, v-endpoint).
std::pair<Var, Var> node_score_cols(Tape& tape, const std::vector<Edge>& edges, Var u_emb,
                                    Var v_emb, Var g, ParamStore& store);
// Same estimator as infomax_loss over score columns.
Var infomax_loss_cols(Tape& tape, const std::vector<Var>& pos_cols,
                      const std::vector<Var>& neg_cols);

}  // namespace bigi
