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

inline const char* kRankW1 = "ranking/W1";
inline const char* kRankW2 = "ranking/W2";

// Two-layer MLP scorer phi([u|v]) = W2 . act(W1 . [u|v]).
void register_ranking_params(ParamStore& store, int d, int hidden, Rng& rng);

// Scores a batch of (u,v) pairs against the given embedding tables in one MLP
// pass. Returns an n x 1 column of scores.
Var score_pairs(Tape& tape, Var u_emb, Var v_emb, const std::vector<Edge>& pairs,
                ParamStore& store, double leaky_slope);

// phi for a single pair of embedding rows (1 x d each).
Var score_pair(Tape& tape, Var u_row, Var v_row, ParamStore& store, double leaky_slope);

struct NegSample {
  Edge pair;
  bool replaced_head;  // which coordinate was resampled
};

// Head-or-tail replacement with probability 1/2 each, uniform over the node
// set. No membership filtering by default; `filtered` rejects pairs that are
// edges of g (bounded retries).
NegSample sample_negative(Edge edge, const BipartiteGraph& g, Rng& rng, bool filtered = false);

// Mean hinge over aligned positive/negative score columns:
// mean(relu(gamma + phi(neg) - phi(pos))). Negative rows must be grouped so
// that row i*neg_per_pos + t corresponds to positive row i.
Var margin_loss_from_scores(Tape& tape, Var pos_scores, Var neg_scores, double gamma);

// Spec-level convenience: draws neg_per_pos negatives per observed edge via
// sample_negative and returns the normalized hinge loss.
Var margin_loss(Tape& tape, Var u_emb, Var v_emb, const std::vector<Edge>& pos_edges,
                int neg_per_pos, double gamma, ParamStore& store, double leaky_slope,
                const BipartiteGraph& g, Rng& rng, bool filtered = false);

}  // namespace bigi
