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

#include "bigi/ranking.hpp"

#include "bigi/common.hpp"

namespace bigi {

void register_ranking_params(ParamStore& store, int d, int hidden, Rng& rng) {
  if (hidden < 1) throw ConfigError("ranking: hidden width must be >= 1");
  store.add_glorot(kRankW1, hidden, 2 * d, rng);
  store.add_glorot(kRankW2, 1, hidden, rng);
}

Var score_pairs(Tape& tape, Var u_emb, Var v_emb, const std::vector<Edge>& pairs,
                ParamStore& store, double leaky_slope) {
  if (pairs.empty()) throw ConfigError("score_pairs: empty pair list");
  std::vector<std::int32_t> ui(pairs.size()), vi(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ui[i] = pairs[i].first;
    vi[i] = pairs[i].second;
  }
  Var feats = tape.concat_cols(tape.gather_rows(u_emb, std::move(ui)),
                               tape.gather_rows(v_emb, std::move(vi)));
  Var w1 = tape.param(store, kRankW1);
  Var w2 = tape.param(store, kRankW2);
  Var hidden = tape.leaky_relu(tape.matmul_nt(feats, w1), leaky_slope);
  return tape.matmul_nt(hidden, w2);  // n x 1
}

Var score_pair(Tape& tape, Var u_row, Var v_row, ParamStore& store, double leaky_slope) {
  Var w1 = tape.param(store, kRankW1);
  Var w2 = tape.param(store, kRankW2);
  Var hidden = tape.leaky_relu(tape.matmul_nt(tape.concat_cols(u_row, v_row), w1), leaky_slope);
  return tape.matmul_nt(hidden, w2);
}

NegSample sample_negative(Edge edge, const BipartiteGraph& g, Rng& rng, bool filtered) {
  if (g.num_u() < 1 || g.num_v() < 1) throw ConfigError("sample_negative: empty graph side");
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<std::int32_t> uu(0, g.num_u() - 1);
  std::uniform_int_distribution<std::int32_t> vv(0, g.num_v() - 1);
  for (int attempt = 0; attempt < 100; ++attempt) {
    NegSample s;
    s.replaced_head = coin(rng) == 0;
    s.pair = s.replaced_head ? Edge{uu(rng), edge.second} : Edge{edge.first, vv(rng)};
    if (!filtered || !g.has_edge(s.pair.first, s.pair.second)) return s;
  }
  // Dense rows can exhaust retries; fall back to the unfiltered rule.
  NegSample s;
  s.replaced_head = coin(rng) == 0;
  s.pair = s.replaced_head ? Edge{uu(rng), edge.second} : Edge{edge.first, vv(rng)};
  return s;
}

Var margin_loss_from_scores(Tape& tape, Var pos_scores, Var neg_scores, double gamma) {
  if (gamma < 0.0) throw ConfigError("margin_loss: gamma must be >= 0");
  const Tensor& p = tape.value(pos_scores);
  const Tensor& q = tape.value(neg_scores);
  if (p.cols != 1 || q.cols != 1) throw ConfigError("margin_loss: scores must be columns");
  if (q.rows % p.rows != 0)
    throw ConfigError("margin_loss: negative count must be a multiple of positives");
  Var pos_rep = pos_scores;
  const int per = q.rows / p.rows;
  if (per > 1) {
    std::vector<std::int32_t> rep(static_cast<std::size_t>(q.rows));
    for (int i = 0; i < p.rows; ++i)
      for (int t = 0; t < per; ++t) rep[static_cast<std::size_t>(i) * per + t] = i;
    pos_rep = tape.gather_rows(pos_scores, std::move(rep));
  }
  Var hinge = tape.relu(tape.affine(tape.sub(neg_scores, pos_rep), 1.0, gamma));
  return tape.mean_all(hinge);
}

Var margin_loss(Tape& tape, Var u_emb, Var v_emb, const std::vector<Edge>& pos_edges,
                int neg_per_pos, double gamma, ParamStore& store, double leaky_slope,
                const BipartiteGraph& g, Rng& rng, bool filtered) {
  if (neg_per_pos < 1) throw ConfigError("margin_loss: neg_per_pos must be >= 1");
  std::vector<Edge> negs;
  negs.reserve(pos_edges.size() * static_cast<std::size_t>(neg_per_pos));
  for (const Edge& e : pos_edges)
    for (int t = 0; t < neg_per_pos; ++t) negs.push_back(sample_negative(e, g, rng, filtered).pair);
  Var pos = score_pairs(tape, u_emb, v_emb, pos_edges, store, leaky_slope);
  Var neg = score_pairs(tape, u_emb, v_emb, negs, store, leaky_slope);
  return margin_loss_from_scores(tape, pos, neg, gamma);
}

}  // namespace bigi
