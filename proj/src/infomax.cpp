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

#include "bigi/infomax.hpp"

#include <cmath>

#include "bigi/common.hpp"

namespace bigi {

void register_infomax_params(ParamStore& store, int d, Rng& rng) {
  store.add_glorot(kInfoWa, d, d, rng);
  store.add_glorot(kInfoWaPrime, d, d, rng);
  store.add_glorot(kInfoWb, 2 * d, 2 * d, rng);
  store.add_glorot(kInfoWbNode, d, 2 * d, rng);
}

Var global_representation(Tape& tape, Var u_emb, Var v_emb) {
  const Tensor& U = tape.value(u_emb);
  const Tensor& V = tape.value(v_emb);
  if (U.rows < 1 || V.rows < 1) throw ConfigError("global_representation: empty side");
  Var pu = tape.mean_rows(u_emb);
  Var pv = tape.mean_rows(v_emb);
  return tape.concat_cols(tape.sigmoid(pu), tape.sigmoid(pv));
}

AttentionMaps attention_precompute(Tape& tape, Var u_emb, Var v_emb, ParamStore& store) {
  Var wa = tape.param(store, kInfoWa);
  Var wap = tape.param(store, kInfoWaPrime);
  return {tape.matmul_nt(v_emb, wa), tape.matmul_nt(u_emb, wap)};
}

LocalRepKind local_rep_kind_from_string(const std::string& s) {
  if (s == "subgraph") return LocalRepKind::Subgraph;
  if (s == "subgraph-mean") return LocalRepKind::SubgraphMean;
  if (s == "pair") return LocalRepKind::Pair;
  if (s == "node") return LocalRepKind::Node;
  throw ConfigError("unknown local representation kind: " + s);
}

const char* to_string(LocalRepKind k) {
  switch (k) {
    case LocalRepKind::Subgraph: return "subgraph";
    case LocalRepKind::SubgraphMean: return "subgraph-mean";
    case LocalRepKind::Pair: return "pair";
    case LocalRepKind::Node: return "node";
  }
  return "?";
}

namespace {

// sigma(sum_i alpha_i * nbr_i + center), one side of Eq-style local input.
Var attended_side(Tape& tape, Var center_row, Var nbr_rows, Var center_proj, Var nbr_proj,
                  bool uniform) {
  Var ctx{-1};
  if (uniform) {
    ctx = tape.mean_rows(nbr_rows);
  } else {
    Var logits = tape.matmul_nt(center_proj, nbr_proj);  // 1 x n
    Var alpha = tape.softmax_rows(logits);
    ctx = tape.matmul_nn(alpha, nbr_rows);  // 1 x d
  }
  return tape.sigmoid(tape.add(ctx, center_row));
}

}  // namespace

Var local_representation(Tape& tape, const SubgraphSample& sample, Var u_emb, Var v_emb,
                         const AttentionMaps& maps, LocalRepKind kind) {
  if (kind == LocalRepKind::Node)
    throw ConfigError("local_representation: node variant uses node_local_scores");
  if (sample.u_side_neighbors.empty() || sample.v_side_neighbors.empty())
    throw ConfigError("local_representation: empty neighbor list");
  const std::vector<std::int32_t> cu{sample.center_u};
  const std::vector<std::int32_t> cv{sample.center_v};
  Var u_row = tape.gather_rows(u_emb, cu);
  Var v_row = tape.gather_rows(v_emb, cv);
  if (kind == LocalRepKind::Pair) return tape.concat_cols(u_row, v_row);

  const bool uniform = kind == LocalRepKind::SubgraphMean;
  Var u_side = attended_side(tape, u_row, tape.gather_rows(v_emb, sample.u_side_neighbors),
                             uniform ? Var{-1} : tape.gather_rows(maps.pu, cu),
                             uniform ? Var{-1} : tape.gather_rows(maps.pv, sample.u_side_neighbors),
                             uniform);
  Var v_side = attended_side(tape, v_row, tape.gather_rows(u_emb, sample.v_side_neighbors),
                             uniform ? Var{-1} : tape.gather_rows(maps.pv, cv),
                             uniform ? Var{-1} : tape.gather_rows(maps.pu, sample.v_side_neighbors),
                             uniform);
  return tape.concat_cols(u_side, v_side);
}

Var local_representation(Tape& tape, const SubgraphSample& sample, Var u_emb, Var v_emb,
                         ParamStore& store, LocalRepKind kind) {
  AttentionMaps maps{{-1}, {-1}};
  if (kind == LocalRepKind::Subgraph) maps = attention_precompute(tape, u_emb, v_emb, store);
  return local_representation(tape, sample, u_emb, v_emb, maps, kind);
}

Var discriminate(Tape& tape, Var local, Var g, ParamStore& store) {
  Var wb = tape.param(store, kInfoWb);
  Var logit = tape.clamp(tape.bilinear_vec(local, wb, g), -kLogitClamp, kLogitClamp);
  return tape.sigmoid(logit);
}

Var infomax_loss(Tape& tape, const std::vector<Var>& pos_scores,
                 const std::vector<Var>& neg_scores) {
  if (pos_scores.empty() || neg_scores.empty())
    throw ConfigError("infomax_loss: score lists must be non-empty");
  return infomax_loss_cols(tape, {tape.stack_scalars(pos_scores)},
                           {tape.stack_scalars(neg_scores)});
}

EdgeBatch EdgeBatch::from_samples(const std::vector<SubgraphSample>& samples) {
  EdgeBatch b;
  b.u_centers.reserve(samples.size());
  b.v_centers.reserve(samples.size());
  for (const SubgraphSample& s : samples) {
    if (s.u_side_neighbors.empty() || s.v_side_neighbors.empty())
      throw ConfigError("edge batch: empty neighbor list");
    b.u_centers.push_back(s.center_u);
    b.v_centers.push_back(s.center_v);
    b.u_nbrs.insert(b.u_nbrs.end(), s.u_side_neighbors.begin(), s.u_side_neighbors.end());
    b.v_nbrs.insert(b.v_nbrs.end(), s.v_side_neighbors.begin(), s.v_side_neighbors.end());
    b.u_off.push_back(static_cast<std::int64_t>(b.u_nbrs.size()));
    b.v_off.push_back(static_cast<std::int64_t>(b.v_nbrs.size()));
  }
  return b;
}

Var local_representations_batch(Tape& tape, const EdgeBatch& batch, Var u_emb, Var v_emb,
                                const AttentionMaps& maps, LocalRepKind kind) {
  if (kind != LocalRepKind::Subgraph && kind != LocalRepKind::SubgraphMean)
    throw ConfigError("local_representations_batch: subgraph kinds only");
  const bool uniform = kind == LocalRepKind::SubgraphMean;
  Var u_side = tape.segment_attention(v_emb, maps.pv, u_emb, maps.pu, batch.u_centers,
                                      batch.u_off, batch.u_nbrs, uniform);
  Var v_side = tape.segment_attention(u_emb, maps.pu, v_emb, maps.pv, batch.v_centers,
                                      batch.v_off, batch.v_nbrs, uniform);
  return tape.concat_cols(u_side, v_side);
}

Var pair_locals_batch(Tape& tape, const std::vector<Edge>& edges, Var u_emb, Var v_emb) {
  std::vector<std::int32_t> ui(edges.size()), vi(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    ui[i] = edges[i].first;
    vi[i] = edges[i].second;
  }
  return tape.concat_cols(tape.gather_rows(u_emb, std::move(ui)),
                          tape.gather_rows(v_emb, std::move(vi)));
}

Var discriminate_batch(Tape& tape, Var locals, Var g, ParamStore& store) {
  Var wb = tape.param(store, kInfoWb);
  Var logits = tape.clamp(tape.matmul_nt(tape.matmul_nn(locals, wb), g), -kLogitClamp,
                          kLogitClamp);
  return tape.sigmoid(logits);  // E x 1
}

std::pair<Var, Var> node_score_cols(Tape& tape, const std::vector<Edge>& edges, Var u_emb,
                                    Var v_emb, Var g, ParamStore& store) {
  Var wbn = tape.param(store, kInfoWbNode);
  std::vector<std::int32_t> ui(edges.size()), vi(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    ui[i] = edges[i].first;
    vi[i] = edges[i].second;
  }
  auto score_block = [&](Var emb, std::vector<std::int32_t> idx) {
    Var rows = tape.gather_rows(emb, std::move(idx));
    Var logits =
        tape.clamp(tape.matmul_nt(tape.matmul_nn(rows, wbn), g), -kLogitClamp, kLogitClamp);
    return tape.sigmoid(logits);
  };
  return {score_block(u_emb, std::move(ui)), score_block(v_emb, std::move(vi))};
}

Var infomax_loss_cols(Tape& tape, const std::vector<Var>& pos_cols,
                      const std::vector<Var>& neg_cols) {
  if (pos_cols.empty() || neg_cols.empty())
    throw ConfigError("infomax_loss: score lists must be non-empty");
  const double lo = 1.0 / (1.0 + std::exp(kLogitClamp));  // sigma(-30)
  const double hi = 1.0 - lo;
  std::int64_t count = 0;
  Var acc{-1};
  auto accumulate = [&](Var col, bool positive) {
    count += tape.value(col).size();
    Var clamped = tape.clamp(col, lo, hi);
    Var s = tape.sum_all(tape.log(positive ? clamped : tape.affine(clamped, -1.0, 1.0)));
    acc = acc.valid() ? tape.add(acc, s) : s;
  };
  for (Var c : pos_cols) accumulate(c, true);
  for (Var c : neg_cols) accumulate(c, false);
  return tape.affine(acc, -1.0 / static_cast<double>(count), 0.0);
}

}  // namespace bigi
