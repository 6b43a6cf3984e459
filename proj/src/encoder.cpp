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

#include "bigi/encoder.hpp"

#include "bigi/common.hpp"

namespace bigi {

void EncoderConfig::validate() const {
  if (depth < 1) throw ConfigError("encoder: depth must be >= 1");
  if (dim < 1) throw ConfigError("encoder: dim must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ConfigError("encoder: dropout rate must lie in [0,1)");
}

std::string enc_name(int layer, const std::string& which) {
  return "encoder/l" + std::to_string(layer) + "/" + which;
}

void register_encoder_params(ParamStore& store, int num_u, int num_v, const EncoderConfig& cfg,
                             Rng& rng) {
  cfg.validate();
  const int d = cfg.dim;
  store.add_glorot(kEncU0, num_u, d, rng);
  store.add_glorot(kEncV0, num_v, d, rng);
  for (int k = 1; k <= cfg.depth; ++k) {
    store.add_glorot(enc_name(k, "What_v"), d, d, rng);
    store.add_glorot(enc_name(k, "What_u"), d, d, rng);
    store.add_glorot(enc_name(k, "Wbar_u"), d, d, rng);
    store.add_glorot(enc_name(k, "Wbar_v"), d, d, rng);
    store.add_glorot(enc_name(k, "W_u"), d, 2 * d, rng);
    store.add_glorot(enc_name(k, "W_v"), d, 2 * d, rng);
  }
}

Embeddings encode(Tape& tape, const BipartiteGraph& g, ParamStore& store,
                  const EncoderConfig& cfg, Mode mode, Rng* dropout_rng, EncodeTrace* trace) {
  cfg.validate();
  const ParamEntry& u0 = store.get(kEncU0);
  const ParamEntry& v0 = store.get(kEncV0);
  if (u0.value.rows != g.num_u() || v0.value.rows != g.num_v() || u0.value.cols != cfg.dim)
    throw ConfigError("encode: embedding tables do not match graph/config");
  const bool use_dropout = mode == Mode::Train && cfg.dropout_rate > 0.0;
  if (use_dropout && dropout_rng == nullptr)
    throw ConfigError("encode: train mode with dropout needs an rng");

  const CsrView u_adj = g.u_adj();  // per-u lists of v
  const CsrView v_adj = g.v_adj();  // per-v lists of u
  const double slope = cfg.leaky_slope;

  Var u_prev = tape.param(store, kEncU0);
  Var v_prev = tape.param(store, kEncV0);
  for (int k = 1; k <= cfg.depth; ++k) {
    Var what_v = tape.param(store, enc_name(k, "What_v"));
    Var what_u = tape.param(store, enc_name(k, "What_u"));
    Var wbar_u = tape.param(store, enc_name(k, "Wbar_u"));
    Var wbar_v = tape.param(store, enc_name(k, "Wbar_v"));
    Var w_u = tape.param(store, enc_name(k, "W_u"));
    Var w_v = tape.param(store, enc_name(k, "W_v"));

    // Heterogeneous step: mean over opposite-side neighbors only.
    Var v_hat = tape.leaky_relu(
        tape.matmul_nt(tape.neighbor_mean(u_prev, v_adj, u_adj), what_v), slope);
    Var u_hat = tape.leaky_relu(
        tape.matmul_nt(tape.neighbor_mean(v_prev, u_adj, v_adj), what_u), slope);

    // Homogeneous step: aggregate the intermediates back, then concatenate
    // with the node's own previous feature.
    Var u_bar = tape.leaky_relu(
        tape.matmul_nt(tape.neighbor_mean(v_hat, u_adj, v_adj), wbar_u), slope);
    Var v_bar = tape.leaky_relu(
        tape.matmul_nt(tape.neighbor_mean(u_hat, v_adj, u_adj), wbar_v), slope);
    Var u_next = tape.matmul_nt(tape.concat_cols(u_bar, u_prev), w_u);
    Var v_next = tape.matmul_nt(tape.concat_cols(v_bar, v_prev), w_v);

    if (use_dropout) {
      u_next = tape.dropout(u_next, cfg.dropout_rate, *dropout_rng);
      v_next = tape.dropout(v_next, cfg.dropout_rate, *dropout_rng);
    }
    if (trace) {
      trace->v_hat.push_back(v_hat);
      trace->u_hat.push_back(u_hat);
      trace->u_bar.push_back(u_bar);
      trace->v_bar.push_back(v_bar);
    }
    u_prev = u_next;
    v_prev = v_next;
  }
  return {u_prev, v_prev};
}

}  // namespace bigi
