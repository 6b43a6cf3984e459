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

#include <string>
#include <vector>

#include "bigi/graph.hpp"
#include "bigi/param_store.hpp"
#include "bigi/tape.hpp"

namespace bigi {

struct EncoderConfig {
  int depth = 2;            // stacked layers
  int dim = 128;            // embedding size d
  double dropout_rate = 0.1;
  double leaky_slope = 0.01;

  void validate() const;
};

enum class Mode { Train, Infer };

// Parameter ids. Layers count from 1.
std::string enc_name(int layer, const std::string& which);
inline const char* kEncU0 = "encoder/U0";
inline const char* kEncV0 = "encoder/V0";

// Registers base embedding tables and the six weight matrices per layer.
void register_encoder_params(ParamStore& store, int num_u, int num_v, const EncoderConfig& cfg,
                             Rng& init_rng);

struct Embeddings {
  Var u;  // num_u x d
  Var v;  // num_v x d
};

// Per-layer intermediates, exposed for tests of the aggregation structure.
struct EncodeTrace {
  std::vector<Var> v_hat, u_hat, u_bar, v_bar;
};

// Runs the stacked two-hop encoder. Each layer first forms heterogeneous
// intermediate representations from neighbor means (the node's own feature is
// excluded there), then aggregates them homogeneously and concatenates with
// the previous feature. Empty neighborhoods contribute a zero mean. Dropout
// applies to each layer's outputs in Train mode only.
Embeddings encode(Tape& tape, const BipartiteGraph& g, ParamStore& store,
                  const EncoderConfig& cfg, Mode mode, Rng* dropout_rng = nullptr,
                  EncodeTrace* trace = nullptr);

}  // namespace bigi
