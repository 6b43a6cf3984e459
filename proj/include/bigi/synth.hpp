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

#include <cstdint>
#include <string>

#include "bigi/graph.hpp"

namespace bigi {

// Structured random bipartite graphs for demos and test fixtures.
// `blocks` draws a co-clustered block model (community structure);
// `latent` samples edges by low-rank affinities plus item popularity, which
// gives a learnable recommendation signal.
struct SynthSpec {
  enum class Kind { Blocks, Latent };
  Kind kind = Kind::Blocks;
  int num_u = 100;
  int num_v = 50;
  std::int64_t num_edges = 500;
  int blocks = 8;          // Blocks: community count
  double p_in = 0.9;       // Blocks: probability an edge stays in its community
  int latent_rank = 8;     // Latent: factor dimensionality
  double temperature = 0.4;  // Latent: lower = sharper affinities
};

// Exact |U|, |V|, |E|: every node appears at least once and edges are
// distinct. Returned edges are index pairs.
std::vector<Edge> synth_edges(const SynthSpec& spec, std::uint64_t seed);

// Writes a tsv-rated edge list ("u<i>\tv<j>\t1"), shuffled line order, with a
// few duplicated lines so loaders must collapse repeats. Token ids are
// written in a permuted order to exercise the first-appearance mapping.
void synth_write(const SynthSpec& spec, std::uint64_t seed, const std::string& path);

}  // namespace bigi
