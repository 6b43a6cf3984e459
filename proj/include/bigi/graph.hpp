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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bigi/rng.hpp"
#include "bigi/tape.hpp"

namespace bigi {

using Edge = std::pair<std::int32_t, std::int32_t>;  // (u index, v index)

// Immutable two-sided sparse adjacency with bidirectional lookup. Neighbor
// lists are sorted, duplicate-free and mutually consistent; the structure is
// safe for concurrent reads once built.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;
  // Builds from an edge list; duplicates collapse to one edge.
  BipartiteGraph(int num_u, int num_v, std::vector<Edge> edges);

  int num_u() const { return num_u_; }
  int num_v() const { return num_v_; }
  std::int64_t num_edges() const { return num_edges_; }

  std::span<const std::int32_t> neighbors_of_u(int u) const {
    return {u_idx_.data() + u_off_[u], static_cast<std::size_t>(u_off_[u + 1] - u_off_[u])};
  }
  std::span<const std::int32_t> neighbors_of_v(int v) const {
    return {v_idx_.data() + v_off_[v], static_cast<std::size_t>(v_off_[v + 1] - v_off_[v])};
  }
  std::int64_t degree_u(int u) const { return u_off_[u + 1] - u_off_[u]; }
  std::int64_t degree_v(int v) const { return v_off_[v + 1] - v_off_[v]; }
  bool has_edge(int u, int v) const;

  // CSR views for the aggregation kernels: u_adj lists v-indices per u.
  CsrView u_adj() const { return {u_off_.data(), u_idx_.data(), num_u_}; }
  CsrView v_adj() const { return {v_off_.data(), v_idx_.data(), num_v_}; }

  // Edges in (u,v)-sorted order.
  std::vector<Edge> edges() const;

  bool operator==(const BipartiteGraph& o) const = default;

 private:
  int num_u_ = 0;
  int num_v_ = 0;
  std::int64_t num_edges_ = 0;
  std::vector<std::int64_t> u_off_, v_off_;
  std::vector<std::int32_t> u_idx_, v_idx_;
};

enum class EdgeListFormat { TsvPair, TsvRated };

// A loaded dataset: the graph plus the token -> dense-index maps, kept in
// first-appearance order for output.
struct Dataset {
  BipartiteGraph graph;
  std::vector<std::string> u_tokens;
  std::vector<std::string> v_tokens;
};

// Reads a UTF-8 edge list, one interaction per line, fields split on tabs or
// single spaces. TsvPair expects exactly two fields; TsvRated requires at
// least three and discards everything after the second (implicit feedback).
Dataset load_edgelist(const std::string& path, EdgeListFormat format);

// Writes "<u_token>\t<v_token>" lines in (u,v)-index order.
void write_edgelist(const Dataset& ds, const std::string& path);

struct EdgeSplit {
  BipartiteGraph train;
  std::vector<Edge> test_edges;
  std::uint64_t seed = 0;
};

// Uniform split without replacement: round(train_ratio * |E|) edges go to
// train, the rest to test. Node index spaces are preserved, so nodes may end
// up with zero training edges.
EdgeSplit split_train_test(const BipartiteGraph& g, double train_ratio, std::uint64_t seed);

// Structure corruption A XOR S, S_ij ~ Bernoulli(beta) iid. Realized by a
// Binomial(|U|*|V|, beta) flip count and uniform distinct cells, which is
// distributionally identical to dense per-cell draws. beta 0 and 1 are exact
// (identity and complement).
BipartiteGraph corrupt(const BipartiteGraph& g, double beta, Rng& rng);

// Node sets of the h-hop enclosing subgraph around (center_u, center_v).
struct SubgraphSample {
  std::int32_t center_u = 0;
  std::int32_t center_v = 0;
  std::vector<std::int32_t> u_side_neighbors;  // v-indices within distance h of center_u
  std::vector<std::int32_t> v_side_neighbors;  // u-indices within distance h of center_v
  int hop = 1;
};

// Extracts the h-hop enclosing subgraph (h odd). Both centers are always
// included in the node sets, also when the edge itself is absent. When
// neighbor_cap > 0 each side is down-sampled uniformly to the cap, always
// retaining the center; rng is required in that case.
SubgraphSample enclosing_subgraph(const BipartiteGraph& g, int u, int v, int h,
                                  int neighbor_cap = 0, Rng* rng = nullptr);

// Shortest-path distance between u and v (edges traversed), or -1 when
// disconnected. Used by the prediction-score dumps.
int bfs_distance(const BipartiteGraph& g, int u, int v);

}  // namespace bigi
