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

#include "bigi/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "bigi/common.hpp"

namespace bigi {

BipartiteGraph::BipartiteGraph(int num_u, int num_v, std::vector<Edge> edges)
    : num_u_(num_u), num_v_(num_v) {
  if (num_u < 0 || num_v < 0) throw ConfigError("graph: negative node count");
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const Edge& e : edges) {
    if (e.first < 0 || e.first >= num_u || e.second < 0 || e.second >= num_v)
      throw ConfigError("graph: edge index out of range");
  }
  num_edges_ = static_cast<std::int64_t>(edges.size());

  u_off_.assign(num_u_ + 1, 0);
  v_off_.assign(num_v_ + 1, 0);
  for (const Edge& e : edges) {
    ++u_off_[e.first + 1];
    ++v_off_[e.second + 1];
  }
  for (int i = 0; i < num_u_; ++i) u_off_[i + 1] += u_off_[i];
  for (int j = 0; j < num_v_; ++j) v_off_[j + 1] += v_off_[j];

  u_idx_.resize(edges.size());
  v_idx_.resize(edges.size());
  std::vector<std::int64_t> ucur(u_off_.begin(), u_off_.end() - 1);
  std::vector<std::int64_t> vcur(v_off_.begin(), v_off_.end() - 1);
  for (const Edge& e : edges) {
    u_idx_[ucur[e.first]++] = e.second;
    v_idx_[vcur[e.second]++] = e.first;
  }
  // (u,v)-sorted insertion leaves u-lists sorted; v-lists need a pass.
  for (int j = 0; j < num_v_; ++j)
    std::sort(v_idx_.begin() + v_off_[j], v_idx_.begin() + v_off_[j + 1]);
}

bool BipartiteGraph::has_edge(int u, int v) const {
  auto nb = neighbors_of_u(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> BipartiteGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(num_edges_));
  for (int u = 0; u < num_u_; ++u)
    for (std::int32_t v : neighbors_of_u(u)) out.emplace_back(u, v);
  return out;
}

// ---------------------------------------------------------------------------
// edge-list I/O
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    std::size_t j = line.find_first_of(" \t", i);
    if (j == std::string::npos) j = line.size();
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

Dataset load_edgelist(const std::string& path, EdgeListFormat format) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open edge list: " + path);
  Dataset ds;
  std::unordered_map<std::string, std::int32_t> u_map, v_map;
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    const std::size_t want = format == EdgeListFormat::TsvPair ? 2 : 3;
    const bool ok = format == EdgeListFormat::TsvPair ? f.size() == 2 : f.size() >= want;
    if (!ok)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       (format == EdgeListFormat::TsvPair ? "2 fields" : "at least 3 fields") +
                       ", got " + std::to_string(f.size()));
    auto intern = [](std::unordered_map<std::string, std::int32_t>& m,
                     std::vector<std::string>& tokens, const std::string& tok) {
      auto [it, inserted] = m.emplace(tok, static_cast<std::int32_t>(tokens.size()));
      if (inserted) tokens.push_back(tok);
      return it->second;
    };
    const std::int32_t u = intern(u_map, ds.u_tokens, f[0]);
    const std::int32_t v = intern(v_map, ds.v_tokens, f[1]);
    edges.emplace_back(u, v);
  }
  if (edges.empty()) throw ParseError(path + ": empty graph");
  ds.graph = BipartiteGraph(static_cast<int>(ds.u_tokens.size()),
                            static_cast<int>(ds.v_tokens.size()), std::move(edges));
  return ds;
}

void write_edgelist(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open edge list for writing: " + path);
  for (const Edge& e : ds.graph.edges())
    os << ds.u_tokens[e.first] << '\t' << ds.v_tokens[e.second] << '\n';
  if (!os) throw IoError("edge list write failed: " + path);
}

// ---------------------------------------------------------------------------
// split / corrupt / subgraph
// ---------------------------------------------------------------------------

EdgeSplit split_train_test(const BipartiteGraph& g, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw ConfigError("split: train ratio must lie in (0,1)");
  if (g.num_edges() < 2) throw ConfigError("split: need at least 2 edges");
  std::vector<Edge> edges = g.edges();  // canonical order, so the split is seed-determined
  Rng rng = substream(seed, "split");
  std::shuffle(edges.begin(), edges.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_ratio * static_cast<double>(g.num_edges())));
  EdgeSplit out;
  out.seed = seed;
  out.test_edges.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train), edges.end());
  std::sort(out.test_edges.begin(), out.test_edges.end());
  edges.resize(n_train);
  out.train = BipartiteGraph(g.num_u(), g.num_v(), std::move(edges));
  return out;
}

BipartiteGraph corrupt(const BipartiteGraph& g, double beta, Rng& rng) {
  if (beta < 0.0 || beta > 1.0) throw ConfigError("corrupt: beta must lie in [0,1]");
  const std::uint64_t cells =
      static_cast<std::uint64_t>(g.num_u()) * static_cast<std::uint64_t>(g.num_v());
  std::uint64_t flips;
  if (beta == 0.0) {
    return g;
  } else if (beta == 1.0) {
    flips = cells;  // exact complement
  } else {
    std::binomial_distribution<std::uint64_t> bin(cells, beta);
    flips = bin(rng);
  }

  // Floyd's algorithm: `flips` distinct cells, uniform over the cell space.
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(flips) * 2);
  for (std::uint64_t j = cells - flips; j < cells; ++j) {
    std::uniform_int_distribution<std::uint64_t> u(0, j);
    const std::uint64_t t = u(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }

  // Group flipped cells per u and XOR against the adjacency lists.
  std::vector<std::vector<std::int32_t>> flip_by_u(g.num_u());
  for (std::uint64_t c : chosen) {
    flip_by_u[static_cast<std::size_t>(c / g.num_v())].push_back(
        static_cast<std::int32_t>(c % g.num_v()));
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(g.num_edges()));
  for (int u = 0; u < g.num_u(); ++u) {
    auto& fl = flip_by_u[u];
    std::sort(fl.begin(), fl.end());
    auto nb = g.neighbors_of_u(u);
    std::vector<std::int32_t> merged;
    std::set_symmetric_difference(nb.begin(), nb.end(), fl.begin(), fl.end(),
                                  std::back_inserter(merged));
    for (std::int32_t v : merged) edges.emplace_back(u, v);
  }
  return BipartiteGraph(g.num_u(), g.num_v(), std::move(edges));
}

namespace {

// Collects opposite-side nodes within distance h of `start`, alternating
// sides level by level. Returns v-indices when from_u, else u-indices.
std::vector<std::int32_t> hop_neighbors(const BipartiteGraph& g, int start, bool from_u, int h) {
  std::vector<std::int32_t> out;
  std::vector<char> seen_u(g.num_u(), 0), seen_v(g.num_v(), 0);
  std::vector<std::int32_t> frontier{static_cast<std::int32_t>(start)};
  (from_u ? seen_u : seen_v)[start] = 1;
  bool frontier_is_u = from_u;
  for (int depth = 1; depth <= h && !frontier.empty(); ++depth) {
    std::vector<std::int32_t> next;
    for (std::int32_t x : frontier) {
      auto nb = frontier_is_u ? g.neighbors_of_u(x) : g.neighbors_of_v(x);
      for (std::int32_t y : nb) {
        std::vector<char>& seen = frontier_is_u ? seen_v : seen_u;
        if (seen[y]) continue;
        seen[y] = 1;
        next.push_back(y);
        // Opposite-side nodes sit at odd depth from the start.
        const bool opposite = (depth % 2) == 1;
        if (opposite) out.push_back(y);
      }
    }
    frontier = std::move(next);
    frontier_is_u = !frontier_is_u;
  }
  std::sort(out.begin(), out.end());
  return out;
}

void cap_list(std::vector<std::int32_t>& list, std::int32_t keep, int cap, Rng& rng) {
  if (cap <= 0 || static_cast<int>(list.size()) <= cap) return;
  // Keep the center, sample cap-1 of the others uniformly without replacement.
  std::vector<std::int32_t> others;
  others.reserve(list.size());
  for (std::int32_t x : list)
    if (x != keep) others.push_back(x);
  for (int t = 0; t < cap - 1; ++t) {
    std::uniform_int_distribution<std::size_t> u(t, others.size() - 1);
    std::swap(others[t], others[u(rng)]);
  }
  others.resize(static_cast<std::size_t>(cap - 1));
  others.push_back(keep);
  std::sort(others.begin(), others.end());
  list = std::move(others);
}

}  // namespace

SubgraphSample enclosing_subgraph(const BipartiteGraph& g, int u, int v, int h, int neighbor_cap,
                                  Rng* rng) {
  if (h < 1 || h % 2 == 0) throw ConfigError("enclosing_subgraph: hop count must be odd");
  if (u < 0 || u >= g.num_u() || v < 0 || v >= g.num_v())
    throw ConfigError("enclosing_subgraph: center index out of range");
  if (neighbor_cap > 0 && rng == nullptr)
    throw ConfigError("enclosing_subgraph: neighbor cap requires an rng");
  SubgraphSample s;
  s.center_u = u;
  s.center_v = v;
  s.hop = h;
  if (h == 1) {
    auto nu = g.neighbors_of_u(u);
    s.u_side_neighbors.assign(nu.begin(), nu.end());
    auto nv = g.neighbors_of_v(v);
    s.v_side_neighbors.assign(nv.begin(), nv.end());
  } else {
    s.u_side_neighbors = hop_neighbors(g, u, true, h);
    s.v_side_neighbors = hop_neighbors(g, v, false, h);
  }
  // Centers always belong to the sample, also for non-edges.
  auto ensure = [](std::vector<std::int32_t>& list, std::int32_t x) {
    auto it = std::lower_bound(list.begin(), list.end(), x);
    if (it == list.end() || *it != x) list.insert(it, x);
  };
  ensure(s.u_side_neighbors, v);
  ensure(s.v_side_neighbors, u);
  if (neighbor_cap > 0) {
    cap_list(s.u_side_neighbors, v, neighbor_cap, *rng);
    cap_list(s.v_side_neighbors, u, neighbor_cap, *rng);
  }
  return s;
}

int bfs_distance(const BipartiteGraph& g, int u, int v) {
  if (g.has_edge(u, v)) return 1;
  std::vector<char> seen_u(g.num_u(), 0), seen_v(g.num_v(), 0);
  std::deque<std::pair<std::int32_t, bool>> q;  // (node, is_u_side)
  q.emplace_back(u, true);
  seen_u[u] = 1;
  int dist = 0;
  std::size_t level = 1;
  while (!q.empty()) {
    ++dist;
    std::size_t next_level = 0;
    while (level--) {
      auto [x, is_u] = q.front();
      q.pop_front();
      auto nb = is_u ? g.neighbors_of_u(x) : g.neighbors_of_v(x);
      for (std::int32_t y : nb) {
        if (is_u) {
          if (y == v) return dist;
          if (seen_v[y]) continue;
          seen_v[y] = 1;
        } else {
          if (seen_u[y]) continue;
          seen_u[y] = 1;
        }
        q.emplace_back(y, !is_u);
        ++next_level;
      }
    }
    level = next_level;
  }
  return -1;
}

}  // namespace bigi
