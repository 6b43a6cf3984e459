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

#include "bigi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "bigi/common.hpp"

namespace bigi {

namespace {

using CellSet = std::unordered_set<std::uint64_t>;

std::uint64_t cell_of(int u, int v, int num_v) {
  return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(num_v) +
         static_cast<std::uint64_t>(v);
}

void check_spec(const SynthSpec& s) {
  if (s.num_u < 1 || s.num_v < 1) throw ConfigError("synth: node counts must be positive");
  const std::int64_t cells = static_cast<std::int64_t>(s.num_u) * s.num_v;
  if (s.num_edges < std::max(s.num_u, s.num_v) || s.num_edges > cells)
    throw ConfigError("synth: edge count must cover every node and fit the cell space");
}

std::vector<Edge> blocks_edges(const SynthSpec& s, Rng& rng) {
  const int k = std::max(1, std::min({s.blocks, s.num_u, s.num_v}));
  auto u_block = [&](int u) { return static_cast<int>(static_cast<std::int64_t>(u) * k / s.num_u); };
  std::vector<std::vector<std::int32_t>> v_of_block(static_cast<std::size_t>(k));
  for (int v = 0; v < s.num_v; ++v)
    v_of_block[static_cast<std::size_t>(static_cast<std::int64_t>(v) * k / s.num_v)].push_back(v);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::int32_t> any_v(0, s.num_v - 1);
  std::uniform_int_distribution<std::int32_t> any_u(0, s.num_u - 1);
  auto draw_v_for = [&](int u) -> std::int32_t {
    if (coin(rng) < s.p_in) {
      const auto& pool = v_of_block[static_cast<std::size_t>(u_block(u))];
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      return pool[pick(rng)];
    }
    return any_v(rng);
  };

  CellSet cells;
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(s.num_edges));
  auto try_add = [&](int u, int v) {
    if (cells.insert(cell_of(u, v, s.num_v)).second) {
      edges.emplace_back(u, v);
      return true;
    }
    return false;
  };
  for (int u = 0; u < s.num_u; ++u) try_add(u, draw_v_for(u));
  std::vector<char> v_seen(static_cast<std::size_t>(s.num_v), 0);
  for (const Edge& e : edges) v_seen[static_cast<std::size_t>(e.second)] = 1;
  for (int v = 0; v < s.num_v; ++v) {
    while (!v_seen[static_cast<std::size_t>(v)]) {
      if (try_add(any_u(rng), v)) v_seen[static_cast<std::size_t>(v)] = 1;
    }
  }
  while (static_cast<std::int64_t>(edges.size()) < s.num_edges) {
    const int u = any_u(rng);
    try_add(u, draw_v_for(u));
  }
  return edges;
}

std::vector<Edge> latent_edges(const SynthSpec& s, Rng& rng) {
  const std::int64_t cells = static_cast<std::int64_t>(s.num_u) * s.num_v;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int r = std::max(1, s.latent_rank);
  std::vector<double> zu(static_cast<std::size_t>(s.num_u) * r);
  std::vector<double> zv(static_cast<std::size_t>(s.num_v) * r);
  std::vector<double> item_pop(static_cast<std::size_t>(s.num_v));
  for (double& x : zu) x = gauss(rng);
  for (double& x : zv) x = gauss(rng);
  for (double& x : item_pop) x = gauss(rng);

  // Gumbel top-k picks exactly num_edges distinct cells with probability
  // proportional to softmax(affinity / temperature).
  std::vector<double> key(static_cast<std::size_t>(cells));
  std::uniform_real_distribution<double> unif(1e-300, 1.0);
  const double inv_t = 1.0 / std::max(1e-6, s.temperature);
  const double norm = 1.0 / std::sqrt(static_cast<double>(r));
  for (int u = 0; u < s.num_u; ++u) {
    const double* a = zu.data() + static_cast<std::size_t>(u) * r;
    for (int v = 0; v < s.num_v; ++v) {
      const double* b = zv.data() + static_cast<std::size_t>(v) * r;
      double dot = 0.0;
      for (int t = 0; t < r; ++t) dot += a[t] * b[t];
      const double logit = (dot * norm + 0.8 * item_pop[static_cast<std::size_t>(v)]) * inv_t;
      key[static_cast<std::size_t>(cell_of(u, v, s.num_v))] =
          logit - std::log(-std::log(unif(rng)));
    }
  }
  std::vector<std::int64_t> order(static_cast<std::size_t>(cells));
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + s.num_edges, order.end(),
                   [&](std::int64_t a, std::int64_t b) {
                     return key[static_cast<std::size_t>(a)] > key[static_cast<std::size_t>(b)];
                   });
  order.resize(static_cast<std::size_t>(s.num_edges));

  // Coverage repair: force one edge per missing node, dropping the weakest
  // removable picks to keep the count exact.
  std::vector<Edge> edges;
  edges.reserve(order.size());
  std::vector<int> deg_u(static_cast<std::size_t>(s.num_u), 0);
  std::vector<int> deg_v(static_cast<std::size_t>(s.num_v), 0);
  CellSet chosen;
  for (std::int64_t c : order) {
    const int u = static_cast<int>(c / s.num_v), v = static_cast<int>(c % s.num_v);
    edges.emplace_back(u, v);
    chosen.insert(static_cast<std::uint64_t>(c));
    ++deg_u[static_cast<std::size_t>(u)];
    ++deg_v[static_cast<std::size_t>(v)];
  }
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    return key[cell_of(a.first, a.second, s.num_v)] < key[cell_of(b.first, b.second, s.num_v)];
  });
  auto add_forced = [&](int u, int v) {
    if (!chosen.insert(cell_of(u, v, s.num_v)).second) return;
    // Drop the weakest pick whose endpoints stay covered.
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto [eu, ev] = edges[i];
      if (deg_u[static_cast<std::size_t>(eu)] > 1 && deg_v[static_cast<std::size_t>(ev)] > 1) {
        --deg_u[static_cast<std::size_t>(eu)];
        --deg_v[static_cast<std::size_t>(ev)];
        chosen.erase(cell_of(eu, ev, s.num_v));
        edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
    edges.emplace_back(u, v);
    ++deg_u[static_cast<std::size_t>(u)];
    ++deg_v[static_cast<std::size_t>(v)];
  };
  for (int u = 0; u < s.num_u; ++u) {
    if (deg_u[static_cast<std::size_t>(u)] > 0) continue;
    int best_v = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < s.num_v; ++v) {
      const double kk = key[cell_of(u, v, s.num_v)];
      if (kk > best && !chosen.count(cell_of(u, v, s.num_v))) {
        best = kk;
        best_v = v;
      }
    }
    add_forced(u, best_v);
  }
  for (int v = 0; v < s.num_v; ++v) {
    if (deg_v[static_cast<std::size_t>(v)] > 0) continue;
    int best_u = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int u = 0; u < s.num_u; ++u) {
      const double kk = key[cell_of(u, v, s.num_v)];
      if (kk > best && !chosen.count(cell_of(u, v, s.num_v))) {
        best = kk;
        best_u = u;
      }
    }
    add_forced(best_u, v);
  }
  return edges;
}

}  // namespace

std::vector<Edge> synth_edges(const SynthSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  Rng rng = substream(seed, spec.kind == SynthSpec::Kind::Blocks ? "synth-blocks"
                                                                 : "synth-latent");
  return spec.kind == SynthSpec::Kind::Blocks ? blocks_edges(spec, rng)
                                              : latent_edges(spec, rng);
}

void synth_write(const SynthSpec& spec, std::uint64_t seed, const std::string& path) {
  std::vector<Edge> edges = synth_edges(spec, seed);
  Rng rng = substream(seed, "synth-write");
  std::shuffle(edges.begin(), edges.end(), rng);
  // Duplicate a handful of lines; loaders must collapse them.
  const std::size_t dups = std::min<std::size_t>(edges.size(), 7);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open synth output: " + path);
  auto emit = [&](const Edge& e) {
    os << 'u' << e.first << '\t' << 'v' << e.second << '\t' << 1 << '\n';
  };
  for (const Edge& e : edges) emit(e);
  for (std::size_t i = 0; i < dups; ++i) emit(edges[i * (edges.size() / dups)]);
  if (!os) throw IoError("synth write failed: " + path);
}

}  // namespace bigi
