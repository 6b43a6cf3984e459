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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "bigi/common.hpp"
#include "bigi/encoder.hpp"
#include "bigi/synth.hpp"

using namespace bigi;

namespace {

void fill(Tensor& t, double v) { std::fill(t.data.begin(), t.data.end(), v); }

void set_identity(Tensor& t) {
  fill(t, 0.0);
  for (int i = 0; i < std::min(t.rows, t.cols); ++i) t.at(i, i) = 1.0;
}

ParamStore glorot_params(const BipartiteGraph& g, const EncoderConfig& cfg, std::uint64_t seed) {
  ParamStore store;
  Rng rng = substream(seed, "init");
  register_encoder_params(store, g.num_u(), g.num_v(), cfg, rng);
  return store;
}

}  // namespace

TEST_CASE("single edge with identity weights reproduces the hand computation") {
  // u0 - v0, all-ones U0 and all-twos V0, one layer, W_u = W_v = [I | 0].
  const BipartiteGraph g(1, 1, {{0, 0}});
  const EncoderConfig cfg{1, 3, 0.0, 0.0};
  ParamStore store;
  Rng rng(1);
  register_encoder_params(store, 1, 1, cfg, rng);
  fill(store.get(kEncU0).value, 1.0);
  fill(store.get(kEncV0).value, 2.0);
  set_identity(store.get(enc_name(1, "What_v")).value);
  set_identity(store.get(enc_name(1, "What_u")).value);
  set_identity(store.get(enc_name(1, "Wbar_u")).value);
  set_identity(store.get(enc_name(1, "Wbar_v")).value);
  set_identity(store.get(enc_name(1, "W_u")).value);  // [I | 0] on a d x 2d shape
  set_identity(store.get(enc_name(1, "W_v")).value);

  Tape tape;
  EncodeTrace trace;
  Embeddings emb = encode(tape, g, store, cfg, Mode::Infer, nullptr, &trace);
  // v_hat = mean{u0} = ones, u_bar = mean{v_hat} = ones, u1 = [ubar | u0][:d] = ones.
  for (double x : tape.value(trace.v_hat[0]).data) CHECK(x == doctest::Approx(1.0));
  for (double x : tape.value(emb.u).data) CHECK(x == doctest::Approx(1.0));
  // Mirrored side: u_hat = mean{v0} = twos, v1 = v_bar = twos.
  for (double x : tape.value(trace.u_hat[0]).data) CHECK(x == doctest::Approx(2.0));
  for (double x : tape.value(emb.v).data) CHECK(x == doctest::Approx(2.0));
}

TEST_CASE("isolated nodes get the zero-mean rule, never an error") {
  // u1 isolated.
  const BipartiteGraph g(2, 1, {{0, 0}});
  const EncoderConfig cfg{2, 4, 0.0, 0.01};
  ParamStore store = glorot_params(g, cfg, 7);
  Tape tape;
  Embeddings emb = encode(tape, g, store, cfg, Mode::Infer);
  const Tensor& u = tape.value(emb.u);
  for (int j = 0; j < u.cols; ++j) CHECK(std::isfinite(u.at(1, j)));

  // Deterministic: the isolated row equals W_u [ delta(0) | u0_row ] composed
  // across layers, so two infer calls agree exactly.
  Tape tape2;
  Embeddings emb2 = encode(tape2, g, store, cfg, Mode::Infer);
  CHECK(tape.value(emb.u).data == tape2.value(emb2.u).data);
}

TEST_CASE("infer mode is a pure function; train mode dropout perturbs it") {
  SynthSpec spec;
  spec.num_u = 30;
  spec.num_v = 20;
  spec.num_edges = 120;
  const BipartiteGraph g(spec.num_u, spec.num_v, synth_edges(spec, 2));
  const EncoderConfig cfg{2, 8, 0.3, 0.01};
  ParamStore store = glorot_params(g, cfg, 3);

  Tape t1, t2;
  CHECK(t1.value(encode(t1, g, store, cfg, Mode::Infer).u).data ==
        t2.value(encode(t2, g, store, cfg, Mode::Infer).u).data);

  Rng d1(5), d2(5), d3(6);
  Tape t3, t4, t5;
  const auto a = t3.value(encode(t3, g, store, cfg, Mode::Train, &d1).u).data;
  const auto b = t4.value(encode(t4, g, store, cfg, Mode::Train, &d2).u).data;
  const auto c = t5.value(encode(t5, g, store, cfg, Mode::Train, &d3).u).data;
  CHECK(a == b);  // same dropout stream
  CHECK(a != c);  // different stream, different masks
}

TEST_CASE("permutation equivariance: relabeling nodes permutes the outputs") {
  SynthSpec spec;
  spec.num_u = 12;
  spec.num_v = 9;
  spec.num_edges = 40;
  const BipartiteGraph g(spec.num_u, spec.num_v, synth_edges(spec, 4));
  const EncoderConfig cfg{2, 5, 0.0, 0.01};
  ParamStore store = glorot_params(g, cfg, 11);

  std::vector<std::int32_t> perm_u(spec.num_u), perm_v(spec.num_v);
  std::iota(perm_u.begin(), perm_u.end(), 0);
  std::iota(perm_v.begin(), perm_v.end(), 0);
  Rng rng(13);
  std::shuffle(perm_u.begin(), perm_u.end(), rng);
  std::shuffle(perm_v.begin(), perm_v.end(), rng);

  std::vector<Edge> pedges;
  for (const Edge& e : g.edges()) pedges.emplace_back(perm_u[e.first], perm_v[e.second]);
  const BipartiteGraph pg(spec.num_u, spec.num_v, std::move(pedges));

  ParamStore pstore = glorot_params(g, cfg, 11);  // same weights
  Tensor& pu0 = pstore.get(kEncU0).value;
  Tensor& pv0 = pstore.get(kEncV0).value;
  const Tensor& u0 = store.get(kEncU0).value;
  const Tensor& v0 = store.get(kEncV0).value;
  for (int i = 0; i < spec.num_u; ++i)
    std::copy_n(u0.row(i), u0.cols, pu0.row(perm_u[i]));
  for (int j = 0; j < spec.num_v; ++j)
    std::copy_n(v0.row(j), v0.cols, pv0.row(perm_v[j]));

  Tape ta, tb;
  Embeddings ea = encode(ta, g, store, cfg, Mode::Infer);
  Embeddings eb = encode(tb, pg, pstore, cfg, Mode::Infer);
  const Tensor& ua = ta.value(ea.u);
  const Tensor& ub = tb.value(eb.u);
  for (int i = 0; i < spec.num_u; ++i)
    for (int j = 0; j < cfg.dim; ++j)
      CHECK(ua.at(i, j) == doctest::Approx(ub.at(perm_u[i], j)).epsilon(1e-12));
}

TEST_CASE("locality: edits beyond 2K hops leave a node's embedding unchanged") {
  // Path u0-v0-u1-v1-u2-v2 (+ edge u3-v3 to keep shapes constant), K = 1.
  std::vector<Edge> base{{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}, {3, 3}};
  const BipartiteGraph g(4, 4, base);
  std::vector<Edge> edited = base;
  edited.pop_back();
  edited.emplace_back(3, 2);  // move the far edge; u2/v2/u3/v3 all >2 hops from u0
  const BipartiteGraph g2(4, 4, edited);

  const EncoderConfig cfg{1, 4, 0.0, 0.01};
  ParamStore store = glorot_params(g, cfg, 17);
  Tape ta, tb;
  Embeddings ea = encode(ta, g, store, cfg, Mode::Infer);
  Embeddings eb = encode(tb, g2, store, cfg, Mode::Infer);
  const Tensor& ua = ta.value(ea.u);
  const Tensor& ub = tb.value(eb.u);
  const Tensor& va = ta.value(ea.v);
  const Tensor& vb = tb.value(eb.v);
  for (int j = 0; j < cfg.dim; ++j) {
    CHECK(ua.at(0, j) == ub.at(0, j));  // u0 unchanged
    CHECK(va.at(0, j) == vb.at(0, j));  // v0 unchanged
  }
  // u2 sits within 2 hops of the edit and must change.
  bool changed = false;
  for (int j = 0; j < cfg.dim; ++j) changed |= ua.at(2, j) != ub.at(2, j);
  CHECK(changed);
}

TEST_CASE("heterogeneous mean excludes the node's own feature") {
  // Star around v0 with two u-neighbors; v0's own feature must not reach v_hat.
  const BipartiteGraph g(2, 1, {{0, 0}, {1, 0}});
  const EncoderConfig cfg{1, 4, 0.0, 0.01};
  ParamStore s1 = glorot_params(g, cfg, 19);
  ParamStore s2 = glorot_params(g, cfg, 19);
  for (double& x : s2.get(kEncV0).value.data) x += 3.7;  // perturb only V0

  Tape t1, t2;
  EncodeTrace tr1, tr2;
  encode(t1, g, s1, cfg, Mode::Infer, nullptr, &tr1);
  encode(t2, g, s2, cfg, Mode::Infer, nullptr, &tr2);
  CHECK(t1.value(tr1.v_hat[0]).data == t2.value(tr2.v_hat[0]).data);  // independent of V0
  CHECK(t1.value(tr1.u_hat[0]).data != t2.value(tr2.u_hat[0]).data);  // depends on V0
}

TEST_CASE("shape mismatches are rejected") {
  const BipartiteGraph g(2, 2, {{0, 0}, {1, 1}});
  const EncoderConfig cfg{1, 4, 0.0, 0.01};
  ParamStore store = glorot_params(g, cfg, 23);
  const BipartiteGraph bigger(3, 2, {{0, 0}, {1, 1}, {2, 1}});
  Tape tape;
  CHECK_THROWS_AS(encode(tape, bigger, store, cfg, Mode::Infer), ConfigError);
  EncoderConfig bad = cfg;
  bad.dropout_rate = 1.0;
  CHECK_THROWS_AS(encode(tape, g, store, bad, Mode::Infer), ConfigError);
}
