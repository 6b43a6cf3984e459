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
#include <cmath>
#include <numeric>
#include <set>

#include "bigi/common.hpp"
#include "bigi/eval.hpp"
#include "bigi/synth.hpp"
#include "oracles.hpp"

using namespace bigi;

namespace {

// Tiny trained-model stand-in: identity-ish scorer whose ranking we control
// through the embeddings.
TrainedModel make_model(const Tensor& u_emb, const Tensor& v_emb, std::uint64_t seed = 3) {
  TrainedModel m;
  m.cfg.dim = u_emb.cols;
  m.cfg.depth = 1;
  m.cfg.seed = seed;
  m.u_emb = u_emb;
  m.v_emb = v_emb;
  Rng rng(seed);
  register_ranking_params(m.store, u_emb.cols, m.cfg.hidden_width(), rng);
  return m;
}

}  // namespace

TEST_CASE("pair scorer matches a direct MLP evaluation") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int d = 6, nu = 7, nv = 9;
  Tensor ue(nu, d), ve(nv, d);
  for (double& x : ue.data) x = u(rng);
  for (double& x : ve.data) x = u(rng);
  TrainedModel m = make_model(ue, ve);

  const Tensor& w1 = m.store.get(kRankW1).value;
  const Tensor& w2 = m.store.get(kRankW2).value;
  const PairScorer scorer(ue, ve, m.store, m.cfg.leaky_slope);
  for (int uu = 0; uu < nu; ++uu)
    for (int vv = 0; vv < nv; ++vv) {
      double want = 0.0;
      for (int h = 0; h < w1.rows; ++h) {
        double z = 0.0;
        for (int j = 0; j < d; ++j) z += w1.at(h, j) * ue.at(uu, j);
        for (int j = 0; j < d; ++j) z += w1.at(h, d + j) * ve.at(vv, j);
        want += w2.data[static_cast<std::size_t>(h)] *
                (z > 0 ? z : m.cfg.leaky_slope * z);
      }
      CHECK(scorer.score(uu, vv) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("top-K fixtures via controlled rankings") {
  // 1 user, 4 items; train edge (0,0) filters item 0 out of candidates.
  // Scorer is monotone in the first embedding coordinate by construction:
  // pick embeddings so the candidate ranking is (1, 2, 3).
  const int d = 2;
  Tensor ue(1, d), ve(4, d);
  ue.at(0, 0) = 1.0;
  for (int v = 0; v < 4; ++v) ve.at(v, 0) = 4.0 - v;
  TrainedModel m = make_model(ue, ve, 7);
  // Make phi strictly increasing in v's first coordinate.
  m.store.get(kRankW1).value = Tensor(1, 2 * d);
  m.store.get(kRankW1).value.at(0, d) = 1.0;  // picks v[0]
  m.store.get(kRankW2).value = Tensor(1, 1);
  m.store.get(kRankW2).value.data[0] = 1.0;

  EdgeSplit split;
  split.train = BipartiteGraph(1, 4, {{0, 0}});

  SUBCASE("single relevant item at rank 1") {
    split.test_edges = {{0, 1}};  // item 1 ranks first among candidates {1,2,3}
    MetricsReport r = topk_evaluate(m, split, {10});
    CHECK(r.get("MRR@10") == doctest::Approx(1.0));
    CHECK(r.get("MAP@10") == doctest::Approx(1.0));
    CHECK(r.get("F1@10") == doctest::Approx(2.0 / 11.0));
    CHECK(r.get("NDCG@10") == doctest::Approx(1.0));
  }

  SUBCASE("relevant item at rank 2 of 3 candidates") {
    split.test_edges = {{0, 2}};  // ranking (1,2,3) -> hit at position 2
    MetricsReport r = topk_evaluate(m, split, {3});
    CHECK(r.get("NDCG@3") == doctest::Approx(1.0 / std::log2(3.0)));
    CHECK(r.get("MRR@3") == doctest::Approx(0.5));
  }

  SUBCASE("perfect prefix gives NDCG = MRR = 1") {
    split.test_edges = {{0, 1}, {0, 2}};
    MetricsReport r = topk_evaluate(m, split, {2});
    CHECK(r.get("NDCG@2") == doctest::Approx(1.0));
    CHECK(r.get("MRR@2") == doctest::Approx(1.0));
    CHECK(r.get("MAP@2") == doctest::Approx(1.0));
  }

  SUBCASE("train items never appear in the ranking") {
    // Item 0 scores highest but is filtered; with it, MRR@1 would be 0.
    split.test_edges = {{0, 1}};
    MetricsReport r = topk_evaluate(m, split, {1});
    CHECK(r.get("MRR@1") == doctest::Approx(1.0));
  }
}

TEST_CASE("ranking metrics match the brute-force oracle on random instances") {
  Rng rng(11);
  std::uniform_real_distribution<double> score(-1.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n_items = 2 + static_cast<int>(rng() % 5);  // <= 6 items
    const int d = 2;
    Tensor ue(1, d), ve(n_items, d);
    for (double& x : ve.data) x = score(rng);
    TrainedModel m = make_model(ue, ve, 100 + trial);

    EdgeSplit split;
    split.train = BipartiteGraph(1, n_items, {{0, static_cast<std::int32_t>(rng() % n_items)}});
    std::set<std::int32_t> rel;
    const int n_rel = 1 + static_cast<int>(rng() % (n_items - 1));  // train item is excluded
    while (static_cast<int>(rel.size()) < n_rel) {
      const auto v = static_cast<std::int32_t>(rng() % n_items);
      if (!split.train.has_edge(0, v)) rel.insert(v);
    }
    if (rel.empty()) continue;
    for (std::int32_t v : rel) split.test_edges.emplace_back(0, v);

    const int K = 1 + static_cast<int>(rng() % 6);
    MetricsReport r = topk_evaluate(m, split, {K});

    // Oracle: rebuild the ranking independently from raw scores.
    const PairScorer scorer(m.u_emb, m.v_emb, m.store, m.cfg.leaky_slope);
    std::vector<int> cand;
    for (int v = 0; v < n_items; ++v)
      if (!split.train.has_edge(0, v)) cand.push_back(v);
    std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) {
      const double sa = scorer.score(0, a), sb = scorer.score(0, b);
      if (sa != sb) return sa > sb;
      return a < b;
    });
    const std::set<int> rel_int(rel.begin(), rel.end());
    const auto want = oracle::ranked_metrics(cand, rel_int, K);
    CHECK(r.get("NDCG@" + std::to_string(K)) == doctest::Approx(want.ndcg).epsilon(1e-9));
    CHECK(r.get("MAP@" + std::to_string(K)) == doctest::Approx(want.map).epsilon(1e-9));
    CHECK(r.get("MRR@" + std::to_string(K)) == doctest::Approx(want.mrr).epsilon(1e-9));
    CHECK(r.get("F1@" + std::to_string(K)) == doctest::Approx(want.f1).epsilon(1e-9));
  }
}

TEST_CASE("metrics are invariant to order-preserving score transforms") {
  Rng rng(13);
  const int d = 2, n_items = 8;
  Tensor ue(1, d), ve(n_items, d);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : ve.data) x = u(rng);
  TrainedModel m = make_model(ue, ve, 31);

  EdgeSplit split;
  split.train = BipartiteGraph(1, n_items, {{0, 0}});
  split.test_edges = {{0, 2}, {0, 5}};
  MetricsReport before = topk_evaluate(m, split, {3, 5});

  // Order-preserving transform of phi: scale W2 by a positive constant.
  for (double& x : m.store.get(kRankW2).value.data) x *= 37.0;
  MetricsReport after = topk_evaluate(m, split, {3, 5});
  for (const auto& [name, v] : before.values) CHECK(after.get(name) == doctest::Approx(v));
}

TEST_CASE("AUC fixtures") {
  CHECK(auc_roc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(auc_pr({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  // constant scores: all ties -> 0.5 by tie averaging
  CHECK(auc_roc({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0}) == doctest::Approx(0.5));
  // 3 of 4 concordant pairs
  CHECK(auc_roc({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(auc_roc({0.5, 0.6}, {1, 1}), ConfigError);
}

TEST_CASE("AUC-ROC equals pairwise concordance counting on random instances") {
  Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      // coarse grid so ties actually happen
      scores[static_cast<std::size_t>(i)] = std::floor(u(rng) * 5.0) / 5.0;
      labels[static_cast<std::size_t>(i)] = rng() % 2;
      pos += labels[static_cast<std::size_t>(i)];
    }
    if (pos == 0 || pos == n) continue;
    CHECK(auc_roc(scores, labels) ==
          doctest::Approx(oracle::auc_by_concordance(scores, labels)).epsilon(1e-9));
  }
}

TEST_CASE("link prediction: linearly separable embeddings give near-perfect AUC") {
  // Only the first half of the users interact at all, and their embeddings
  // carry a positive first coordinate, so [u|v] is linearly separable.
  const int d = 4;
  Rng rng(23);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  const int nu = 20, nv = 20;
  Tensor ue(nu, d), ve(nv, d);
  std::vector<Edge> edges;
  for (int i = 0; i < nu; ++i) {
    ue.at(i, 0) = i < nu / 2 ? u(rng) : -u(rng);
    for (int j = 1; j < d; ++j) ue.at(i, j) = u(rng) - 0.6;
  }
  for (int j = 0; j < nv; ++j)
    for (int t = 0; t < d; ++t) ve.at(j, t) = u(rng) - 0.6;
  for (int i = 0; i < nu / 2; ++i)
    for (int j = 0; j < nv; ++j) edges.emplace_back(i, j);

  const BipartiteGraph g(nu, nv, std::move(edges));
  EdgeSplit split = split_train_test(g, 0.7, 3);
  TrainedModel m = make_model(ue, ve, 11);
  MetricsReport r = link_predict_evaluate(m, split, 1, 5);
  CHECK(r.get("AUC-ROC") > 0.95);
  CHECK(r.get("AUC-PR") > 0.95);
}

TEST_CASE("clustering analysis fixtures") {
  SUBCASE("two tight far-apart blobs prefer k=2 over k=5") {
    Rng rng(29);
    std::normal_distribution<double> noise(0.0, 0.05);
    Tensor pts(40, 2);
    for (int i = 0; i < 40; ++i) {
      const double cx = i < 20 ? 0.0 : 100.0;
      pts.at(i, 0) = cx + noise(rng);
      pts.at(i, 1) = noise(rng);
    }
    MetricsReport r = clustering_analysis(pts, {2, 5}, 1);
    CHECK(r.get("CHI@2") > r.get("CHI@5"));
    CHECK(r.get("CHI@2") > 1e4);
  }

  SUBCASE("identical points report the +inf sentinel") {
    Tensor pts(6, 3);
    for (double& x : pts.data) x = 2.5;
    MetricsReport r = clustering_analysis(pts, {2}, 1);
    CHECK(std::isinf(r.get("CHI@2")));
  }

  SUBCASE("square corners, k=2: CHI matches the hand computation") {
    // Points (0,0),(0,1),(1,0),(1,1); best 2-split pairs adjacent corners:
    // W = 4 * 0.25 = 1, B = 4 * 0.25 = 1, CHI = (1/1)/(1/2) = 2.
    Tensor pts(4, 2);
    pts.at(1, 1) = 1.0;
    pts.at(2, 0) = 1.0;
    pts.at(3, 0) = 1.0;
    pts.at(3, 1) = 1.0;
    MetricsReport r = clustering_analysis(pts, {2}, 1);
    CHECK(r.get("CHI@2") == doctest::Approx(2.0).epsilon(1e-9));
  }

  SUBCASE("k >= n is rejected") {
    Tensor pts(3, 2);
    CHECK_THROWS_AS(clustering_analysis(pts, {3}, 1), ConfigError);
  }
}

TEST_CASE("pair score dump: distances via train-graph BFS") {
  // Path u0 - v0 - u1 - v1.
  const BipartiteGraph g(2, 2, {{0, 0}, {1, 0}, {1, 1}});
  Tensor ue(2, 2), ve(2, 2);
  TrainedModel m = make_model(ue, ve, 13);
  const auto rows = dump_pair_scores(m, g, {{0, 0}, {0, 1}});
  CHECK(rows[0].distance == 1);  // train edge
  CHECK(rows[1].distance == 3);  // u0-v0-u1-v1

  const BipartiteGraph disc(2, 2, {{0, 0}, {1, 1}});
  const auto rows2 = dump_pair_scores(m, disc, {{0, 1}});
  CHECK(rows2[0].distance == -1);  // disconnected -> "inf" in CSV
}

TEST_CASE("metrics report CSV carries names and the inf sentinel") {
  MetricsReport r;
  r.set("F1@10", 0.25);
  r.set("CHI@2", std::numeric_limits<double>::infinity());
  r.set_meta("dataset", "toy");
  const std::string csv = r.to_csv();
  CHECK(csv.find("# dataset=toy") != std::string::npos);
  CHECK(csv.find("F1@10,0.25") != std::string::npos);
  CHECK(csv.find("CHI@2,inf") != std::string::npos);
  CHECK_THROWS_AS(r.get("missing"), ConfigError);
}
