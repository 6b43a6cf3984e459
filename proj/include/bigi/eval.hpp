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

#include <iosfwd>
#include <string>
#include <vector>

#include "bigi/graph.hpp"
#include "bigi/trainer.hpp"

namespace bigi {

// Named metric -> value map with order-preserving CSV serialization.
struct MetricsReport {
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::pair<std::string, std::string>> meta;

  void set(const std::string& name, double v);
  double get(const std::string& name) const;
  bool has(const std::string& name) const;
  void set_meta(const std::string& key, const std::string& v);

  std::string to_csv() const;  // "metric,value" lines, meta as leading comments
  void write_csv(const std::string& path) const;
  void print_table(std::ostream& os) const;
};

// Ranking MLP evaluated outside the tape, with per-node partial activations
// precomputed so scoring a full user row costs O(num_v * hidden).
class PairScorer {
 public:
  PairScorer(const Tensor& u_emb, const Tensor& v_emb, const ParamStore& store,
             double leaky_slope);
  double score(int u, int v) const;
  // Scores of (u, every v); out is resized to num_v.
  void score_user(int u, std::vector<double>& out) const;
  int num_u() const { return user_part_.rows; }
  int num_v() const { return item_part_.rows; }

 private:
  Tensor user_part_;  // num_u x hidden
  Tensor item_part_;  // num_v x hidden
  Tensor w2_;         // 1 x hidden
  double slope_;
};

// Top-K protocol: per user with at least one test edge, rank every item the
// user did not interact with in train (ties broken by ascending item index),
// then macro-average F1/NDCG/MAP/MRR over users. F1 is reported at the
// largest cutoff, the other metrics at every cutoff.
MetricsReport topk_evaluate(const TrainedModel& model, const EdgeSplit& split,
                            const std::vector<int>& ks);

// Link prediction: a logistic classifier on [u|v] features is fit to train
// edges vs sampled train non-edges, then scored on test edges vs fresh
// non-edges (excluding train and test). Reports AUC-ROC and AUC-PR.
MetricsReport link_predict_evaluate(const TrainedModel& model, const EdgeSplit& split,
                                    int neg_ratio, std::uint64_t seed);

// K-means (k-means++ seeding, 10 restarts) followed by the Calinski-Harabasz
// index per requested k. Degenerate zero within-cluster dispersion reports
// the +infinity sentinel.
MetricsReport clustering_analysis(const Tensor& points, const std::vector<int>& k_values,
                                  std::uint64_t seed);

struct PairScoreRow {
  std::int32_t u = 0;
  std::int32_t v = 0;
  int distance = -1;  // -1 = disconnected ("inf" in CSV)
  double score = 0.0;
};

// Ranking scores plus BFS distance in the train graph for each pair.
std::vector<PairScoreRow> dump_pair_scores(const TrainedModel& model,
                                           const BipartiteGraph& train_graph,
                                           const std::vector<Edge>& pairs);

// Standalone metric primitives (shared with tests).
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);
double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace bigi
