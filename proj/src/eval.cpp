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

#include "bigi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "bigi/common.hpp"
#include "bigi/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bigi {

// ---------------------------------------------------------------------------
// MetricsReport
// ---------------------------------------------------------------------------

void MetricsReport::set(const std::string& name, double v) {
  for (auto& [n, old] : values)
    if (n == name) {
      old = v;
      return;
    }
  values.emplace_back(name, v);
}

double MetricsReport::get(const std::string& name) const {
  for (const auto& [n, v] : values)
    if (n == name) return v;
  throw ConfigError("metrics report: no metric named " + name);
}

bool MetricsReport::has(const std::string& name) const {
  for (const auto& [n, v] : values)
    if (n == name) return true;
  return false;
}

void MetricsReport::set_meta(const std::string& key, const std::string& v) {
  meta.emplace_back(key, v);
}

namespace {

std::string fmt_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string MetricsReport::to_csv() const {
  std::string out;
  for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
  out += "metric,value\n";
  for (const auto& [n, v] : values) out += n + "," + fmt_metric(v) + "\n";
  return out;
}

void MetricsReport::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open metrics csv for writing: " + path);
  os << to_csv();
  if (!os) throw IoError("metrics csv write failed: " + path);
}

void MetricsReport::print_table(std::ostream& os) const {
  std::size_t w = 6;
  for (const auto& [n, v] : values) w = std::max(w, n.size());
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << '\n';
  for (const auto& [n, v] : values) {
    os << n;
    for (std::size_t i = n.size(); i < w + 2; ++i) os << ' ';
    os << fmt_metric(v) << '\n';
  }
}

// ---------------------------------------------------------------------------
// fast pair scorer
// ---------------------------------------------------------------------------

PairScorer::PairScorer(const Tensor& u_emb, const Tensor& v_emb, const ParamStore& store,
                       double leaky_slope)
    : slope_(leaky_slope) {
  const Tensor& w1 = store.get(kRankW1).value;  // hidden x 2d
  w2_ = store.get(kRankW2).value;               // 1 x hidden
  const int d = u_emb.cols;
  if (w1.cols != 2 * d) throw ConfigError("pair scorer: W1 width does not match embeddings");
  const int hidden = w1.rows;
  // Split W1 into the u-block and v-block and precompute per-node partials.
  Tensor w1u(hidden, d), w1v(hidden, d);
  for (int h = 0; h < hidden; ++h) {
    std::copy_n(w1.row(h), d, w1u.row(h));
    std::copy_n(w1.row(h) + d, d, w1v.row(h));
  }
  user_part_ = Tensor(u_emb.rows, hidden);
  item_part_ = Tensor(v_emb.rows, hidden);
  kern::gemm_nt(u_emb.rows, d, hidden, u_emb.data.data(), w1u.data.data(),
                user_part_.data.data(), false);
  kern::gemm_nt(v_emb.rows, d, hidden, v_emb.data.data(), w1v.data.data(),
                item_part_.data.data(), false);
}

double PairScorer::score(int u, int v) const {
  const double* a = user_part_.row(u);
  const double* b = item_part_.row(v);
  double s = 0.0;
  for (int h = 0; h < user_part_.cols; ++h) {
    const double z = a[h] + b[h];
    s += w2_.data[h] * (z > 0.0 ? z : slope_ * z);
  }
  return s;
}

void PairScorer::score_user(int u, std::vector<double>& out) const {
  out.resize(static_cast<std::size_t>(item_part_.rows));
  for (int v = 0; v < item_part_.rows; ++v) out[static_cast<std::size_t>(v)] = score(u, v);
}

// ---------------------------------------------------------------------------
// top-K ranking metrics
// ---------------------------------------------------------------------------

namespace {

struct UserMetrics {
  bool evaluated = false;
  std::vector<double> f1, ndcg, map, mrr;  // one slot per cutoff
};

}  // namespace

MetricsReport topk_evaluate(const TrainedModel& model, const EdgeSplit& split,
                            const std::vector<int>& ks) {
  if (split.test_edges.empty()) throw ConfigError("topk: empty test set");
  if (ks.empty()) throw ConfigError("topk: need at least one cutoff");
  for (int k : ks)
    if (k < 1) throw ConfigError("topk: cutoffs must be >= 1");
  const BipartiteGraph& g = split.train;
  const int num_u = g.num_u();
  const int max_k = *std::max_element(ks.begin(), ks.end());

  std::vector<std::vector<std::int32_t>> test_items(num_u);
  for (const Edge& e : split.test_edges) test_items[e.first].push_back(e.second);

  const PairScorer scorer(model.u_emb, model.v_emb, model.store, model.cfg.leaky_slope);
  std::vector<UserMetrics> per_user(num_u);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) num_threads(kern::max_threads())
#endif
  for (int u = 0; u < num_u; ++u) {
    if (test_items[u].empty()) continue;
    UserMetrics& um = per_user[u];
    um.evaluated = true;

    std::vector<double> scores;
    scorer.score_user(u, scores);
    auto train_nb = g.neighbors_of_u(u);
    std::vector<std::int32_t> cand;
    cand.reserve(scores.size());
    for (std::int32_t v = 0; v < static_cast<std::int32_t>(scores.size()); ++v)
      if (!std::binary_search(train_nb.begin(), train_nb.end(), v)) cand.push_back(v);
    // Rank by score descending, ties by item index ascending (cand is index
    // sorted, stable_sort keeps that order within equal scores).
    std::stable_sort(cand.begin(), cand.end(), [&](std::int32_t a, std::int32_t b) {
      return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });

    std::unordered_set<std::int32_t> rel(test_items[u].begin(), test_items[u].end());
    const int n_rel = static_cast<int>(rel.size());
    const int depth = std::min<int>(max_k, static_cast<int>(cand.size()));

    um.f1.resize(ks.size());
    um.ndcg.resize(ks.size());
    um.map.resize(ks.size());
    um.mrr.resize(ks.size());
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      const int K = ks[ki];
      int hits = 0, first_hit = 0;
      double dcg = 0.0, prec_sum = 0.0;
      for (int p = 1; p <= std::min(K, depth); ++p) {
        if (rel.count(cand[static_cast<std::size_t>(p - 1)])) {
          ++hits;
          if (first_hit == 0) first_hit = p;
          dcg += 1.0 / std::log2(p + 1.0);
          prec_sum += static_cast<double>(hits) / p;
        }
      }
      double idcg = 0.0;
      for (int p = 1; p <= std::min(K, n_rel); ++p) idcg += 1.0 / std::log2(p + 1.0);
      const double prec = static_cast<double>(hits) / K;
      const double rec = static_cast<double>(hits) / n_rel;
      um.f1[ki] = (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
      um.ndcg[ki] = idcg > 0.0 ? dcg / idcg : 0.0;
      um.map[ki] = prec_sum / std::min(K, n_rel);
      um.mrr[ki] = first_hit > 0 ? 1.0 / first_hit : 0.0;
    }
  }

  // Deterministic merge in user order.
  std::size_t n_eval = 0;
  std::vector<double> f1(ks.size(), 0.0), ndcg(ks.size(), 0.0), map(ks.size(), 0.0),
      mrr(ks.size(), 0.0);
  for (const UserMetrics& um : per_user) {
    if (!um.evaluated) continue;
    ++n_eval;
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      f1[ki] += um.f1[ki];
      ndcg[ki] += um.ndcg[ki];
      map[ki] += um.map[ki];
      mrr[ki] += um.mrr[ki];
    }
  }
  if (n_eval == 0) throw ConfigError("topk: no user has test edges");

  MetricsReport report;
  const double inv = 1.0 / static_cast<double>(n_eval);
  for (std::size_t ki = 0; ki < ks.size(); ++ki)
    if (ks[ki] == max_k) report.set("F1@" + std::to_string(max_k), f1[ki] * inv);
  for (std::size_t ki = 0; ki < ks.size(); ++ki)
    report.set("NDCG@" + std::to_string(ks[ki]), ndcg[ki] * inv);
  for (std::size_t ki = 0; ki < ks.size(); ++ki)
    report.set("MAP@" + std::to_string(ks[ki]), map[ki] * inv);
  for (std::size_t ki = 0; ki < ks.size(); ++ki)
    report.set("MRR@" + std::to_string(ks[ki]), mrr[ki] * inv);
  report.set_meta("evaluated_users", std::to_string(n_eval));
  return report;
}

// ---------------------------------------------------------------------------
// AUC metrics
// ---------------------------------------------------------------------------

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ConfigError("auc_roc: bad inputs");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t pos = 0, neg = 0, i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) {
        rank_sum_pos += avg_rank;
        ++pos;
      } else {
        ++neg;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) throw ConfigError("auc_roc: need both classes");
  const double p = static_cast<double>(pos);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) throw ConfigError("auc_pr: bad inputs");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t total_pos = 0;
  for (int l : labels) total_pos += l ? 1 : 0;
  if (total_pos == 0 || total_pos == labels.size())
    throw ConfigError("auc_pr: need both classes");
  double area = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t t = i; t < j; ++t) (labels[order[t]] ? tp : fp) += 1;
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;  // step-wise interpolation
    prev_recall = recall;
    i = j;
  }
  return area;
}

// ---------------------------------------------------------------------------
// link prediction with a logistic classifier
// ---------------------------------------------------------------------------

namespace {

void fill_pair_features(const Tensor& u_emb, const Tensor& v_emb, const std::vector<Edge>& pairs,
                        Tensor& X) {
  const int d = u_emb.cols;
  X = Tensor(static_cast<int>(pairs.size()), 2 * d + 1);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double* row = X.row(static_cast<int>(i));
    std::copy_n(u_emb.row(pairs[i].first), d, row);
    std::copy_n(v_emb.row(pairs[i].second), d, row + d);
    row[2 * d] = 1.0;  // intercept
  }
}

std::vector<Edge> sample_non_edges(const BipartiteGraph& g, std::size_t count, Rng& rng,
                                   const std::vector<Edge>* also_exclude) {
  std::unordered_set<std::uint64_t> excl;
  if (also_exclude) {
    excl.reserve(also_exclude->size() * 2);
    for (const Edge& e : *also_exclude)
      excl.insert(static_cast<std::uint64_t>(e.first) * g.num_v() + e.second);
  }
  std::uniform_int_distribution<std::int32_t> uu(0, g.num_u() - 1);
  std::uniform_int_distribution<std::int32_t> vv(0, g.num_v() - 1);
  std::vector<Edge> out;
  out.reserve(count);
  while (out.size() < count) {
    const Edge e{uu(rng), vv(rng)};
    if (g.has_edge(e.first, e.second)) continue;
    if (also_exclude &&
        excl.count(static_cast<std::uint64_t>(e.first) * g.num_v() + e.second))
      continue;
    out.push_back(e);
  }
  return out;
}

// Full-batch gradient descent on mean log-loss; stops when the improvement
// drops below 1e-8 or after 1000 iterations.
Tensor fit_logistic(const Tensor& X, const std::vector<int>& y) {
  const int n = X.rows, f = X.cols;
  bool has_pos = false, has_neg = false;
  for (int l : y) (l ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw ConfigError("logistic classifier: training set has a single class");
  Tensor w(f, 1);
  Tensor z(n, 1), p(n, 1), r(n, 1), grad(f, 1);
  const double lr = 0.1;
  double prev_loss = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 1000; ++it) {
    kern::gemm_nn(n, f, 1, X.data.data(), w.data.data(), z.data.data(), false);
    kern::sigmoid(static_cast<std::size_t>(n), z.data.data(), p.data.data());
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double pi = std::clamp(p.data[i], 1e-12, 1.0 - 1e-12);
      loss -= y[i] ? std::log(pi) : std::log(1.0 - pi);
      r.data[i] = (p.data[i] - (y[i] ? 1.0 : 0.0)) / n;
    }
    loss /= n;
    kern::gemm_tn(f, n, 1, X.data.data(), r.data.data(), grad.data.data(), false);
    for (int j = 0; j < f; ++j) w.data[j] -= lr * grad.data[j];
    if (prev_loss - loss < 1e-8 && it > 0) break;
    prev_loss = loss;
  }
  return w;
}

}  // namespace

MetricsReport link_predict_evaluate(const TrainedModel& model, const EdgeSplit& split,
                                    int neg_ratio, std::uint64_t seed) {
  if (split.test_edges.empty()) throw ConfigError("link prediction: empty test set");
  if (neg_ratio < 1) throw ConfigError("link prediction: neg_ratio must be >= 1");
  const BipartiteGraph& g = split.train;
  Rng rng = substream(seed, "link-negatives");

  std::vector<Edge> train_pairs = g.edges();
  const std::size_t n_pos = train_pairs.size();
  std::vector<Edge> train_negs =
      sample_non_edges(g, n_pos * static_cast<std::size_t>(neg_ratio), rng, nullptr);
  std::vector<int> y(n_pos, 1);
  y.insert(y.end(), train_negs.size(), 0);
  train_pairs.insert(train_pairs.end(), train_negs.begin(), train_negs.end());

  Tensor X;
  fill_pair_features(model.u_emb, model.v_emb, train_pairs, X);
  const Tensor w = fit_logistic(X, y);

  // Test-time non-edges exclude both train and test edges.
  std::vector<Edge> test_pairs = split.test_edges;
  std::vector<Edge> test_negs = sample_non_edges(g, test_pairs.size(), rng, &split.test_edges);
  std::vector<int> ty(test_pairs.size(), 1);
  ty.insert(ty.end(), test_negs.size(), 0);
  test_pairs.insert(test_pairs.end(), test_negs.begin(), test_negs.end());

  Tensor TX;
  fill_pair_features(model.u_emb, model.v_emb, test_pairs, TX);
  Tensor z(TX.rows, 1);
  kern::gemm_nn(TX.rows, TX.cols, 1, TX.data.data(), w.data.data(), z.data.data(), false);
  std::vector<double> scores(z.data.begin(), z.data.end());

  MetricsReport report;
  report.set("AUC-ROC", auc_roc(scores, ty));
  report.set("AUC-PR", auc_pr(scores, ty));
  report.set_meta("test_pos", std::to_string(split.test_edges.size()));
  report.set_meta("neg_ratio", std::to_string(neg_ratio));
  return report;
}

// ---------------------------------------------------------------------------
// k-means + Calinski-Harabasz
// ---------------------------------------------------------------------------

namespace {

double sq_dist(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

struct KmeansResult {
  std::vector<int> assign;
  Tensor centers;
  double inertia = 0.0;
};

KmeansResult kmeans_once(const Tensor& pts, int k, Rng& rng) {
  const int n = pts.rows, d = pts.cols;
  Tensor centers(k, d);
  // k-means++ seeding.
  std::uniform_int_distribution<int> first(0, n - 1);
  std::copy_n(pts.row(first(rng)), d, centers.row(0));
  std::vector<double> dist2(static_cast<std::size_t>(n), 0.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int cc = 0; cc < c; ++cc)
        best = std::min(best, sq_dist(pts.row(i), centers.row(cc), d));
      dist2[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    int chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng), acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += dist2[static_cast<std::size_t>(i)];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);  // all points coincide with a center
    }
    std::copy_n(pts.row(chosen), d, centers.row(c));
  }

  KmeansResult res;
  res.assign.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(|| : changed) \
    num_threads(kern::max_threads()) if (static_cast<std::size_t>(n) * k * d > (1u << 15))
#endif
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int bi = 0;
      for (int c = 0; c < k; ++c) {
        const double dd = sq_dist(pts.row(i), centers.row(c), d);
        if (dd < best) {
          best = dd;
          bi = c;
        }
      }
      if (res.assign[static_cast<std::size_t>(i)] != bi) {
        res.assign[static_cast<std::size_t>(i)] = bi;
        changed = true;
      }
    }
    if (!changed) break;
    // Serial update keeps the reduction order fixed.
    centers = Tensor(k, d);
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      const int c = res.assign[static_cast<std::size_t>(i)];
      ++count[static_cast<std::size_t>(c)];
      kern::serial::axpy(static_cast<std::size_t>(d), pts.row(i), 1.0, centers.row(c));
    }
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] == 0) {
        // Re-seed an empty cluster at the point farthest from its center.
        double worst = -1.0;
        int wi = 0;
        for (int i = 0; i < n; ++i) {
          const double dd =
              sq_dist(pts.row(i), centers.row(res.assign[static_cast<std::size_t>(i)]), d);
          if (dd > worst) {
            worst = dd;
            wi = i;
          }
        }
        std::copy_n(pts.row(wi), d, centers.row(c));
      } else {
        const double inv = 1.0 / count[static_cast<std::size_t>(c)];
        for (int j = 0; j < d; ++j) centers.at(c, j) *= inv;
      }
    }
  }
  res.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    res.inertia += sq_dist(pts.row(i), centers.row(res.assign[static_cast<std::size_t>(i)]), d);
  res.centers = std::move(centers);
  return res;
}

double calinski_harabasz(const Tensor& pts, const KmeansResult& km, int k) {
  const int n = pts.rows, d = pts.cols;
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += pts.at(i, j);
  for (double& m : mean) m /= n;
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (int a : km.assign) ++count[static_cast<std::size_t>(a)];
  double trace_b = 0.0;
  for (int c = 0; c < k; ++c) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double t = km.centers.at(c, j) - mean[static_cast<std::size_t>(j)];
      s += t * t;
    }
    trace_b += count[static_cast<std::size_t>(c)] * s;
  }
  const double trace_w = km.inertia;
  if (trace_w == 0.0) return std::numeric_limits<double>::infinity();
  return (trace_b / (k - 1)) / (trace_w / (n - k));
}

}  // namespace

MetricsReport clustering_analysis(const Tensor& points, const std::vector<int>& k_values,
                                  std::uint64_t seed) {
  if (k_values.empty()) throw ConfigError("clustering: need at least one k");
  MetricsReport report;
  Rng rng = substream(seed, "kmeans");
  for (int k : k_values) {
    if (k < 2) throw ConfigError("clustering: k must be >= 2");
    if (k >= points.rows)
      throw ConfigError("clustering: k=" + std::to_string(k) + " needs more than " +
                        std::to_string(points.rows) + " points");
    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 10; ++restart) {
      KmeansResult r = kmeans_once(points, k, rng);
      if (r.inertia < best.inertia) best = std::move(r);
    }
    report.set("CHI@" + std::to_string(k), calinski_harabasz(points, best, k));
  }
  return report;
}

// ---------------------------------------------------------------------------
// pair-score dump
// ---------------------------------------------------------------------------

std::vector<PairScoreRow> dump_pair_scores(const TrainedModel& model,
                                           const BipartiteGraph& train_graph,
                                           const std::vector<Edge>& pairs) {
  const PairScorer scorer(model.u_emb, model.v_emb, model.store, model.cfg.leaky_slope);
  std::vector<PairScoreRow> rows(pairs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4) num_threads(kern::max_threads())
#endif
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [u, v] = pairs[i];
    rows[i] = {u, v, bfs_distance(train_graph, u, v), scorer.score(u, v)};
  }
  return rows;
}

}  // namespace bigi
