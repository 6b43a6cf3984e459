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

// Compares the serial reference kernels against the OpenMP variants on
// model-shaped workloads and reports the speedup. Results are bit-identical
// by construction; the harness asserts that too.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "bigi/encoder.hpp"
#include "bigi/graph.hpp"
#include "bigi/kernels.hpp"
#include "bigi/synth.hpp"
#include "bigi/trainer.hpp"

using namespace bigi;

namespace {

template <class Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e100;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              identical ? "bit-identical" : "MISMATCH");
}

template <class VecA, class VecB>
bool same(const VecA& a, const VecB& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--threads") == 0) threads = std::atoi(argv[i + 1]);
  kern::set_max_threads(threads);
  std::printf("threads: %d\n\n", kern::max_threads());

  Rng rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  {  // gemm_nn at encoder shapes
    const int m = 8192, k = 64, n = 64;
    std::vector<double> A(static_cast<std::size_t>(m) * k), B(static_cast<std::size_t>(k) * n),
        C1(static_cast<std::size_t>(m) * n), C2(C1.size());
    for (double& x : A) x = u(rng);
    for (double& x : B) x = u(rng);
    kern::set_max_threads(1);
    const double ts = time_best_of(5, [&] {
      kern::serial::gemm_nn(m, k, n, A.data(), B.data(), C1.data(), false);
    });
    kern::set_max_threads(threads);
    const double tp =
        time_best_of(5, [&] { kern::gemm_nn(m, k, n, A.data(), B.data(), C2.data(), false); });
    report("gemm_nn 8192x64x64", ts, tp, same(C1, C2));
  }

  {  // neighbor_mean on a synthetic graph
    SynthSpec spec;
    spec.num_u = 20000;
    spec.num_v = 4000;
    spec.num_edges = 120000;
    const BipartiteGraph g(spec.num_u, spec.num_v, synth_edges(spec, 7));
    const int d = 64;
    std::vector<double> X(static_cast<std::size_t>(spec.num_u) * d),
        Y1(static_cast<std::size_t>(spec.num_v) * d), Y2(Y1.size());
    for (double& x : X) x = u(rng);
    const CsrView adj = g.v_adj();
    kern::set_max_threads(1);
    const double ts = time_best_of(5, [&] {
      kern::serial::neighbor_mean(adj.n, d, adj.off, adj.idx, X.data(), Y1.data());
    });
    kern::set_max_threads(threads);
    const double tp = time_best_of(
        5, [&] { kern::neighbor_mean(adj.n, d, adj.off, adj.idx, X.data(), Y2.data()); });
    report("neighbor_mean 120k edges", ts, tp, same(Y1, Y2));
  }

  {  // one full training epoch, serial vs parallel kernels
    SynthSpec spec;
    spec.num_u = 2000;
    spec.num_v = 800;
    spec.num_edges = 12000;
    const BipartiteGraph g(spec.num_u, spec.num_v, synth_edges(spec, 11));
    EdgeSplit split = split_train_test(g, 0.7, 5);
    TrainConfig cfg;
    cfg.dim = 64;
    cfg.epochs = 1;
    cfg.batch_size = 512;
    cfg.seed = 3;

    kern::set_max_threads(1);
    std::vector<double> es;
    TrainOptions opts;
    opts.epoch_seconds = &es;
    TrainedModel m1 = train(split, cfg, opts);
    kern::set_max_threads(threads);
    std::vector<double> ep;
    opts.epoch_seconds = &ep;
    TrainedModel m2 = train(split, cfg, opts);
    report("train epoch 8.4k edges d=64", es[0], ep[0],
           same(m1.u_emb.data, m2.u_emb.data) && same(m1.v_emb.data, m2.v_emb.data));
  }

  return 0;
}
