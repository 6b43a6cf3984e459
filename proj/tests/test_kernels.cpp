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

#include <random>
#include <vector>

#include "bigi/kernels.hpp"
#include "bigi/synth.hpp"

using namespace bigi;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> out(n);
  for (double& x : out) x = u(rng);
  return out;
}

// Plain triple loop, the oracle every gemm variant is checked against.
void gemm_oracle(int m, int k, int n, const std::vector<double>& A, const std::vector<double>& B,
                 std::vector<double>& C) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += A[i * k + p] * B[p * n + j];
      C[i * n + j] = s;
    }
}

}  // namespace

TEST_CASE("gemm variants match the naive oracle") {
  Rng rng(1);
  for (auto [m, k, n] : {std::tuple{1, 1, 1}, {3, 5, 7}, {17, 8, 9}, {33, 64, 40}}) {
    auto A = random_vec(static_cast<std::size_t>(m) * k, rng);
    auto B = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> want(static_cast<std::size_t>(m) * n), got(want.size());
    gemm_oracle(m, k, n, A, B, want);

    kern::serial::gemm_nn(m, k, n, A.data(), B.data(), got.data(), false);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]));

    // B^T stored as n x k
    std::vector<double> Bt(B.size());
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j) Bt[j * k + p] = B[p * n + j];
    kern::serial::gemm_nt(m, k, n, A.data(), Bt.data(), got.data(), false);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]));

    // A^T stored as k x m
    std::vector<double> At(A.size());
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) At[p * m + i] = A[i * k + p];
    kern::serial::gemm_tn(m, k, n, At.data(), B.data(), got.data(), false);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]));
  }
}

TEST_CASE("gemm accumulate adds on top of existing output") {
  Rng rng(2);
  const int m = 4, k = 6, n = 5;
  auto A = random_vec(m * k, rng);
  auto B = random_vec(k * n, rng);
  std::vector<double> base(m * n, 0.5), want(m * n);
  gemm_oracle(m, k, n, A, B, want);
  auto got = base;
  kern::serial::gemm_nn(m, k, n, A.data(), B.data(), got.data(), true);
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(got[i] == doctest::Approx(want[i] + 0.5));
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(3);
  kern::set_max_threads(4);

  SUBCASE("gemm") {
    const int m = 513, k = 64, n = 48;  // over the parallel threshold
    auto A = random_vec(static_cast<std::size_t>(m) * k, rng);
    auto B = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> s(static_cast<std::size_t>(m) * n), p(s.size());
    kern::serial::gemm_nn(m, k, n, A.data(), B.data(), s.data(), false);
    kern::gemm_nn(m, k, n, A.data(), B.data(), p.data(), false);
    CHECK(s == p);
    std::vector<double> At(A.size());
    for (int i = 0; i < m; ++i)
      for (int q = 0; q < k; ++q) At[q * m + i] = A[i * k + q];
    std::vector<double> s2(s.size()), p2(s.size());
    kern::serial::gemm_tn(m, k, n, At.data(), B.data(), s2.data(), false);
    kern::gemm_tn(m, k, n, At.data(), B.data(), p2.data(), false);
    CHECK(s2 == p2);
  }

  SUBCASE("neighbor_mean forward and backward") {
    SynthSpec spec;
    spec.num_u = 300;
    spec.num_v = 120;
    spec.num_edges = 3000;
    BipartiteGraph g(spec.num_u, spec.num_v, synth_edges(spec, 5));
    const int d = 32;
    auto X = random_vec(static_cast<std::size_t>(spec.num_u) * d, rng);
    std::vector<double> Ys(static_cast<std::size_t>(spec.num_v) * d), Yp(Ys.size());
    const CsrView fwd = g.v_adj(), rev = g.u_adj();
    kern::serial::neighbor_mean(fwd.n, d, fwd.off, fwd.idx, X.data(), Ys.data());
    kern::neighbor_mean(fwd.n, d, fwd.off, fwd.idx, X.data(), Yp.data());
    CHECK(Ys == Yp);

    auto gY = random_vec(Ys.size(), rng);
    std::vector<double> gXs(X.size(), 0.0), gXp(X.size(), 0.0);
    kern::serial::neighbor_mean_backward(rev.n, d, rev.off, rev.idx, fwd.off, gY.data(),
                                         gXs.data());
    kern::neighbor_mean_backward(rev.n, d, rev.off, rev.idx, fwd.off, gY.data(), gXp.data());
    CHECK(gXs == gXp);
  }

  SUBCASE("elementwise and softmax") {
    const std::size_t n = 1 << 17;
    auto x = random_vec(n, rng);
    std::vector<double> s(n), p(n);
    kern::serial::sigmoid(n, x.data(), s.data());
    kern::sigmoid(n, x.data(), p.data());
    CHECK(s == p);
    kern::serial::leaky_relu(n, x.data(), 0.01, s.data());
    kern::leaky_relu(n, x.data(), 0.01, p.data());
    CHECK(s == p);
    const int rows = 512, cols = 257;
    auto m = random_vec(static_cast<std::size_t>(rows) * cols, rng);
    std::vector<double> ss(m.size()), pp(m.size());
    kern::serial::softmax_rows(rows, cols, m.data(), ss.data());
    kern::softmax_rows(rows, cols, m.data(), pp.data());
    CHECK(ss == pp);
  }

  kern::set_max_threads(0);
}

TEST_CASE("neighbor_mean of an empty list is the zero row") {
  // Node 1 has no neighbors.
  const std::vector<std::int64_t> off{0, 2, 2};
  const std::vector<std::int32_t> idx{0, 1};
  const std::vector<double> X{1.0, 2.0, 3.0, 4.0};
  std::vector<double> Y(4, 99.0);
  kern::serial::neighbor_mean(2, 2, off.data(), idx.data(), X.data(), Y.data());
  CHECK(Y[0] == doctest::Approx(2.0));
  CHECK(Y[1] == doctest::Approx(3.0));
  CHECK(Y[2] == 0.0);
  CHECK(Y[3] == 0.0);
}
