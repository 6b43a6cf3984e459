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

#include "bigi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace bigi::kern {

namespace {

// Tape tensors are allocated and freed once per minibatch; with glibc's
// default mmap threshold every multi-MB buffer becomes an mmap/munmap pair
// plus kernel page zeroing. Keeping large blocks on the heap removes that
// churn.
[[maybe_unused]] const bool g_malloc_tuned = [] {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
  return true;
}();

int g_max_threads = 0;

// Below this many fused multiply-adds the OpenMP fork/join overhead wins.
constexpr std::size_t kParallelMinWork = 1 << 15;

int effective_threads() {
#ifdef _OPENMP
  if (g_max_threads > 0) return std::min(g_max_threads, omp_get_max_threads());
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Inner panel: c[j0..j0+NB) accumulated in registers across the whole k loop.
// B rows are streamed; for the d x d weight shapes used here B stays in L1.
template <int NB>
inline void gemm_nn_row_panel(int k, int n, const double* a, const double* B, double* c, int j0) {
  double acc[NB];
  for (int t = 0; t < NB; ++t) acc[t] = c[j0 + t];
  for (int p = 0; p < k; ++p) {
    const double av = a[p];
    const double* b = B + static_cast<std::size_t>(p) * n + j0;
    for (int t = 0; t < NB; ++t) acc[t] += av * b[t];
  }
  for (int t = 0; t < NB; ++t) c[j0 + t] = acc[t];
}

inline void gemm_nn_row(int k, int n, const double* a, const double* B, double* c) {
  int j = 0;
  for (; j + 8 <= n; j += 8) gemm_nn_row_panel<8>(k, n, a, B, c, j);
  for (; j + 4 <= n; j += 4) gemm_nn_row_panel<4>(k, n, a, B, c, j);
  for (; j < n; ++j) {
    double s = c[j];
    for (int p = 0; p < k; ++p) s += a[p] * B[static_cast<std::size_t>(p) * n + j];
    c[j] = s;
  }
}

inline void zero_or_keep(std::size_t n, double* C, bool acc) {
  if (!acc) std::fill(C, C + n, 0.0);
}

}  // namespace

void set_max_threads(int n) { g_max_threads = n < 0 ? 0 : n; }

int max_threads() { return effective_threads(); }

bool wants_parallel(std::size_t work) {
  return effective_threads() > 1 && work >= kParallelMinWork;
}

// ---------------------------------------------------------------------------
// serial reference
// ---------------------------------------------------------------------------

namespace serial {

void gemm_nn(int m, int k, int n, const double* A, const double* B, double* C, bool acc) {
  zero_or_keep(static_cast<std::size_t>(m) * n, C, acc);
  for (int i = 0; i < m; ++i)
    gemm_nn_row(k, n, A + static_cast<std::size_t>(i) * k, B,
                C + static_cast<std::size_t>(i) * n);
}

void gemm_nt(int m, int k, int n, const double* A, const double* B, double* C, bool acc) {
  // Transpose B once so the inner loop runs the register-panel kernel.
  std::vector<double> bt(static_cast<std::size_t>(k) * n);
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < k; ++p)
      bt[static_cast<std::size_t>(p) * n + j] = B[static_cast<std::size_t>(j) * k + p];
  gemm_nn(m, k, n, A, bt.data(), C, acc);
}

void gemm_tn(int m, int k, int n, const double* A, const double* B, double* C, bool acc) {
  zero_or_keep(static_cast<std::size_t>(m) * n, C, acc);
  for (int p = 0; p < k; ++p) {
    const double* a = A + static_cast<std::size_t>(p) * m;
    const double* b = B + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double av = a[i];
      double* c = C + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

void neighbor_mean(int n_dst, int d, const std::int64_t* off, const std::int32_t* idx,
                   const double* X, double* Y) {
  for (int v = 0; v < n_dst; ++v) {
    double* y = Y + static_cast<std::size_t>(v) * d;
    const std::int64_t b = off[v], e = off[v + 1];
    std::fill(y, y + d, 0.0);
    if (e == b) continue;
    for (std::int64_t t = b; t < e; ++t) {
      const double* x = X + static_cast<std::size_t>(idx[t]) * d;
      for (int j = 0; j < d; ++j) y[j] += x[j];
    }
    const double inv = 1.0 / static_cast<double>(e - b);
    for (int j = 0; j < d; ++j) y[j] *= inv;
  }
}

void neighbor_mean_backward(int n_src, int d, const std::int64_t* roff, const std::int32_t* ridx,
                            const std::int64_t* deg_off, const double* gY, double* gX) {
  for (int u = 0; u < n_src; ++u) {
    double* g = gX + static_cast<std::size_t>(u) * d;
    for (std::int64_t t = roff[u]; t < roff[u + 1]; ++t) {
      const std::int32_t v = ridx[t];
      const double inv = 1.0 / static_cast<double>(deg_off[v + 1] - deg_off[v]);
      const double* gy = gY + static_cast<std::size_t>(v) * d;
      for (int j = 0; j < d; ++j) g[j] += inv * gy[j];
    }
  }
}

void gather_rows(int n_out, int d, const std::int32_t* idx, const double* X, double* Y) {
  for (int t = 0; t < n_out; ++t)
    std::copy_n(X + static_cast<std::size_t>(idx[t]) * d, d, Y + static_cast<std::size_t>(t) * d);
}

void affine(std::size_t n, const double* x, double a, double b, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}

void add(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(std::size_t n, const double* x, double scale, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] += scale * x[i];
}

void leaky_relu(std::size_t n, const double* x, double slope, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::size_t n, const double* x, const double* gy, double slope,
                         double* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * (x[i] > 0.0 ? 1.0 : slope);
}

void sigmoid(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_backward(std::size_t n, const double* y, const double* gy, double* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
}

void softmax_rows(int rows, int cols, const double* x, double* y) {
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * cols;
    double* yi = y + static_cast<std::size_t>(i) * cols;
    double mx = xi[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, xi[j]);
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      sum += yi[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < cols; ++j) yi[j] *= inv;
  }
}

void softmax_rows_backward(int rows, int cols, const double* y, const double* gy, double* gx) {
  for (int i = 0; i < rows; ++i) {
    const double* yi = y + static_cast<std::size_t>(i) * cols;
    const double* gi = gy + static_cast<std::size_t>(i) * cols;
    double* go = gx + static_cast<std::size_t>(i) * cols;
    double dot = 0.0;
    for (int j = 0; j < cols; ++j) dot += gi[j] * yi[j];
    for (int j = 0; j < cols; ++j) go[j] += (gi[j] - dot) * yi[j];
  }
}

void segment_attention(const SegmentedIndex& seg, int d, const double* emb, const double* proj,
                       const double* center_emb, const double* center_proj, bool uniform,
                       double* alpha_flat, double* out) {
  for (int t = 0; t < seg.n_segments; ++t) {
    const std::int64_t b = seg.seg_off[t], e = seg.seg_off[t + 1];
    double* alpha = alpha_flat + b;
    const std::int32_t c = seg.centers[t];
    if (uniform) {
      const double w = 1.0 / static_cast<double>(e - b);
      for (std::int64_t j = 0; j < e - b; ++j) alpha[j] = w;
    } else {
      const double* q = center_proj + static_cast<std::size_t>(c) * d;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::int64_t j = 0; j < e - b; ++j) {
        const double* p = proj + static_cast<std::size_t>(seg.nbr_idx[b + j]) * d;
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += p[k] * q[k];
        alpha[j] = dot;
        mx = std::max(mx, dot);
      }
      double sum = 0.0;
      for (std::int64_t j = 0; j < e - b; ++j) {
        alpha[j] = std::exp(alpha[j] - mx);
        sum += alpha[j];
      }
      const double inv = 1.0 / sum;
      for (std::int64_t j = 0; j < e - b; ++j) alpha[j] *= inv;
    }
    double* o = out + static_cast<std::size_t>(t) * d;
    std::copy_n(center_emb + static_cast<std::size_t>(c) * d, d, o);
    for (std::int64_t j = 0; j < e - b; ++j) {
      const double* x = emb + static_cast<std::size_t>(seg.nbr_idx[b + j]) * d;
      const double a = alpha[j];
      for (int k = 0; k < d; ++k) o[k] += a * x[k];
    }
    for (int k = 0; k < d; ++k) o[k] = 1.0 / (1.0 + std::exp(-o[k]));
  }
}

void segment_attention_backward(const SegmentedIndex& seg, int d, const double* emb,
                                const double* proj, const double* center_proj, bool uniform,
                                const double* alpha_flat, const double* out, const double* gOut,
                                double* gEmb, double* gProj, double* gCenterEmb,
                                double* gCenterProj) {
  std::vector<double> gz(static_cast<std::size_t>(d));
  std::vector<double> galpha;
  for (int t = 0; t < seg.n_segments; ++t) {
    const std::int64_t b = seg.seg_off[t], e = seg.seg_off[t + 1];
    const double* alpha = alpha_flat + b;
    const std::int32_t c = seg.centers[t];
    const double* y = out + static_cast<std::size_t>(t) * d;
    const double* gy = gOut + static_cast<std::size_t>(t) * d;
    for (int k = 0; k < d; ++k) gz[static_cast<std::size_t>(k)] = gy[k] * y[k] * (1.0 - y[k]);

    double* gce = gCenterEmb + static_cast<std::size_t>(c) * d;
    for (int k = 0; k < d; ++k) gce[k] += gz[static_cast<std::size_t>(k)];
    galpha.assign(static_cast<std::size_t>(e - b), 0.0);
    for (std::int64_t j = 0; j < e - b; ++j) {
      const std::int32_t n = seg.nbr_idx[b + j];
      const double* x = emb + static_cast<std::size_t>(n) * d;
      double* gx = gEmb + static_cast<std::size_t>(n) * d;
      const double a = alpha[j];
      double dot = 0.0;
      for (int k = 0; k < d; ++k) {
        gx[k] += a * gz[static_cast<std::size_t>(k)];
        dot += x[k] * gz[static_cast<std::size_t>(k)];
      }
      galpha[static_cast<std::size_t>(j)] = dot;
    }
    if (uniform) continue;  // weights are constants there

    double mix = 0.0;
    for (std::int64_t j = 0; j < e - b; ++j)
      mix += galpha[static_cast<std::size_t>(j)] * alpha[j];
    const double* q = center_proj + static_cast<std::size_t>(c) * d;
    double* gq = gCenterProj + static_cast<std::size_t>(c) * d;
    for (std::int64_t j = 0; j < e - b; ++j) {
      const double glogit = (galpha[static_cast<std::size_t>(j)] - mix) * alpha[j];
      const std::int32_t n = seg.nbr_idx[b + j];
      const double* p = proj + static_cast<std::size_t>(n) * d;
      double* gp = gProj + static_cast<std::size_t>(n) * d;
      for (int k = 0; k < d; ++k) {
        gp[k] += glogit * q[k];
        gq[k] += glogit * p[k];
      }
    }
  }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// dispatching front-ends
// ---------------------------------------------------------------------------

void gemm_nn(int m, int k, int n, const double* A, const double* B, double* C, bool acc) {
  const std::size_t work = static_cast<std::size_t>(m) * k * n;
  if (!wants_parallel(work) || m < 2) {
    serial::gemm_nn(m, k, n, A, B, C, acc);
    return;
  }
  zero_or_keep(static_cast<std::size_t>(m) * n, C, acc);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
  for (int i = 0; i < m; ++i)
    gemm_nn_row(k, n, A + static_cast<std::size_t>(i) * k, B,
                C + static_cast<std::size_t>(i) * n);
}

void gemm_nt(int m, int k, int n, const double* A, const double* B, double* C, bool acc) {
  std::vector<double> bt(static_cast<std::size_t>(k) * n);
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < k; ++p)
      bt[static_cast<std::size_t>(p) * n + j] = B[static_cast<std::size_t>(j) * k + p];
  gemm_nn(m, k, n, A, bt.data(), C, acc);
}

void gemm_tn(int m, int k, int n, const double* A, const double* B, double* C, bool acc) {
  const std::size_t work = static_cast<std::size_t>(m) * k * n;
  if (!wants_parallel(work) || m < 2) {
    serial::gemm_tn(m, k, n, A, B, C, acc);
    return;
  }
  // Parallel over output rows: each thread reduces the full k extent for its
  // own rows, so the accumulation order matches the serial reference.
  zero_or_keep(static_cast<std::size_t>(m) * n, C, acc);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
  for (int i = 0; i < m; ++i) {
    double* c = C + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = A[static_cast<std::size_t>(p) * m + i];
      const double* b = B + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

void neighbor_mean(int n_dst, int d, const std::int64_t* off, const std::int32_t* idx,
                   const double* X, double* Y) {
  const std::size_t work = static_cast<std::size_t>(off[n_dst]) * d;
  if (!wants_parallel(work)) {
    serial::neighbor_mean(n_dst, d, off, idx, X, Y);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
  for (int v = 0; v < n_dst; ++v)
    serial::neighbor_mean(1, d, off + v, idx, X, Y + static_cast<std::size_t>(v) * d);
}

void neighbor_mean_backward(int n_src, int d, const std::int64_t* roff, const std::int32_t* ridx,
                            const std::int64_t* deg_off, const double* gY, double* gX) {
  const std::size_t work = static_cast<std::size_t>(roff[n_src]) * d;
  if (!wants_parallel(work)) {
    serial::neighbor_mean_backward(n_src, d, roff, ridx, deg_off, gY, gX);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
  for (int u = 0; u < n_src; ++u)
    serial::neighbor_mean_backward(1, d, roff + u, ridx, deg_off, gY,
                                   gX + static_cast<std::size_t>(u) * d);
}

void gather_rows(int n_out, int d, const std::int32_t* idx, const double* X, double* Y) {
  const std::size_t work = static_cast<std::size_t>(n_out) * d;
  if (!wants_parallel(work)) {
    serial::gather_rows(n_out, d, idx, X, Y);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
  for (int t = 0; t < n_out; ++t)
    std::copy_n(X + static_cast<std::size_t>(idx[t]) * d, d, Y + static_cast<std::size_t>(t) * d);
}

namespace {

template <class Fn>
void elementwise_chunks(std::size_t n, Fn fn) {
#ifdef _OPENMP
  const int nt = effective_threads();
  const std::size_t chunk = (n + nt - 1) / nt;
#pragma omp parallel num_threads(nt)
  {
    const std::size_t b = static_cast<std::size_t>(omp_get_thread_num()) * chunk;
    if (b < n) fn(b, std::min(n, b + chunk));
  }
#else
  fn(0, n);
#endif
}

}  // namespace

void affine(std::size_t n, const double* x, double a, double b, double* y) {
  if (!wants_parallel(n)) return serial::affine(n, x, a, b, y);
  elementwise_chunks(n, [&](std::size_t lo, std::size_t hi) {
    serial::affine(hi - lo, x + lo, a, b, y + lo);
  });
}

void add(std::size_t n, const double* x, const double* y, double* out) {
  if (!wants_parallel(n)) return serial::add(n, x, y, out);
  elementwise_chunks(n, [&](std::size_t lo, std::size_t hi) {
    serial::add(hi - lo, x + lo, y + lo, out + lo);
  });
}

void mul(std::size_t n, const double* x, const double* y, double* out) {
  if (!wants_parallel(n)) return serial::mul(n, x, y, out);
  elementwise_chunks(n, [&](std::size_t lo, std::size_t hi) {
    serial::mul(hi - lo, x + lo, y + lo, out + lo);
  });
}

void axpy(std::size_t n, const double* x, double scale, double* out) {
  if (!wants_parallel(n)) return serial::axpy(n, x, scale, out);
  elementwise_chunks(n, [&](std::size_t lo, std::size_t hi) {
    serial::axpy(hi - lo, x + lo, scale, out + lo);
  });
}

void leaky_relu(std::size_t n, const double* x, double slope, double* y) {
  if (!wants_parallel(n)) return serial::leaky_relu(n, x, slope, y);
  elementwise_chunks(n, [&](std::size_t lo, std::size_t hi) {
    serial::leaky_relu(hi - lo, x + lo, slope, y + lo);
  });
}

void leaky_relu_backward(std::size_t n, const double* x, const double* gy, double slope,
                         double* gx) {
  if (!wants_parallel(n)) return serial::leaky_relu_backward(n, x, gy, slope, gx);
  elementwise_chunks(n, [&](std::size_t lo, std::size_t hi) {
    serial::leaky_relu_backward(hi - lo, x + lo, gy + lo, slope, gx + lo);
  });
}

void sigmoid(std::size_t n, const double* x, double* y) {
  if (!wants_parallel(n)) return serial::sigmoid(n, x, y);
  elementwise_chunks(n, [&](std::size_t lo, std::size_t hi) {
    serial::sigmoid(hi - lo, x + lo, y + lo);
  });
}

void sigmoid_backward(std::size_t n, const double* y, const double* gy, double* gx) {
  if (!wants_parallel(n)) return serial::sigmoid_backward(n, y, gy, gx);
  elementwise_chunks(n, [&](std::size_t lo, std::size_t hi) {
    serial::sigmoid_backward(hi - lo, y + lo, gy + lo, gx + lo);
  });
}

void softmax_rows(int rows, int cols, const double* x, double* y) {
  const std::size_t work = static_cast<std::size_t>(rows) * cols * 4;
  if (!wants_parallel(work)) {
    serial::softmax_rows(rows, cols, x, y);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
  for (int i = 0; i < rows; ++i)
    serial::softmax_rows(1, cols, x + static_cast<std::size_t>(i) * cols,
                         y + static_cast<std::size_t>(i) * cols);
}

void softmax_rows_backward(int rows, int cols, const double* y, const double* gy, double* gx) {
  const std::size_t work = static_cast<std::size_t>(rows) * cols * 4;
  if (!wants_parallel(work)) {
    serial::softmax_rows_backward(rows, cols, y, gy, gx);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
  for (int i = 0; i < rows; ++i)
    serial::softmax_rows_backward(1, cols, y + static_cast<std::size_t>(i) * cols,
                                  gy + static_cast<std::size_t>(i) * cols,
                                  gx + static_cast<std::size_t>(i) * cols);
}

void segment_attention(const serial::SegmentedIndex& seg, int d, const double* emb,
                       const double* proj, const double* center_emb, const double* center_proj,
                       bool uniform, double* alpha_flat, double* out) {
  const std::size_t work = static_cast<std::size_t>(seg.seg_off[seg.n_segments]) * d * 2;
  if (!wants_parallel(work)) {
    serial::segment_attention(seg, d, emb, proj, center_emb, center_proj, uniform, alpha_flat,
                              out);
    return;
  }
  // Segments write disjoint output/alpha ranges, so per-segment dispatch is
  // race-free and bit-identical to the serial order.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
  for (int t = 0; t < seg.n_segments; ++t) {
    serial::SegmentedIndex one{seg.centers + t, seg.seg_off + t, seg.nbr_idx, 1};
    serial::segment_attention(one, d, emb, proj, center_emb, center_proj, uniform, alpha_flat,
                              out + static_cast<std::size_t>(t) * d);
  }
}

}  // namespace bigi::kern
