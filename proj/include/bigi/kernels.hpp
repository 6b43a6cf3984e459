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
#include <cstddef>

// Dense and sparse-aggregation kernels. Every kernel comes in two flavours:
// a plain serial reference under kern::serial, and a dispatching front-end
// under kern:: that runs the OpenMP variant when enough work is available.
//
// The OpenMP variants parallelize only over independent output elements
// (rows of C, destination nodes, ...), never over reductions, so results are
// bit-identical to the serial reference for any thread count.

namespace bigi::kern {

// Global worker cap. 0 = library default (all hardware threads).
void set_max_threads(int n);
int max_threads();

// True when the dispatching front-ends would run the OpenMP variant for a
// loop body of `work` fused multiply-adds (or comparable cost).
bool wants_parallel(std::size_t work);

namespace serial {

// C[m x n] = A[m x k] * B[k x n]   (+= when acc)
void gemm_nn(int m, int k, int n, const double* A, const double* B, double* C, bool acc);
// C[m x n] = A[m x k] * B^T, B stored as [n x k]
void gemm_nt(int m, int k, int n, const double* A, const double* B, double* C, bool acc);
// C[m x n] = A^T * B, A stored as [k x m], B as [k x n]
void gemm_tn(int m, int k, int n, const double* A, const double* B, double* C, bool acc);

// Y[v] = mean of X rows listed in csr[off[v]..off[v+1]); empty list -> zero row.
void neighbor_mean(int n_dst, int d, const std::int64_t* off, const std::int32_t* idx,
                   const double* X, double* Y);
// Reverse-mode mate of neighbor_mean. For each source u, accumulates
// gX[u] += sum over destinations v adjacent to u of gY[v] / deg(v),
// where roff/ridx is the reverse adjacency and deg the forward list lengths.
void neighbor_mean_backward(int n_src, int d, const std::int64_t* roff, const std::int32_t* ridx,
                            const std::int64_t* deg_off, const double* gY, double* gX);

// Y[t] = X[idx[t]] (row copy).
void gather_rows(int n_out, int d, const std::int32_t* idx, const double* X, double* Y);

// y = a*x + b elementwise (covers negate / shift / scale).
void affine(std::size_t n, const double* x, double a, double b, double* y);
void add(std::size_t n, const double* x, const double* y, double* out);
void mul(std::size_t n, const double* x, const double* y, double* out);
// out += x * scale
void axpy(std::size_t n, const double* x, double scale, double* out);

void leaky_relu(std::size_t n, const double* x, double slope, double* y);
// gx += gy * dy/dx evaluated from the forward input x.
void leaky_relu_backward(std::size_t n, const double* x, const double* gy, double slope,
                         double* gx);
void sigmoid(std::size_t n, const double* x, double* y);
// gx += gy * y * (1 - y), y the forward output.
void sigmoid_backward(std::size_t n, const double* y, const double* gy, double* gx);

// Row-wise softmax with max subtraction.
void softmax_rows(int rows, int cols, const double* x, double* y);
// gx_row += (gy_row - <gy_row, y_row>) * y_row
void softmax_rows_backward(int rows, int cols, const double* y, const double* gy, double* gx);

// E variable-length neighbor segments, one center row per segment.
struct SegmentedIndex {
  const std::int32_t* centers = nullptr;  // E center rows
  const std::int64_t* seg_off = nullptr;  // E+1 offsets into nbr_idx
  const std::int32_t* nbr_idx = nullptr;  // seg_off[E] neighbor rows
  int n_segments = 0;
};

// Fused attention over all segments:
//   out[t] = sigmoid(sum_j alpha_tj * emb[nbr_j] + center_emb[centers[t]])
//   alpha_t = softmax_j(dot(proj[nbr_j], center_proj[centers[t]])), or the
//             uniform 1/|segment| weights when `uniform`.
// alpha_flat (length seg_off[E]) is filled for the backward pass.
void segment_attention(const SegmentedIndex& seg, int d, const double* emb, const double* proj,
                       const double* center_emb, const double* center_proj, bool uniform,
                       double* alpha_flat, double* out);
// Reverse mode of segment_attention; accumulates into the four gradient
// buffers (pass nullptr for gProj/gCenterProj when uniform). Scatter targets
// collide across segments, so this stays serial.
void segment_attention_backward(const SegmentedIndex& seg, int d, const double* emb,
                                const double* proj, const double* center_proj, bool uniform,
                                const double* alpha_flat, const double* out, const double* gOut,
                                double* gEmb, double* gProj, double* gCenterEmb,
                                double* gCenterProj);

}  // namespace serial

// Dispatching front-ends (same contracts as the serial reference).
void gemm_nn(int m, int k, int n, const double* A, const double* B, double* C, bool acc);
void gemm_nt(int m, int k, int n, const double* A, const double* B, double* C, bool acc);
void gemm_tn(int m, int k, int n, const double* A, const double* B, double* C, bool acc);
void neighbor_mean(int n_dst, int d, const std::int64_t* off, const std::int32_t* idx,
                   const double* X, double* Y);
void neighbor_mean_backward(int n_src, int d, const std::int64_t* roff, const std::int32_t* ridx,
                            const std::int64_t* deg_off, const double* gY, double* gX);
void gather_rows(int n_out, int d, const std::int32_t* idx, const double* X, double* Y);
void affine(std::size_t n, const double* x, double a, double b, double* y);
void add(std::size_t n, const double* x, const double* y, double* out);
void mul(std::size_t n, const double* x, const double* y, double* out);
void axpy(std::size_t n, const double* x, double scale, double* out);
void leaky_relu(std::size_t n, const double* x, double slope, double* y);
void leaky_relu_backward(std::size_t n, const double* x, const double* gy, double slope,
                         double* gx);
void sigmoid(std::size_t n, const double* x, double* y);
void sigmoid_backward(std::size_t n, const double* y, const double* gy, double* gx);
void softmax_rows(int rows, int cols, const double* x, double* y);
void softmax_rows_backward(int rows, int cols, const double* y, const double* gy, double* gx);
void segment_attention(const serial::SegmentedIndex& seg, int d, const double* emb,
                       const double* proj, const double* center_emb, const double* center_proj,
                       bool uniform, double* alpha_flat, double* out);

}  // namespace bigi::kern
