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

#include <functional>
#include <vector>

#include "bigi/param_store.hpp"
#include "bigi/rng.hpp"
#include "bigi/tensor.hpp"

namespace bigi {

// Adjacency view consumed by the neighbor_mean op: n lists stored CSR-style.
struct CsrView {
  const std::int64_t* off = nullptr;
  const std::int32_t* idx = nullptr;
  int n = 0;
};

// Handle into a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Forward calls record one node per op; backward() walks
// the nodes in reverse creation order (which is a topological order by
// construction) and accumulates gradients, finally flushing leaf gradients
// into their bound ParamStore entries.
//
// A tape is single-threaded by contract; the heavy ops parallelize
// internally through the kernels layer.
class Tape {
 public:
  explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

  // Leaves.
  Var constant(Tensor t);
  Var param(ParamStore& store, const std::string& name);

  // Linear algebra. Shapes follow the kernel contracts.
  Var matmul_nn(Var a, Var b);
  Var matmul_nt(Var a, Var b);
  Var matmul_tn(Var a, Var b);
  // x (1 x n) * W (n x m) * y^T (y is 1 x m) -> 1 x 1
  Var bilinear_vec(Var x, Var w, Var y);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var affine(Var a, double scale, double shift);

  Var concat_cols(Var a, Var b);
  Var gather_rows(Var a, std::vector<std::int32_t> idx);
  // Per-destination mean over rows of `a`; `fwd` lists source rows per
  // destination, `rev` is the transposed adjacency (needed for backward).
  Var neighbor_mean(Var a, CsrView fwd, CsrView rev);

  Var mean_rows(Var a);
  Var sum_all(Var a);
  Var mean_all(Var a);
  Var stack_scalars(const std::vector<Var>& xs);

  // Fused per-segment attention (one row per segment):
  //   out[t] = sigmoid(sum_j alpha_tj * emb[nbr_j] + center_emb[centers[t]])
  // with alpha the softmax of dot(proj[nbr], center_proj[center]) within the
  // segment, or uniform weights when `uniform` (proj vars may be invalid
  // then). Batches what would otherwise be ~20 small nodes per segment.
  Var segment_attention(Var emb, Var proj, Var center_emb, Var center_proj,
                        std::vector<std::int32_t> centers, std::vector<std::int64_t> seg_off,
                        std::vector<std::int32_t> nbr_idx, bool uniform);

  Var leaky_relu(Var a, double slope);
  Var relu(Var a) { return leaky_relu(a, 0.0); }
  Var sigmoid(Var a);
  Var softmax_rows(Var a);
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);
  // Inverted dropout: keeps entries with prob 1-rate, scaling by 1/(1-rate).
  Var dropout(Var a, double rate, Rng& rng);

  const Tensor& value(Var v) const { return nodes_[v.id].val; }
  // Gradient of a node; zero-shaped until backward touches it.
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  // Accumulates d(loss)/d(theta) into every bound parameter's grad field.
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    bool needs_grad = false;
    const char* op = "leaf";
    std::function<void(Tape&, const Node&)> back;
  };

  Var push(Tensor val, bool needs_grad, const char* op,
           std::function<void(Tape&, const Node&)> back);
  Tensor& grad_buf(int id);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  void check_val(const Tensor& t, const char* op) const;

  std::vector<Node> nodes_;
  std::vector<std::pair<int, ParamEntry*>> bound_;
  bool check_finite_;
};

}  // namespace bigi
