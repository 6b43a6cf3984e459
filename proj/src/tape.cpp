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

#include "bigi/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "bigi/common.hpp"
#include "bigi/kernels.hpp"

namespace bigi {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ConfigError(std::string(op) + ": shape mismatch " + std::to_string(a.rows) + "x" +
                      std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                      std::to_string(b.cols));
}

}  // namespace

void Tape::check_val(const Tensor& t, const char* op) const {
  if (check_finite_ && !t.all_finite())
    throw NumericError(std::string("non-finite value produced by op '") + op + "'");
}

Var Tape::push(Tensor val, bool needs_grad, const char* op,
               std::function<void(Tape&, const Node&)> back) {
  check_val(val, op);
  Node n;
  n.val = std::move(val);
  n.needs_grad = needs_grad;
  n.op = op;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Tensor(n.val.rows, n.val.cols);
  return n.grad;
}

Var Tape::constant(Tensor t) { return push(std::move(t), false, "constant", nullptr); }

Var Tape::param(ParamStore& store, const std::string& name) {
  ParamEntry& e = store.get(name);
  Var v = push(e.value, true, "param", nullptr);
  bound_.emplace_back(v.id, &e);
  return v;
}

Var Tape::matmul_nn(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols != B.rows) throw ConfigError("matmul_nn: inner dims disagree");
  Tensor C = Tensor::uninit(A.rows, B.cols);
  kern::gemm_nn(A.rows, A.cols, B.cols, A.data.data(), B.data.data(), C.data.data(), false);
  const int ia = a.id, ib = b.id;
  return push(std::move(C), needs(a) || needs(b), "matmul_nn",
              [ia, ib](Tape& t, const Node& n) {
                const Tensor& A = t.nodes_[ia].val;
                const Tensor& B = t.nodes_[ib].val;
                if (t.nodes_[ia].needs_grad) {
                  Tensor& gA = t.grad_buf(ia);
                  kern::gemm_nt(n.grad.rows, n.grad.cols, A.cols, n.grad.data.data(),
                                B.data.data(), gA.data.data(), true);
                }
                if (t.nodes_[ib].needs_grad) {
                  Tensor& gB = t.grad_buf(ib);
                  kern::gemm_tn(B.rows, A.rows, B.cols, A.data.data(), n.grad.data.data(),
                                gB.data.data(), true);
                }
              });
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols != B.cols) throw ConfigError("matmul_nt: inner dims disagree");
  Tensor C = Tensor::uninit(A.rows, B.rows);
  kern::gemm_nt(A.rows, A.cols, B.rows, A.data.data(), B.data.data(), C.data.data(), false);
  const int ia = a.id, ib = b.id;
  return push(std::move(C), needs(a) || needs(b), "matmul_nt",
              [ia, ib](Tape& t, const Node& n) {
                const Tensor& A = t.nodes_[ia].val;
                const Tensor& B = t.nodes_[ib].val;
                if (t.nodes_[ia].needs_grad) {
                  Tensor& gA = t.grad_buf(ia);
                  kern::gemm_nn(n.grad.rows, n.grad.cols, B.cols, n.grad.data.data(),
                                B.data.data(), gA.data.data(), true);
                }
                if (t.nodes_[ib].needs_grad) {
                  Tensor& gB = t.grad_buf(ib);
                  kern::gemm_tn(B.rows, A.rows, B.cols, n.grad.data.data(), A.data.data(),
                                gB.data.data(), true);
                }
              });
}

Var Tape::matmul_tn(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rows != B.rows) throw ConfigError("matmul_tn: inner dims disagree");
  Tensor C = Tensor::uninit(A.cols, B.cols);
  kern::gemm_tn(A.cols, A.rows, B.cols, A.data.data(), B.data.data(), C.data.data(), false);
  const int ia = a.id, ib = b.id;
  return push(std::move(C), needs(a) || needs(b), "matmul_tn",
              [ia, ib](Tape& t, const Node& n) {
                const Tensor& A = t.nodes_[ia].val;
                const Tensor& B = t.nodes_[ib].val;
                if (t.nodes_[ia].needs_grad) {
                  Tensor& gA = t.grad_buf(ia);
                  kern::gemm_nt(A.rows, n.grad.cols, A.cols, B.data.data(), n.grad.data.data(),
                                gA.data.data(), true);
                }
                if (t.nodes_[ib].needs_grad) {
                  Tensor& gB = t.grad_buf(ib);
                  kern::gemm_nn(B.rows, A.cols, B.cols, A.data.data(), n.grad.data.data(),
                                gB.data.data(), true);
                }
              });
}

Var Tape::bilinear_vec(Var x, Var w, Var y) { return matmul_nt(matmul_nn(x, w), y); }

Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_same_shape(A, B, "add");
  Tensor C = Tensor::uninit(A.rows, A.cols);
  kern::add(A.size(), A.data.data(), B.data.data(), C.data.data());
  const int ia = a.id, ib = b.id;
  return push(std::move(C), needs(a) || needs(b), "add", [ia, ib](Tape& t, const Node& n) {
    if (t.nodes_[ia].needs_grad)
      kern::axpy(n.grad.size(), n.grad.data.data(), 1.0, t.grad_buf(ia).data.data());
    if (t.nodes_[ib].needs_grad)
      kern::axpy(n.grad.size(), n.grad.data.data(), 1.0, t.grad_buf(ib).data.data());
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_same_shape(A, B, "sub");
  Tensor C = Tensor::uninit(A.rows, A.cols);
  for (std::size_t i = 0; i < A.size(); ++i) C.data[i] = A.data[i] - B.data[i];
  const int ia = a.id, ib = b.id;
  return push(std::move(C), needs(a) || needs(b), "sub", [ia, ib](Tape& t, const Node& n) {
    if (t.nodes_[ia].needs_grad)
      kern::axpy(n.grad.size(), n.grad.data.data(), 1.0, t.grad_buf(ia).data.data());
    if (t.nodes_[ib].needs_grad)
      kern::axpy(n.grad.size(), n.grad.data.data(), -1.0, t.grad_buf(ib).data.data());
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_same_shape(A, B, "mul");
  Tensor C = Tensor::uninit(A.rows, A.cols);
  kern::mul(A.size(), A.data.data(), B.data.data(), C.data.data());
  const int ia = a.id, ib = b.id;
  return push(std::move(C), needs(a) || needs(b), "mul", [ia, ib](Tape& t, const Node& n) {
    const Tensor& A = t.nodes_[ia].val;
    const Tensor& B = t.nodes_[ib].val;
    if (t.nodes_[ia].needs_grad) {
      Tensor& g = t.grad_buf(ia);
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[i] * B.data[i];
    }
    if (t.nodes_[ib].needs_grad) {
      Tensor& g = t.grad_buf(ib);
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[i] * A.data[i];
    }
  });
}

Var Tape::affine(Var a, double scale, double shift) {
  const Tensor& A = value(a);
  Tensor C = Tensor::uninit(A.rows, A.cols);
  kern::affine(A.size(), A.data.data(), scale, shift, C.data.data());
  const int ia = a.id;
  return push(std::move(C), needs(a), "affine", [ia, scale](Tape& t, const Node& n) {
    if (t.nodes_[ia].needs_grad)
      kern::axpy(n.grad.size(), n.grad.data.data(), scale, t.grad_buf(ia).data.data());
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rows != B.rows) throw ConfigError("concat_cols: row counts disagree");
  Tensor C = Tensor::uninit(A.rows, A.cols + B.cols);
  for (int i = 0; i < A.rows; ++i) {
    std::copy_n(A.row(i), A.cols, C.row(i));
    std::copy_n(B.row(i), B.cols, C.row(i) + A.cols);
  }
  const int ia = a.id, ib = b.id;
  const int ca = A.cols, cb = B.cols;
  return push(std::move(C), needs(a) || needs(b), "concat_cols",
              [ia, ib, ca, cb](Tape& t, const Node& n) {
                if (t.nodes_[ia].needs_grad) {
                  Tensor& g = t.grad_buf(ia);
                  for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < ca; ++j) g.at(i, j) += n.grad.at(i, j);
                }
                if (t.nodes_[ib].needs_grad) {
                  Tensor& g = t.grad_buf(ib);
                  for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < cb; ++j) g.at(i, j) += n.grad.at(i, ca + j);
                }
              });
}

Var Tape::gather_rows(Var a, std::vector<std::int32_t> idx) {
  const Tensor& A = value(a);
  for (std::int32_t i : idx)
    if (i < 0 || i >= A.rows) throw ConfigError("gather_rows: index out of range");
  Tensor C = Tensor::uninit(static_cast<int>(idx.size()), A.cols);
  kern::gather_rows(C.rows, A.cols, idx.data(), A.data.data(), C.data.data());
  const int ia = a.id;
  return push(std::move(C), needs(a), "gather_rows",
              [ia, idx = std::move(idx)](Tape& t, const Node& n) {
                if (!t.nodes_[ia].needs_grad) return;
                Tensor& g = t.grad_buf(ia);
                // Indices may repeat (shared centers), so scatter stays serial.
                for (std::size_t r = 0; r < idx.size(); ++r)
                  kern::serial::axpy(static_cast<std::size_t>(g.cols),
                                     n.grad.row(static_cast<int>(r)), 1.0, g.row(idx[r]));
              });
}

Var Tape::neighbor_mean(Var a, CsrView fwd, CsrView rev) {
  const Tensor& A = value(a);
  if (rev.n != A.rows) throw ConfigError("neighbor_mean: reverse adjacency size mismatch");
  Tensor C = Tensor::uninit(fwd.n, A.cols);
  kern::neighbor_mean(fwd.n, A.cols, fwd.off, fwd.idx, A.data.data(), C.data.data());
  const int ia = a.id;
  return push(std::move(C), needs(a), "neighbor_mean", [ia, fwd, rev](Tape& t, const Node& n) {
    if (!t.nodes_[ia].needs_grad) return;
    Tensor& g = t.grad_buf(ia);
    kern::neighbor_mean_backward(rev.n, g.cols, rev.off, rev.idx, fwd.off, n.grad.data.data(),
                                 g.data.data());
  });
}

Var Tape::mean_rows(Var a) {
  const Tensor& A = value(a);
  if (A.rows < 1) throw ConfigError("mean_rows: empty input");
  Tensor C(1, A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) C.data[j] += A.at(i, j);
  const double inv = 1.0 / A.rows;
  for (double& v : C.data) v *= inv;
  const int ia = a.id;
  return push(std::move(C), needs(a), "mean_rows", [ia, inv](Tape& t, const Node& n) {
    if (!t.nodes_[ia].needs_grad) return;
    Tensor& g = t.grad_buf(ia);
    for (int i = 0; i < g.rows; ++i)
      kern::serial::axpy(static_cast<std::size_t>(g.cols), n.grad.data.data(), inv, g.row(i));
  });
}

Var Tape::sum_all(Var a) {
  const Tensor& A = value(a);
  double s = 0.0;
  for (double v : A.data) s += v;
  const int ia = a.id;
  return push(Tensor::scalar(s), needs(a), "sum_all", [ia](Tape& t, const Node& n) {
    if (!t.nodes_[ia].needs_grad) return;
    Tensor& g = t.grad_buf(ia);
    const double gv = n.grad.data[0];
    for (double& v : g.data) v += gv;
  });
}

Var Tape::mean_all(Var a) {
  const Tensor& A = value(a);
  if (A.size() == 0) throw ConfigError("mean_all: empty input");
  return affine(sum_all(a), 1.0 / static_cast<double>(A.size()), 0.0);
}

Var Tape::stack_scalars(const std::vector<Var>& xs) {
  if (xs.empty()) throw ConfigError("stack_scalars: empty input");
  Tensor C = Tensor::uninit(1, static_cast<int>(xs.size()));
  bool ng = false;
  std::vector<int> ids(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Tensor& x = value(xs[i]);
    if (x.rows != 1 || x.cols != 1) throw ConfigError("stack_scalars: inputs must be scalar");
    C.data[i] = x.data[0];
    ids[i] = xs[i].id;
    ng = ng || needs(xs[i]);
  }
  return push(std::move(C), ng, "stack_scalars",
              [ids = std::move(ids)](Tape& t, const Node& n) {
                for (std::size_t i = 0; i < ids.size(); ++i)
                  if (t.nodes_[ids[i]].needs_grad) t.grad_buf(ids[i]).data[0] += n.grad.data[i];
              });
}

Var Tape::segment_attention(Var emb, Var proj, Var center_emb, Var center_proj,
                            std::vector<std::int32_t> centers, std::vector<std::int64_t> seg_off,
                            std::vector<std::int32_t> nbr_idx, bool uniform) {
  const Tensor& E = value(emb);
  const Tensor& C = value(center_emb);
  const int d = E.cols;
  const int n_seg = static_cast<int>(centers.size());
  if (seg_off.size() != centers.size() + 1 ||
      seg_off.back() != static_cast<std::int64_t>(nbr_idx.size()))
    throw ConfigError("segment_attention: inconsistent segment layout");
  for (std::size_t t = 0; t + 1 < seg_off.size(); ++t)
    if (seg_off[t + 1] <= seg_off[t])
      throw ConfigError("segment_attention: empty segment");
  if (C.cols != d || (!uniform && (value(proj).cols != d || value(center_proj).cols != d)))
    throw ConfigError("segment_attention: dimension mismatch");

  auto alpha = std::make_shared<std::vector<double>>(nbr_idx.size());
  Tensor out = Tensor::uninit(n_seg, d);
  kern::serial::SegmentedIndex seg{centers.data(), seg_off.data(), nbr_idx.data(), n_seg};
  kern::segment_attention(seg, d, E.data.data(), uniform ? nullptr : value(proj).data.data(),
                          C.data.data(), uniform ? nullptr : value(center_proj).data.data(),
                          uniform, alpha->data(), out.data.data());

  const int ie = emb.id, ic = center_emb.id;
  const int ip = uniform ? -1 : proj.id, icp = uniform ? -1 : center_proj.id;
  const bool ng = needs(emb) || needs(center_emb) ||
                  (!uniform && (needs(proj) || needs(center_proj)));
  return push(std::move(out), ng, "segment_attention",
              [ie, ip, ic, icp, uniform, alpha, centers = std::move(centers),
               seg_off = std::move(seg_off),
               nbr_idx = std::move(nbr_idx)](Tape& t, const Node& n) {
                kern::serial::SegmentedIndex seg{centers.data(), seg_off.data(), nbr_idx.data(),
                                                 static_cast<int>(centers.size())};
                const int d = n.val.cols;
                // All four inputs live in one loop, so grads are accumulated
                // together; untouched sides just get zeros added.
                Tensor& ge = t.grad_buf(ie);
                Tensor& gc = t.grad_buf(ic);
                double* gp = nullptr;
                double* gcp = nullptr;
                if (!uniform) {
                  gp = t.grad_buf(ip).data.data();
                  gcp = t.grad_buf(icp).data.data();
                }
                kern::serial::segment_attention_backward(
                    seg, d, t.nodes_[ie].val.data.data(),
                    uniform ? nullptr : t.nodes_[ip].val.data.data(),
                    uniform ? nullptr : t.nodes_[icp].val.data.data(), uniform, alpha->data(),
                    n.val.data.data(), n.grad.data.data(), ge.data.data(), gp, gc.data.data(),
                    gcp);
              });
}

Var Tape::leaky_relu(Var a, double slope) {
  const Tensor& A = value(a);
  Tensor C = Tensor::uninit(A.rows, A.cols);
  kern::leaky_relu(A.size(), A.data.data(), slope, C.data.data());
  const int ia = a.id;
  return push(std::move(C), needs(a), "leaky_relu", [ia, slope](Tape& t, const Node& n) {
    if (!t.nodes_[ia].needs_grad) return;
    Tensor& g = t.grad_buf(ia);
    kern::leaky_relu_backward(g.size(), t.nodes_[ia].val.data.data(), n.grad.data.data(), slope,
                              g.data.data());
  });
}

Var Tape::sigmoid(Var a) {
  const Tensor& A = value(a);
  Tensor C = Tensor::uninit(A.rows, A.cols);
  kern::sigmoid(A.size(), A.data.data(), C.data.data());
  const int ia = a.id;
  return push(std::move(C), needs(a), "sigmoid", [ia](Tape& t, const Node& n) {
    if (!t.nodes_[ia].needs_grad) return;
    Tensor& g = t.grad_buf(ia);
    kern::sigmoid_backward(g.size(), n.val.data.data(), n.grad.data.data(), g.data.data());
  });
}

Var Tape::softmax_rows(Var a) {
  const Tensor& A = value(a);
  Tensor C = Tensor::uninit(A.rows, A.cols);
  kern::softmax_rows(A.rows, A.cols, A.data.data(), C.data.data());
  const int ia = a.id;
  return push(std::move(C), needs(a), "softmax_rows", [ia](Tape& t, const Node& n) {
    if (!t.nodes_[ia].needs_grad) return;
    Tensor& g = t.grad_buf(ia);
    kern::softmax_rows_backward(g.rows, g.cols, n.val.data.data(), n.grad.data.data(),
                                g.data.data());
  });
}

Var Tape::log(Var a) {
  const Tensor& A = value(a);
  Tensor C = Tensor::uninit(A.rows, A.cols);
  for (std::size_t i = 0; i < A.size(); ++i) C.data[i] = std::log(A.data[i]);
  const int ia = a.id;
  return push(std::move(C), needs(a), "log", [ia](Tape& t, const Node& n) {
    if (!t.nodes_[ia].needs_grad) return;
    Tensor& g = t.grad_buf(ia);
    const Tensor& x = t.nodes_[ia].val;
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[i] / x.data[i];
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  const Tensor& A = value(a);
  Tensor C = Tensor::uninit(A.rows, A.cols);
  for (std::size_t i = 0; i < A.size(); ++i) C.data[i] = std::clamp(A.data[i], lo, hi);
  const int ia = a.id;
  return push(std::move(C), needs(a), "clamp", [ia, lo, hi](Tape& t, const Node& n) {
    if (!t.nodes_[ia].needs_grad) return;
    Tensor& g = t.grad_buf(ia);
    const Tensor& x = t.nodes_[ia].val;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x.data[i] > lo && x.data[i] < hi) g.data[i] += n.grad.data[i];
  });
}

Var Tape::dropout(Var a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0,1)");
  if (rate == 0.0) return a;
  const Tensor& A = value(a);
  Tensor mask = Tensor::uninit(A.rows, A.cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask.data) v = u(rng) < rate ? 0.0 : keep_scale;
  return mul(a, constant(std::move(mask)));
}

void Tape::backward(Var loss) {
  if (!loss.valid() || static_cast<std::size_t>(loss.id) >= nodes_.size())
    throw ConfigError("backward: invalid loss node");
  const Tensor& lv = nodes_[loss.id].val;
  if (lv.rows != 1 || lv.cols != 1) throw ConfigError("backward: loss must be a scalar");
  grad_buf(loss.id).data[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (check_finite_ && !n.grad.all_finite())
      throw NumericError(std::string("non-finite gradient at op '") + n.op + "'");
    if (n.back) n.back(*this, n);
  }
  for (auto& [id, entry] : bound_) {
    const Tensor& g = nodes_[id].grad;
    if (g.size() == 0) continue;  // parameter did not participate in this loss
    kern::axpy(g.size(), g.data.data(), 1.0, entry->grad.data.data());
  }
}

}  // namespace bigi
