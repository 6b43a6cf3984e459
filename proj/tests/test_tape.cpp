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

#include <cmath>
#include <fstream>

#include "bigi/common.hpp"
#include "bigi/tape.hpp"
#include "oracles.hpp"

using namespace bigi;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(r, c);
  for (double& x : t.data) x = u(rng);
  return t;
}

std::vector<Tensor> grads_of(const ParamStore& store) {
  std::vector<Tensor> out;
  for (const ParamEntry& e : store.entries()) out.push_back(e.grad);
  return out;
}

}  // namespace

TEST_CASE("gradient of sum(W*x) is the outer product with x") {
  ParamStore store;
  ParamEntry& w = store.add("W", 3, 4);
  Rng rng(1);
  w.value = random_tensor(3, 4, rng);
  const Tensor x = random_tensor(4, 1, rng);

  Tape tape;
  Var wv = tape.param(store, "W");
  Var xv = tape.constant(x);
  Var loss = tape.sum_all(tape.matmul_nn(wv, xv));
  tape.backward(loss);

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(w.grad.at(i, j) == doctest::Approx(x.data[j]));
}

TEST_CASE("gradient of sigmoid(w)*w at w=0 is 0.5") {
  ParamStore store;
  store.add("w", 1, 1);  // value 0
  Tape tape;
  Var w = tape.param(store, "w");
  Var loss = tape.mul(tape.sigmoid(w), w);
  tape.backward(loss);
  CHECK(store.get("w").grad.data[0] == doctest::Approx(0.5));
}

TEST_CASE("random op composites pass the finite-difference property") {
  // Composite of every differentiable op on small random inputs.
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore store;
    store.add("A", 4, 3).value = random_tensor(4, 3, rng);
    store.add("B", 3, 5).value = random_tensor(3, 5, rng);
    store.add("C", 4, 5).value = random_tensor(4, 5, rng);
    store.add("w", 1, 5).value = random_tensor(1, 5, rng);

    auto build = [&](Tape& tape) {
      Var a = tape.param(store, "A");
      Var b = tape.param(store, "B");
      Var c = tape.param(store, "C");
      Var w = tape.param(store, "w");
      Var m = tape.matmul_nn(a, b);                       // 4x5
      Var s = tape.add(tape.sigmoid(m), tape.leaky_relu(c, 0.01));
      Var cat = tape.concat_cols(s, c);                   // 4x10
      Var sm = tape.softmax_rows(tape.gather_rows(cat, {0, 2, 1, 3, 2}));
      Var red = tape.mean_rows(tape.log(tape.affine(sm, 0.9, 0.05)));  // 1x10
      Var g1 = tape.mean_all(tape.mul(red, red));
      Var g2 = tape.mean_all(tape.matmul_nt(w, tape.gather_rows(s, {1})));
      Var g3 = tape.mean_all(tape.clamp(tape.sub(m, m), -0.5, 0.5));
      return tape.add(tape.add(g1, g2), g3);
    };

    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
    auto analytic = grads_of(store);

    auto rep = oracle::finite_difference_check(store, analytic, [&] {
      Tape t2;
      return t2.value(build(t2)).data[0];
    });
    CHECK(rep.max_rel_err < 1e-4);
    store.zero_grads();
  }
}

TEST_CASE("softmax rows sum to one and sigmoid stays in (0,1)") {
  Rng rng(3);
  Tape tape;
  Var x = tape.constant(random_tensor(20, 13, rng, -8.0, 8.0));
  const Tensor& sm = tape.value(tape.softmax_rows(x));
  for (int i = 0; i < sm.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < sm.cols; ++j) s += sm.at(i, j);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  const Tensor& sg = tape.value(tape.sigmoid(x));
  for (double v : sg.data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("backward rejects a non-scalar loss") {
  Tape tape;
  Var x = tape.constant(Tensor(2, 2));
  CHECK_THROWS_AS(tape.backward(x), ConfigError);
}

TEST_CASE("non-finite forward values are reported with the op name") {
  Tape tape;
  Tensor t(1, 1);
  t.data[0] = 0.0;
  Var x = tape.constant(t);
  CHECK_THROWS_AS(tape.log(x), NumericError);  // log(0) = -inf
}

TEST_CASE("parameters not on the loss path keep a zero gradient") {
  ParamStore store;
  Rng rng(5);
  store.add("used", 2, 2).value = random_tensor(2, 2, rng);
  store.add("unused", 2, 2).value = random_tensor(2, 2, rng);
  Tape tape;
  Var u = tape.param(store, "used");
  tape.param(store, "unused");
  tape.backward(tape.sum_all(u));
  for (double v : store.get("unused").grad.data) CHECK(v == 0.0);
  for (double v : store.get("used").grad.data) CHECK(v == 1.0);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  ParamStore store;
  Rng rng(4);
  store.add("p", 3, 3).value = random_tensor(3, 3, rng);
  const Tensor before = store.get("p").value;
  store.adam_step({0.01, 0.9, 0.999, 1e-8});
  CHECK(store.get("p").value.data == before.data);
  CHECK(store.step() == 1);
}

TEST_CASE("adam: bias-corrected first step equals the closed form") {
  ParamStore store;
  store.add("p", 1, 1);
  store.get("p").grad.data[0] = 1.0;
  store.adam_step({0.001, 0.9, 0.999, 1e-8});
  // mhat = vhat = 1 on the first step, so the update is -lr / (1 + eps).
  const double want = -0.001 / (1.0 + 1e-8);
  CHECK(store.get("p").value.data[0] == doctest::Approx(want).epsilon(1e-12));
  // gradients zeroed after the step
  CHECK(store.get("p").grad.data[0] == 0.0);
}

TEST_CASE("adam: identical steps from identical states match exactly") {
  auto run = [] {
    ParamStore store;
    Rng rng(11);
    store.add("p", 4, 4).value = random_tensor(4, 4, rng);
    for (int step = 0; step < 3; ++step) {
      for (std::size_t i = 0; i < store.get("p").grad.size(); ++i)
        store.get("p").grad.data[i] = 0.1 * static_cast<double>(i + step);
      store.adam_step({0.01, 0.9, 0.999, 1e-8});
    }
    return store.get("p").value.data;
  };
  CHECK(run() == run());
}

TEST_CASE("adam rejects a non-positive learning rate") {
  ParamStore store;
  store.add("p", 1, 1);
  CHECK_THROWS_AS(store.adam_step({0.0, 0.9, 0.999, 1e-8}), ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly and reject tampering") {
  ParamStore store;
  Rng rng(9);
  store.add("a/b", 3, 7).value = random_tensor(3, 7, rng);
  store.add("c", 1, 2).value = random_tensor(1, 2, rng);
  store.set_step(42);
  const std::string path = "tape_ckpt_test.bin";
  save_checkpoint(store, "k=v\n", path);

  CheckpointData data = load_checkpoint_file(path);
  CHECK(data.config_text == "k=v\n");
  CHECK(data.store.step() == 42);
  CHECK(data.store.get("a/b").value.data == store.get("a/b").value.data);
  CHECK(data.store.get("c").value.data == store.get("c").value.data);

  // Truncated file -> explicit error.
  {
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::ofstream os(path + ".cut", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint_file(path + ".cut"), IoError);
  std::remove(path.c_str());
  std::remove((path + ".cut").c_str());
}
