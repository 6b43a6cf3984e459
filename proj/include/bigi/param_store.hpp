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
#include <string>
#include <unordered_map>
#include <vector>

#include "bigi/rng.hpp"
#include "bigi/tensor.hpp"

namespace bigi {

// One trainable tensor with its gradient accumulator and Adam moments.
struct ParamEntry {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Registry of every trainable tensor, keyed by name but iterated in
// registration order so updates and checkpoints are reproducible.
class ParamStore {
 public:
  // Registers a zero-initialized parameter. Name must be fresh.
  ParamEntry& add(const std::string& name, int rows, int cols);
  // Registers and fills with uniform(-b, b), b = sqrt(6 / (rows + cols)).
  ParamEntry& add_glorot(const std::string& name, int rows, int cols, Rng& rng);

  ParamEntry& get(const std::string& name);
  const ParamEntry& get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<ParamEntry>& entries() { return entries_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  void zero_grads();

  // Standard Adam with bias correction; increments the step counter and
  // zeroes the gradients afterwards.
  void adam_step(const AdamConfig& cfg);

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

// Binary checkpoint holding every parameter tensor, the step counter and an
// opaque config text blob. Writes are atomic (temp file + rename).
void save_checkpoint(const ParamStore& store, const std::string& config_text,
                     const std::string& path);
struct CheckpointData {
  ParamStore store;
  std::string config_text;
};
CheckpointData load_checkpoint_file(const std::string& path);

}  // namespace bigi
