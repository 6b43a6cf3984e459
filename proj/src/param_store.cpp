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

#include "bigi/param_store.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "bigi/common.hpp"

namespace bigi {

ParamEntry& ParamStore::add(const std::string& name, int rows, int cols) {
  if (index_.count(name)) throw ConfigError("duplicate parameter: " + name);
  index_[name] = entries_.size();
  ParamEntry e;
  e.name = name;
  e.value = Tensor(rows, cols);
  e.grad = Tensor(rows, cols);
  e.adam_m = Tensor(rows, cols);
  e.adam_v = Tensor(rows, cols);
  entries_.push_back(std::move(e));
  return entries_.back();
}

ParamEntry& ParamStore::add_glorot(const std::string& name, int rows, int cols, Rng& rng) {
  ParamEntry& e = add(name, rows, cols);
  const double bound = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : e.value.data) v = u(rng);
  return e;
}

ParamEntry& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second];
}

const ParamEntry& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second];
}

void ParamStore::zero_grads() {
  for (ParamEntry& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

void ParamStore::adam_step(const AdamConfig& cfg) {
  if (cfg.lr <= 0.0) throw ConfigError("adam: learning rate must be positive");
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (ParamEntry& e : entries_) {
    const std::size_t n = e.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = e.grad.data[i];
      double& m = e.adam_m.data[i];
      double& v = e.adam_v.data[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      e.value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
  }
}

// ---------------------------------------------------------------------------
// checkpoint container
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'B', 'I', 'G', 'I'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw IoError(std::string("truncated checkpoint while reading ") + what);
  return v;
}

}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& config_text,
                     const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + tmp);
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, static_cast<std::int64_t>(store.step()));
    put(os, static_cast<std::uint32_t>(config_text.size()));
    os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    put(os, static_cast<std::uint32_t>(store.entries().size()));
    for (const ParamEntry& e : store.entries()) {
      put(os, static_cast<std::uint32_t>(e.name.size()));
      os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      put(os, static_cast<std::int32_t>(e.value.rows));
      put(os, static_cast<std::int32_t>(e.value.cols));
      os.write(reinterpret_cast<const char*>(e.value.data.data()),
               static_cast<std::streamsize>(e.value.size() * sizeof(double)));
    }
    os.write(kMagic, 4);
    if (!os) throw IoError("checkpoint write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot move checkpoint into place: " + path);
}

CheckpointData load_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4))
    throw IoError("not a checkpoint file: " + path);
  const auto version = take<std::uint32_t>(is, "version");
  if (version != kVersion)
    throw IoError("checkpoint version mismatch in " + path + ": expected " +
                  std::to_string(kVersion) + ", got " + std::to_string(version));
  CheckpointData out;
  out.store.set_step(take<std::int64_t>(is, "step counter"));
  const auto cfg_len = take<std::uint32_t>(is, "config length");
  out.config_text.resize(cfg_len);
  if (cfg_len && !is.read(out.config_text.data(), cfg_len))
    throw IoError("truncated checkpoint while reading config text");
  const auto count = take<std::uint32_t>(is, "parameter count");
  const std::int64_t step = out.store.step();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = take<std::uint32_t>(is, "parameter name length");
    std::string name(name_len, '\0');
    if (name_len && !is.read(name.data(), name_len))
      throw IoError("truncated checkpoint while reading parameter name");
    const auto rows = take<std::int32_t>(is, "rows");
    const auto cols = take<std::int32_t>(is, "cols");
    if (rows < 0 || cols < 0) throw IoError("corrupt checkpoint: negative shape in " + path);
    ParamEntry& e = out.store.add(name, rows, cols);
    const std::streamsize bytes =
        static_cast<std::streamsize>(e.value.size() * sizeof(double));
    if (bytes && !is.read(reinterpret_cast<char*>(e.value.data.data()), bytes))
      throw IoError("truncated checkpoint while reading tensor " + name);
  }
  if (!is.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4))
    throw IoError("truncated checkpoint: missing footer in " + path);
  out.store.set_step(step);
  return out;
}

}  // namespace bigi
