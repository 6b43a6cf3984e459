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

// Drives the installed CLI end to end on a small synthetic dataset.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = BIGI_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > cli_test_stdout.txt 2> cli_test_stderr.txt";
  return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Workdir {
  fs::path dir;
  Workdir() : dir(fs::path("cli_test_area")) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string operator/(const std::string& p) const { return (dir / p).string(); }
};

}  // namespace

TEST_CASE("cli: full pipeline on a synthetic dataset") {
  Workdir wd;
  const std::string data = wd / "toy.tsv";
  REQUIRE(run("synth --kind blocks --num-u 60 --num-v 40 --edges 600 --seed 4 --out " + data) ==
          0);

  const std::string common = " --data " + data + " --format tsv-rated --train-ratio 0.7 " +
                             "--dim 8 --depth 1 --epochs 3 --batch 128 --seed 9 --quiet";

  SUBCASE("train produces the run artifacts and is rerun-identical") {
    REQUIRE(run("train --out " + (wd / "run1") + common) == 0);
    CHECK(fs::exists(wd / "run1/manifest"));
    CHECK(fs::exists(wd / "run1/config"));
    CHECK(fs::exists(wd / "run1/loss.csv"));
    CHECK(fs::exists(wd / "run1/epoch_3.ckpt"));

    REQUIRE(run("train --out " + (wd / "run2") + common) == 0);
    CHECK(slurp(wd / "run1/loss.csv") == slurp(wd / "run2/loss.csv"));

    const std::string loss = slurp(wd / "run1/loss.csv");
    CHECK(loss.rfind("epoch,total,infomax,ranking\n", 0) == 0);

    SUBCASE("evaluate emits the full metric grid") {
      REQUIRE(run("evaluate --run " + (wd / "run1") + " --task both --K 3,5,10") == 0);
      const std::string csv = slurp(wd / "run1/metrics.csv");
      for (const std::string name :
           {"F1@10", "NDCG@3", "NDCG@5", "NDCG@10", "MAP@3", "MAP@5", "MAP@10", "MRR@3", "MRR@5",
            "MRR@10", "AUC-ROC", "AUC-PR"})
        CHECK(csv.find("\n" + name + ",") != std::string::npos);
      // Exactly the Table-2 style grid for topk: no F1@3 / F1@5.
      CHECK(csv.find("F1@3") == std::string::npos);
      CHECK(csv.find("F1@5") == std::string::npos);

      // Determinism across reruns.
      REQUIRE(run("evaluate --run " + (wd / "run1") + " --task both --K 3,5,10 --out " +
                  (wd / "m2.csv")) == 0);
      CHECK(slurp(wd / "m2.csv") == slurp(wd / "run1/metrics.csv"));
    }

    SUBCASE("embed writes one row per node") {
      REQUIRE(run("embed --run " + (wd / "run1") + " --out " + (wd / "emb.tsv")) == 0);
      std::ifstream is(wd / "emb.tsv");
      std::string line;
      std::size_t rows = 0, fields = 0;
      std::set<std::string> tokens;
      while (std::getline(is, line)) {
        ++rows;
        fields = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), '\t'));
        tokens.insert(line.substr(0, line.find('\t')));
      }
      CHECK(rows == 100);        // num_u + num_v
      CHECK(fields == 9);        // token + d floats
      CHECK(tokens.count("u0") == 1);
      CHECK(tokens.count("v0") == 1);
    }

    SUBCASE("analyze writes clustering and pair-score CSVs") {
      REQUIRE(run("analyze --run " + (wd / "run1") + " --clusters 2,4 --pairs 6") == 0);
      CHECK(slurp(wd / "run1/chi_u.csv").find("CHI@2,") != std::string::npos);
      CHECK(slurp(wd / "run1/chi_v.csv").find("CHI@4,") != std::string::npos);
      const std::string ps = slurp(wd / "run1/pair_scores.csv");
      CHECK(ps.rfind("u,v,distance,score\n", 0) == 0);
      CHECK(std::count(ps.begin(), ps.end(), '\n') == 7);  // header + 6 pairs
    }
  }

  SUBCASE("bad inputs are rejected with nonzero exits") {
    CHECK(run("train --out " + (wd / "bad") + common + " --hop 2") != 0);  // even hop
    CHECK(run("train --out " + (wd / "bad") + " --data " + (wd / "missing.tsv") +
              " --format tsv-pair") != 0);
    CHECK(run("evaluate --run " + (wd / "nonexistent")) != 0);
    CHECK(run("definitely-not-a-command") != 0);
    fs::create_directories(wd / "empty_run");
    std::ofstream(wd / "empty_run/manifest") << "command=train\ndata=" << data
                                             << "\nformat=tsv-rated\ntrain_ratio=0.7\n";
    CHECK(run("evaluate --run " + (wd / "empty_run")) != 0);  // no checkpoint
    const std::string err = slurp("cli_test_stderr.txt");
    CHECK(err.find("no checkpoint") != std::string::npos);
  }

  std::remove("cli_test_stdout.txt");
  std::remove("cli_test_stderr.txt");
}
