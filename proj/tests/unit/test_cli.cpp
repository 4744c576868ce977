// Drives the ldm executable end to end through its subcommands.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + LDM_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "ldm_cli_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("datagen, train and estimate") {
  TempDir d;
  REQUIRE(run("datagen --kind blobs --n 200 --seed 3 --out " + d / "data.csv") == 0);
  CHECK(slurp(d / "data.csv").rfind("x0,x1,label\n", 0) == 0);
  REQUIRE(run("train --data " + d / "data.csv" + " --kind logistic --epochs 20 --out " + d / "model.ckpt") == 0);
  CHECK(slurp(d / "model.ckpt").rfind("ldm-checkpoint 1\n", 0) == 0);
  REQUIRE(run("estimate --checkpoint " + d / "model.ckpt" + " --pool " + d / "data.csv" + " --out " +
              d / "ldm.csv") == 0);
  std::istringstream est(slurp(d / "ldm.csv"));
  std::string line;
  std::getline(est, line);
  CHECK(line == "pool_index,ldm_value,hypotheses_drawn,disagreements_found");
  std::size_t rows = 0;
  while (std::getline(est, line)) {
    ++rows;
    const double v = std::stod(line.substr(line.find(',') + 1));
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(rows == 200);
  CHECK(run("estimate --checkpoint " + d / "missing.ckpt" + " --pool " + d / "data.csv") != 0);
}

TEST_CASE("run, flag overrides and report") {
  TempDir d;
  {
    std::ofstream cfg(d / "exp.cfg");
    cfg << "dataset.kind = blobs\ndataset.n = 300\ndataset.n_test = 100\nmodel.kind = logistic\n"
           "train.epochs = 5\nexperiment.initial_labeled = 10\nexperiment.pool_size = 50\n"
           "experiment.query_size = 5\nexperiment.steps = 2\nexperiment.repetitions = 2\n";
  }
  REQUIRE(run("run --config " + d / "exp.cfg" + " --strategy random --seed 4 --out " + d / "random.jsonl") == 0);
  REQUIRE(run("run --config " + d / "exp.cfg" + " --strategy ldm-s --seed 4 --out " + d / "ldm.jsonl" +
              " --batch-log " + d / "batches.csv") == 0);
  CHECK(slurp(d / "random.jsonl").find("\"algorithm\":\"random\"") != std::string::npos);
  CHECK(slurp(d / "batches.csv").rfind("repetition,step,strategy,pool_index,ldm_value,weight,selection_order\n", 0) ==
        0);
  CHECK(run("run --config " + d / "exp.cfg" + " --set experiment.steps=1 --out " + d / "one.jsonl") == 0);
  CHECK(slurp(d / "one.jsonl").find("\"step\":2") == std::string::npos);
  CHECK(run("run --config " + d / "exp.cfg" + " --set experiment.nope=1") != 0);
  CHECK(run("run --config " + d / "exp.cfg" + " --strategy badge") != 0);

  { std::ofstream all(d / "all.jsonl"); all << slurp(d / "random.jsonl") << slurp(d / "ldm.jsonl"); }
  for (const char* kind : {"profile", "penalty-matrix", "curves"}) {
    CHECK(run(std::string("report --kind ") + kind + " --records " + d / "all.jsonl" + " --out-dir " + d / "rep") == 0);
  }
  CHECK(fs::exists(d.path / "rep" / "profile.csv"));
  CHECK(fs::exists(d.path / "rep" / "penalty_matrix.txt"));
  CHECK(fs::exists(d.path / "rep" / "curves.csv"));
  { std::ofstream empty(d / "empty.jsonl"); }
  CHECK(run("report --kind profile --records " + d / "empty.jsonl" + " --out-dir " + d / "rep") != 0);
}

TEST_CASE("verify exit status") {
  CHECK(run("verify --suite rho-monotone") == 0);
  CHECK(run("verify --suite seeding-dist --trials 20000") == 0);
  // Deliberately under-resourced estimator: expected to fail.
  CHECK(run("verify --suite consistency --stop 1 --mc 10") == 1);
  CHECK(run("verify --suite nonsense") != 0);
}

TEST_CASE("testbed curves") {
  TempDir d;
  for (const char* kind : {"rho-sigma", "flip-probability", "ldm-vs-stop"}) {
    REQUIRE(run(std::string("curve --kind ") + kind + " --points 5 --draws 500 --out " + d / "c.csv") == 0);
    CHECK(slurp(d / "c.csv").rfind("x,y,stderr\n", 0) == 0);
  }
}
