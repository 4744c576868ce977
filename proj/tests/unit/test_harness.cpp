#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ldm/dataset.hpp"
#include "ldm/experiment.hpp"
#include "ldm/report.hpp"

using namespace ldm;
namespace fs = std::filesystem;

namespace {

std::string csv_rows(std::size_t n, const std::vector<int>& labels) {
  std::ostringstream s;
  s << "a,b,label\n";
  for (std::size_t i = 0; i < n; ++i) s << i << ',' << 0.5 * static_cast<double>(i) << ',' << labels[i % labels.size()] << '\n';
  return s.str();
}

ExperimentConfig small_config(Strategy s) {
  ExperimentConfig cfg;
  cfg.dataset.generator.kind = GeneratorKind::Blobs;
  cfg.dataset.generator.n = 300;
  cfg.dataset.generator.classes = 3;
  cfg.dataset.n_test = 200;
  cfg.dataset.id = "blobs";
  cfg.dataset.seed = 4;
  cfg.model.kind = ModelKind::Logistic;
  cfg.train.epochs = 10;
  cfg.strategy = s;
  cfg.initial_labeled = 12;
  cfg.pool_size = 60;
  cfg.query_size = 5;
  cfg.steps = 2;
  cfg.repetitions = 2;
  cfg.master_seed = 9;
  return cfg;
}

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("ldm_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("csv split sizes and determinism") {
  std::istringstream in(csv_rows(100, {0, 1}));
  const auto s = read_dataset_csv(in, "label", 0.8, 3);
  CHECK(s.train.size() == 80);
  CHECK(s.test.size() == 20);
  CHECK(s.train.x.dim() == 2);
  CHECK(s.train.num_classes == 2);
  std::istringstream again(csv_rows(100, {0, 1}));
  const auto t = read_dataset_csv(again, "label", 0.8, 3);
  CHECK(t.train.x.values() == s.train.x.values());
  CHECK(t.test.y == s.test.y);
  std::istringstream other(csv_rows(100, {0, 1}));
  CHECK(read_dataset_csv(other, "label", 0.8, 4).train.x.values() != s.train.x.values());
}

TEST_CASE("csv labels are remapped in ascending order") {
  std::istringstream in(csv_rows(30, {5, 0, 2}));
  const auto s = read_dataset_csv(in, "label", 0.5, 1);
  CHECK(s.original_labels == std::vector<long long>{0, 2, 5});
  CHECK(s.train.num_classes == 3);
  std::set<int> seen(s.train.y.begin(), s.train.y.end());
  seen.insert(s.test.y.begin(), s.test.y.end());
  CHECK(seen == std::set<int>{0, 1, 2});
  // Row i has feature a = i; its raw label is {5,0,2}[i % 3].
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    const auto row = static_cast<std::size_t>(s.train.x[i][0]);
    const long long raw = std::vector<long long>{5, 0, 2}[row % 3];
    CHECK(s.original_labels[static_cast<std::size_t>(s.train.y[i])] == raw);
  }
}

TEST_CASE("csv label column by index") {
  std::istringstream in("label,x\n1,0.5\n0,0.1\n1,0.2\n0,0.3\n");
  const auto s = read_dataset_csv(in, "0", 0.5, 1);
  CHECK(s.train.x.dim() == 1);
}

TEST_CASE("csv errors name the problem") {
  std::istringstream bad_cell("x,label\n1,0\n2,0\nabc,1\n");
  try {
    (void)read_dataset_csv(bad_cell, "label", 0.5, 0);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
  std::istringstream no_label("x,y\n1,0\n2,1\n");
  CHECK_THROWS_WITH_AS((void)read_dataset_csv(no_label, "label", 0.5, 0), doctest::Contains("label"),
                       std::runtime_error);
  std::istringstream ragged("x,label\n1,0\n2\n");
  CHECK_THROWS_WITH_AS((void)read_dataset_csv(ragged, "label", 0.5, 0), doctest::Contains("line 3"),
                       std::runtime_error);
  std::istringstream empty("");
  CHECK_THROWS_AS((void)read_dataset_csv(empty, "label", 0.5, 0), std::runtime_error);
  std::istringstream ok("x,label\n1,0\n2,1\n");
  CHECK_THROWS_AS((void)read_dataset_csv(ok, "label", 1.5, 0), std::invalid_argument);
}

TEST_CASE("points csv drops the named column") {
  std::istringstream in("x0,x1,label\n1,2,0\n3,4,1\n");
  const auto p = read_points_csv(in, "label");
  CHECK(p.dim() == 2);
  CHECK(p.values() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("disk generator") {
  GeneratorParams g;
  g.n = 2000;
  const auto d = generate(g, 1);
  const double u[2] = {std::cos(g.separator_angle), std::sin(g.separator_angle)};
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(std::hypot(d.x[i][0], d.x[i][1]) <= 1.0);
    CHECK(d.y[i] == (d.x[i][0] * u[0] + d.x[i][1] * u[1] > 0.0 ? 1 : 0));
  }
  g.label_noise = 0.2;
  const auto noisy = generate(g, 1);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    flipped += noisy.y[i] != (noisy.x[i][0] * u[0] + noisy.x[i][1] * u[1] > 0.0 ? 1 : 0);
  }
  CHECK(static_cast<double>(flipped) / 2000.0 == doctest::Approx(0.2).epsilon(0.15));
  g.label_noise = 1.5;
  CHECK_THROWS_AS(generate(g, 1), std::invalid_argument);
}

TEST_CASE("disk data is fit exactly by a linear classifier") {
  GeneratorParams g;
  g.n = 300;
  const auto d = generate(g, 2);
  ModelSpec spec;
  spec.kind = ModelKind::Linear2D;
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.learning_rate = 0.1;
  CHECK(accuracy(train(d, spec, cfg), d) == 1.0);
}

TEST_CASE("well separated blobs are nearest-centroid separable") {
  GeneratorParams g;
  g.kind = GeneratorKind::Blobs;
  g.n = 3000;
  g.classes = 3;
  g.cluster_std = 1.0;
  g.spread = 10.0 / std::sqrt(3.0);  // neighbouring centers 10 sigma apart
  const auto d = generate(g, 3);
  const auto c = blob_centers(g);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < 3; ++k) {
      const double dx = d.x[i][0] - c[2 * k], dy = d.x[i][1] - c[2 * k + 1];
      if (dx * dx + dy * dy < best_d) {
        best_d = dx * dx + dy * dy;
        best = k;
      }
    }
    correct += best == d.y[i];
  }
  CHECK(static_cast<double>(correct) / 3000.0 >= 0.99);
}

TEST_CASE("config parsing") {
  std::istringstream in("# comment\n\nexperiment.steps = 4\n model.kind=mlp \nmodel.hidden_dim = 8\n");
  const auto kv = parse_key_values(in);
  CHECK(kv.at("experiment.steps") == "4");
  const auto cfg = apply_config(ExperimentConfig{}, kv);
  CHECK(cfg.steps == 4);
  CHECK(cfg.model.kind == ModelKind::Mlp);
  CHECK(cfg.model.hidden_dim == 8);
  CHECK_THROWS_AS(apply_config(ExperimentConfig{}, {{"experiment.bogus", "1"}}), std::invalid_argument);
  CHECK_THROWS_AS(apply_config(ExperimentConfig{}, {{"experiment.steps", "four"}}), std::invalid_argument);
  std::istringstream bad("no equals sign\n");
  CHECK_THROWS_AS(parse_key_values(bad), std::invalid_argument);
}

TEST_CASE("config round trip covers every field") {
  auto cfg = small_config(Strategy::Coreset);
  cfg.estimator.sigma_ladder = {0.01, 0.1, 1.0};
  cfg.estimator.stop_condition = 7;
  cfg.dataset.generator.centers = {0, 0, 1, 1, 2, 2};
  cfg.warm_start = true;
  cfg.audit_labels = true;
  cfg.model.kind = ModelKind::Mlp;
  cfg.model.hidden_dim = 6;
  const auto kv = to_key_values(cfg);
  const auto back = apply_config(ExperimentConfig{}, kv);
  CHECK(to_key_values(back) == kv);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(config_hash(back).size() == 16);
  auto changed = cfg;
  changed.query_size = 6;
  CHECK(config_hash(changed) != config_hash(cfg));
}

TEST_CASE("bookkeeping: labeled counts, disjointness, pool membership") {
  auto cfg = small_config(Strategy::Random);
  std::size_t total = 0;
  std::vector<StepTrace> traces;
  const auto result = al_experiment(cfg, [&](const StepTrace& t) { traces.push_back(t); });
  REQUIRE(result.records.size() == 6);
  for (const auto& r : result.records) {
    CHECK(r.labeled_count == 12 + static_cast<std::size_t>(r.step) * 5);
    CHECK(r.test_accuracy >= 0.0);
    CHECK(r.test_accuracy <= 1.0);
    CHECK(r.algorithm == "random");
    CHECK(r.dataset == "blobs");
    CHECK(r.wall_time_seconds == 0.0);
  }
  REQUIRE(traces.size() == 4);
  for (const auto& t : traces) {
    const std::set<std::size_t> l(t.labeled.begin(), t.labeled.end()), u(t.unlabeled.begin(), t.unlabeled.end());
    for (std::size_t i : l) CHECK(u.count(i) == 0);
    if (total == 0) total = l.size() + u.size();
    CHECK(l.size() + u.size() == total);
    CHECK(t.pool.size() == 60);
    for (std::size_t i : t.pool) CHECK(u.count(i) == 1);
    CHECK(t.batch.indices.size() == 5);
  }
}

TEST_CASE("initial set is stratified") {
  auto cfg = small_config(Strategy::Random);
  cfg.initial_per_class = 3;
  cfg.steps = 1;
  std::vector<StepTrace> traces;
  const auto data = materialize(cfg.dataset);
  al_experiment(cfg, data, [&](const StepTrace& t) { traces.push_back(t); });
  for (const auto& t : traces) {
    std::vector<int> per(3, 0);
    for (std::size_t i : t.labeled) ++per[static_cast<std::size_t>(data.train.y[i])];
    CHECK(per == std::vector<int>{3, 3, 3});
  }
}

TEST_CASE("every strategy runs deterministically") {
  for (auto s : {Strategy::LdmS, Strategy::Random, Strategy::Entropy, Strategy::Margin, Strategy::Coreset}) {
    CAPTURE(to_string(s));
    const auto cfg = small_config(s);
    const auto a = al_experiment(cfg);
    const auto b = al_experiment(cfg);
    REQUIRE(a.records.size() == b.records.size());
    std::ostringstream ja, jb;
    for (const auto& r : a.records) write_record_jsonl(ja, r);
    for (const auto& r : b.records) write_record_jsonl(jb, r);
    CHECK(ja.str() == jb.str());
  }
}

TEST_CASE("more repetitions leave earlier ones unchanged") {
  auto cfg = small_config(Strategy::LdmS);
  const auto two = al_experiment(cfg);
  cfg.repetitions = 3;
  const auto three = al_experiment(cfg);
  REQUIRE(three.records.size() == 9);
  for (std::size_t i = 0; i < two.records.size(); ++i) {
    CHECK(two.records[i].test_accuracy == three.records[i].test_accuracy);
    CHECK(two.records[i].seed == three.records[i].seed);
  }
}

TEST_CASE("audit mode runs without reading hidden labels") {
  for (auto s : {Strategy::LdmS, Strategy::Entropy, Strategy::Coreset}) {
    auto cfg = small_config(s);
    cfg.audit_labels = true;
    CHECK_NOTHROW(al_experiment(cfg));
  }
}

TEST_CASE("warm start and LDM-S traces") {
  auto cfg = small_config(Strategy::LdmS);
  cfg.warm_start = true;
  std::vector<StepTrace> traces;
  const auto r = al_experiment(cfg, [&](const StepTrace& t) { traces.push_back(t); });
  CHECK(r.records.size() == 6);
  for (const auto& t : traces) {
    CHECK(t.ldm_values.size() == t.pool.size());
    CHECK(t.weights.size() == t.pool.size());
    const auto first = std::min_element(t.ldm_values.begin(), t.ldm_values.end()) - t.ldm_values.begin();
    CHECK(t.batch.indices.front() == static_cast<std::size_t>(first));
  }
}

TEST_CASE("pool is clamped with a warning and budget is checked") {
  auto cfg = small_config(Strategy::Random);
  cfg.pool_size = 295;
  cfg.steps = 1;
  cfg.repetitions = 1;
  const auto r = al_experiment(cfg);
  CHECK_FALSE(r.warnings.empty());
  cfg.steps = 100;
  CHECK_THROWS_AS(al_experiment(cfg), std::invalid_argument);
  cfg = small_config(Strategy::Random);
  cfg.query_size = 100;
  CHECK_THROWS_AS(al_experiment(cfg), std::invalid_argument);
}

TEST_CASE("divergence aborts the repetition with a warning") {
  auto cfg = small_config(Strategy::Random);
  cfg.model.kind = ModelKind::Mlp;
  cfg.model.hidden_dim = 4;
  cfg.train.optimizer = Optimizer::Sgd;
  cfg.train.learning_rate = 1e300;
  const auto r = al_experiment(cfg);
  CHECK(r.records.empty());
  CHECK(r.warnings.size() == 2);
}

TEST_CASE("jsonl round trip and errors") {
  ExperimentRecord rec{"ldm-s", "d", 1, 2, 30, 0.875, 0.0, 123456789012345ULL, "00ff00ff00ff00ff"};
  std::ostringstream out;
  write_record_jsonl(out, rec);
  CHECK(out.str() ==
        "{\"algorithm\":\"ldm-s\",\"dataset\":\"d\",\"repetition\":1,\"step\":2,\"labeled_count\":30,"
        "\"test_accuracy\":0.875,\"wall_time_seconds\":0.0,\"seed\":123456789012345,"
        "\"config_hash\":\"00ff00ff00ff00ff\"}\n");
  std::istringstream in(out.str() + "\n" + out.str());
  const auto back = read_records_jsonl(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].test_accuracy == 0.875);
  CHECK(back[0].seed == rec.seed);
  std::istringstream bad(out.str() + "{not json\n");
  CHECK_THROWS_WITH_AS(read_records_jsonl(bad), doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_AS(parse_record_json("{\"algorithm\":\"a\"}"), std::runtime_error);
}

TEST_CASE("report: empty file, incomplete grid, single algorithm, fixture") {
  const auto dir = temp_dir("report");
  { std::ofstream(dir / "empty.jsonl"); }
  CHECK_THROWS_WITH_AS(report(dir / "empty.jsonl", ReportKind::Profile, dir / "out"), doctest::Contains("empty"),
                       std::runtime_error);

  auto write = [&](const fs::path& p, const std::vector<ExperimentRecord>& recs) {
    std::ofstream f(p);
    for (const auto& r : recs) write_record_jsonl(f, r);
  };
  write(dir / "gap.jsonl", {{"a", "d", 0, 0, 1, 0.5}, {"a", "d", 0, 1, 2, 0.5}, {"b", "d", 0, 0, 1, 0.5}});
  CHECK_THROWS_WITH_AS(report(dir / "gap.jsonl", ReportKind::Curves, dir / "out"), doctest::Contains("missing"),
                       std::invalid_argument);

  write(dir / "single.jsonl", {{"a", "d", 0, 0, 1, 0.4}, {"a", "d", 1, 0, 1, 0.7}});
  report(dir / "single.jsonl", ReportKind::Profile, dir / "single");
  std::ifstream prof(dir / "single" / "profile.csv");
  std::string line;
  std::getline(prof, line);
  std::size_t rows = 0;
  while (std::getline(prof, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "1");
  }
  CHECK(rows == 101);

  // A beats B at both steps on 5 repetitions.
  std::vector<ExperimentRecord> recs;
  for (int r = 0; r < 5; ++r) {
    for (int t = 0; t < 2; ++t) {
      recs.push_back({"A", "d", r, t, 1, 0.8 + 0.01 * r});
      recs.push_back({"B", "d", r, t, 1, 0.6 + 0.001 * r * r});
    }
  }
  write(dir / "pair.jsonl", recs);
  const auto written = report(dir / "pair.jsonl", ReportKind::PenaltyMatrix, dir / "pair");
  CHECK(written.size() == 2);
  std::ifstream csv(dir / "pair" / "penalty_matrix.csv");
  std::stringstream body;
  body << csv.rdbuf();
  CHECK(body.str() == "row,A,B\nA,0,1\nB,0,0\ncolumn_mean,0,0.5\n");
  fs::remove_all(dir);
}
