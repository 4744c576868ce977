// Command-line front end: dataset synthesis, training, LDM scoring, active
// learning runs, verification suites and result reports.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ldm/dataset.hpp"
#include "ldm/estimator.hpp"
#include "ldm/experiment.hpp"
#include "ldm/model.hpp"
#include "ldm/report.hpp"
#include "ldm/testbed.hpp"
#include "ldm/verify.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

struct DatagenArgs {
  std::string kind = "disk2d";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double angle = 0.7853981633974483;
  int classes = 3;
  std::size_t dim = 2;
  double cluster_std = 1.0;
  double spread = 3.0;
  std::string out;
};

int run_datagen(const DatagenArgs& a) {
  ldm::GeneratorParams p;
  p.kind = ldm::parse_generator_kind(a.kind);
  p.n = a.n;
  p.label_noise = a.noise;
  p.separator_angle = a.angle;
  p.classes = a.classes;
  p.dim = a.dim;
  p.cluster_std = a.cluster_std;
  p.spread = a.spread;
  const ldm::Dataset d = ldm::generate(p, a.seed);
  auto f = open_out(a.out);
  ldm::write_dataset_csv(f, d);
  std::cerr << "wrote " << d.size() << " rows to " << a.out << '\n';
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string label_column = "label";
  std::string kind = "logistic";
  std::size_t hidden = 0;
  int epochs = 100;
  std::size_t batch_size = 32;
  std::string optimizer = "adam";
  double lr = 0.01;
  std::uint64_t seed = 0;
  double split = 0.8;
  std::string out;
};

int run_train(const TrainArgs& a) {
  const auto split = ldm::load_dataset_csv(a.data, a.label_column, a.split, a.seed);
  ldm::ModelSpec spec;
  spec.kind = ldm::parse_model_kind(a.kind);
  spec.input_dim = split.train.x.dim();
  spec.num_classes = split.train.num_classes;
  if (spec.kind == ldm::ModelKind::Mlp) spec.hidden_dim = a.hidden == 0 ? 16 : a.hidden;
  spec.seed = a.seed;
  const ldm::TrainConfig cfg{a.epochs, a.batch_size, ldm::parse_optimizer(a.optimizer), a.lr, a.seed};
  const auto model = ldm::train(split.train, spec, cfg);
  std::cerr << "train accuracy " << ldm::accuracy(model, split.train) << ", test accuracy "
            << ldm::accuracy(model, split.test) << '\n';
  auto f = open_out(a.out);
  ldm::save_checkpoint(model, f);
  return 0;
}

struct EstimateArgs {
  std::string checkpoint;
  std::string pool;
  std::string mc;
  std::string drop_column = "label";
  int stop = 10;
  double sigma_step = 0.1;
  int sigma_count = 51;
  std::uint64_t seed = 0;
  bool independent = false;
  bool no_bias = false;
  std::string out;
};

int run_estimate(const EstimateArgs& a) {
  std::ifstream cf(a.checkpoint);
  if (!cf) throw std::runtime_error("cannot open checkpoint " + a.checkpoint);
  const auto model = ldm::load_checkpoint(cf);
  const auto pool = ldm::load_points_csv(a.pool, a.drop_column);
  std::optional<ldm::PointSet> mc;
  if (!a.mc.empty()) mc = ldm::load_points_csv(a.mc, a.drop_column);
  ldm::EstimatorConfig cfg{ldm::default_sigma_ladder(a.sigma_step, a.sigma_count), a.stop,
                           mc ? mc->size() : pool.size(), a.seed, !a.no_bias};
  const auto estimates = a.independent ? ldm::estimate_ldm_independent(pool, model, cfg, mc)
                                       : ldm::estimate_ldm_pool(pool, model, cfg, mc);
  if (a.out.empty() || a.out == "-") {
    ldm::write_estimates_csv(std::cout, estimates);
  } else {
    auto f = open_out(a.out);
    ldm::write_estimates_csv(f, estimates);
  }
  return 0;
}

struct RunArgs {
  std::string config;
  std::string strategy;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::string out;
  std::string batch_log;
};

int run_run(const RunArgs& a) {
  ldm::KeyValues kv;
  if (!a.config.empty()) kv = ldm::read_key_values(a.config);
  for (const auto& s : a.sets) {
    std::istringstream line(s);
    for (const auto& [k, v] : ldm::parse_key_values(line)) kv[k] = v;
  }
  if (!a.strategy.empty()) kv["experiment.strategy"] = a.strategy;
  if (a.seed) kv["experiment.master_seed"] = std::to_string(*a.seed);
  const ldm::ExperimentConfig cfg = ldm::apply_config(ldm::ExperimentConfig{}, kv);

  std::ofstream batch_log;
  ldm::StepObserver observer;
  if (!a.batch_log.empty()) {
    batch_log = open_out(a.batch_log);
    batch_log << "repetition,";
    ldm::write_batch_csv_header(batch_log);
    observer = [&](const ldm::StepTrace& t) {
      std::ostringstream rows;
      ldm::write_batch_csv_rows(rows, t.step, t.batch, t.pool, t.ldm_values, t.weights);
      std::string row;
      std::istringstream in(rows.str());
      while (std::getline(in, row)) batch_log << t.repetition << ',' << row << '\n';
    };
  }
  const auto result = ldm::al_experiment(cfg, observer);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

  std::ostringstream body;
  for (const auto& r : result.records) ldm::write_record_jsonl(body, r);
  if (a.out.empty() || a.out == "-") {
    std::cout << body.str();
  } else {
    auto f = open_out(a.out);
    f << body.str();
    std::cerr << "wrote " << result.records.size() << " records to " << a.out << '\n';
  }
  return 0;
}

struct VerifyArgs {
  std::string suite = "all";
  std::optional<int> stop;
  std::optional<std::size_t> mc;
  std::optional<std::size_t> points;
  std::optional<std::size_t> draws;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 20240501;
};

int run_verify(const VerifyArgs& a) {
  ldm::verify::Options o;
  o.stop_condition = a.stop;
  o.mc_size = a.mc;
  o.points = a.points;
  o.draws = a.draws;
  o.trials = a.trials;
  o.seed = a.seed;
  std::vector<ldm::verify::Suite> suites;
  if (a.suite == "all") {
    suites = ldm::verify::all_suites();
  } else {
    suites.push_back(ldm::verify::parse_suite(a.suite));
  }
  bool ok = true;
  for (auto s : suites) {
    const auto r = ldm::verify::run(s, o);
    ldm::verify::print_report(std::cout, r);
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

struct ReportArgs {
  std::string kind = "profile";
  std::string records;
  std::string out_dir = ".";
  double threshold = 2.776;
};

int run_report(const ReportArgs& a) {
  ldm::ReportOptions o;
  o.threshold = a.threshold;
  for (const auto& p : ldm::report(a.records, ldm::parse_report_kind(a.kind), a.out_dir, o)) {
    std::cerr << "wrote " << p.string() << '\n';
  }
  return 0;
}

struct CurveArgs {
  std::string kind = "rho-sigma";
  std::size_t draws = 5000;
  std::size_t points = 20;
  std::uint64_t seed = 0;
  std::string out;
};

int run_curve(const CurveArgs& a) {
  const ldm::testbed::Vec2 v = ldm::testbed::reference_target();
  ldm::Rng rng(a.seed);
  std::vector<ldm::testbed::CurvePoint> curve;
  if (a.kind == "rho-sigma") {
    curve = ldm::testbed::mean_rho_vs_sigma(v, ldm::testbed::log_grid(1e-3, 1e2, a.points), a.draws, rng);
  } else if (a.kind == "flip-probability") {
    const auto pts = ldm::testbed::sample_disk(a.points, rng);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const ldm::testbed::Vec2 x{pts[i][0], pts[i][1]};
      const double p = ldm::testbed::flip_probability(v, x, 0.3, a.draws, rng);
      curve.push_back({ldm::testbed::true_ldm(v, x), p, std::sqrt(p * (1.0 - p) / static_cast<double>(a.draws))});
    }
    std::sort(curve.begin(), curve.end(), [](const auto& l, const auto& r) { return l.x < r.x; });
  } else if (a.kind == "ldm-vs-stop") {
    // Estimated LDM of a point whose true LDM is 0.01, over stop conditions.
    const auto g = ldm::testbed::linear_model(v);
    const auto mc = ldm::testbed::sample_disk(10000, rng);
    const double alpha = 0.5 * 3.141592653589793 - 0.01 * 3.141592653589793;
    const auto u = ldm::testbed::unit(0.3 + alpha);
    const std::vector<double> x{0.7 * u[0], 0.7 * u[1]};
    for (int s : {1, 2, 5, 10, 20, 50, 100}) {
      const std::size_t reps = std::max<std::size_t>(a.points, 2);
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t r = 0; r < reps; ++r) {
        const ldm::EstimatorConfig cfg{ldm::default_sigma_ladder(), s, mc.size(), ldm::mix64(a.seed + r), true};
        const double e = ldm::estimate_ldm(x, g, mc, cfg).value;
        sum += e;
        sum_sq += e * e;
      }
      const double n = static_cast<double>(reps);
      const double mean = sum / n;
      curve.push_back({static_cast<double>(s), mean, std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / (n - 1.0))});
    }
  } else {
    throw std::invalid_argument("unknown curve '" + a.kind + "'");
  }
  if (a.out.empty() || a.out == "-") {
    ldm::testbed::write_curve_csv(std::cout, curve);
  } else {
    auto f = open_out(a.out);
    ldm::testbed::write_curve_csv(f, curve);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Least-disagree-metric estimation and LDM-S active learning"};
  app.require_subcommand(1);

  DatagenArgs dg;
  auto* datagen = app.add_subcommand("datagen", "Write a synthetic dataset as CSV");
  datagen->add_option("--kind", dg.kind, "disk2d or blobs")->capture_default_str();
  datagen->add_option("--n", dg.n, "Number of rows")->capture_default_str();
  datagen->add_option("--seed", dg.seed)->capture_default_str();
  datagen->add_option("--noise", dg.noise, "Disk2D label-flip rate")->capture_default_str();
  datagen->add_option("--angle", dg.angle, "Disk2D separator normal angle (radians)")->capture_default_str();
  datagen->add_option("--classes", dg.classes, "Blobs: number of clusters")->capture_default_str();
  datagen->add_option("--dim", dg.dim, "Blobs: dimension")->capture_default_str();
  datagen->add_option("--std", dg.cluster_std, "Blobs: cluster standard deviation")->capture_default_str();
  datagen->add_option("--spread", dg.spread, "Blobs: radius of the center circle")->capture_default_str();
  datagen->add_option("--out", dg.out, "Output CSV")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a classifier on a CSV dataset and write a checkpoint");
  train->add_option("--data", tr.data)->required();
  train->add_option("--label-column", tr.label_column)->capture_default_str();
  train->add_option("--kind", tr.kind, "linear2d, logistic or mlp")->capture_default_str();
  train->add_option("--hidden", tr.hidden, "MLP hidden width (default 16)");
  train->add_option("--epochs", tr.epochs)->capture_default_str();
  train->add_option("--batch-size", tr.batch_size)->capture_default_str();
  train->add_option("--optimizer", tr.optimizer)->capture_default_str();
  train->add_option("--lr", tr.lr)->capture_default_str();
  train->add_option("--split", tr.split, "Training fraction")->capture_default_str();
  train->add_option("--seed", tr.seed)->capture_default_str();
  train->add_option("--out", tr.out, "Checkpoint path")->required();

  EstimateArgs es;
  auto* estimate = app.add_subcommand("estimate", "Score a pool CSV against a checkpoint; emit LDM CSV");
  estimate->add_option("--checkpoint", es.checkpoint)->required();
  estimate->add_option("--pool", es.pool, "Pool CSV (headered)")->required();
  estimate->add_option("--mc", es.mc, "Separate Monte-Carlo CSV (default: the pool)");
  estimate->add_option("--drop-column", es.drop_column, "Column to ignore, e.g. labels")->capture_default_str();
  estimate->add_option("--stop", es.stop, "Stop condition")->capture_default_str();
  estimate->add_option("--sigma-step", es.sigma_step)->capture_default_str();
  estimate->add_option("--sigma-count", es.sigma_count)->capture_default_str();
  estimate->add_option("--seed", es.seed)->capture_default_str();
  estimate->add_flag("--independent", es.independent, "Estimate every point with its own draws");
  estimate->add_flag("--no-bias", es.no_bias, "Do not perturb the final-layer bias");
  estimate->add_option("--out", es.out, "Output CSV (default stdout)");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run an active-learning experiment; emit JSONL records");
  run->add_option("--config", ra.config, "Key-value config file");
  run->add_option("--strategy", ra.strategy, "ldm-s, random, entropy, margin or coreset");
  run->add_option("--seed", ra.seed, "Master seed");
  run->add_option("--set", ra.sets, "Override a config key: section.key=value");
  run->add_option("--out", ra.out, "Output JSONL (default stdout)");
  run->add_option("--batch-log", ra.batch_log, "CSV log of selected batches");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("--suite", va.suite,
                     "consistency, flip-ordering, rho-monotone, rank-stability, seeding-dist or all")
      ->capture_default_str();
  verify->add_option("--stop", va.stop, "Override the stop condition");
  verify->add_option("--mc", va.mc, "Override the Monte-Carlo set size");
  verify->add_option("--points", va.points, "Override the number of points");
  verify->add_option("--draws", va.draws, "Override the number of draws");
  verify->add_option("--trials", va.trials, "Override the number of trials");
  verify->add_option("--seed", va.seed)->capture_default_str();

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "Summarize JSONL records");
  report->add_option("--kind", rp.kind, "profile, penalty-matrix or curves")->capture_default_str();
  report->add_option("--records", rp.records)->required();
  report->add_option("--out-dir", rp.out_dir)->capture_default_str();
  report->add_option("--threshold", rp.threshold, "t-score threshold")->capture_default_str();

  CurveArgs cv;
  auto* curve = app.add_subcommand("curve", "Emit a 2D testbed curve as CSV");
  curve->add_option("--kind", cv.kind, "rho-sigma, flip-probability or ldm-vs-stop")->capture_default_str();
  curve->add_option("--draws", cv.draws)->capture_default_str();
  curve->add_option("--points", cv.points)->capture_default_str();
  curve->add_option("--seed", cv.seed)->capture_default_str();
  curve->add_option("--out", cv.out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*datagen) return run_datagen(dg);
    if (*train) return run_train(tr);
    if (*estimate) return run_estimate(es);
    if (*run) return run_run(ra);
    if (*verify) return run_verify(va);
    if (*report) return run_report(rp);
    if (*curve) return run_curve(cv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
