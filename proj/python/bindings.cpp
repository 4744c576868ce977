#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "ldm/acquisition.hpp"
#include "ldm/dataset.hpp"
#include "ldm/estimator.hpp"
#include "ldm/experiment.hpp"
#include "ldm/model.hpp"
#include "ldm/stats.hpp"
#include "ldm/verify.hpp"

namespace py = pybind11;
using namespace ldm;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<int, py::array::c_style | py::array::forcecast>;
using Vector = py::array_t<double, py::array::c_style | py::array::forcecast>;

PointSet to_points(const Matrix& x) {
  if (x.ndim() != 2) throw std::invalid_argument("expected a 2-D array of points");
  const auto n = static_cast<std::size_t>(x.shape(0));
  const auto d = static_cast<std::size_t>(x.shape(1));
  return PointSet(d, std::vector<double>(x.data(), x.data() + n * d));
}

py::array_t<double> to_array(const PointSet& p) {
  py::array_t<double> out({p.size(), p.dim()});
  std::copy(p.values().begin(), p.values().end(), out.mutable_data());
  return out;
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Vector& v) {
  if (v.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return {v.data(), v.data() + v.size()};
}

Dataset to_dataset(const Matrix& x, const Labels& y) {
  Dataset d{to_points(x), {y.data(), y.data() + y.size()}, 0};
  if (d.y.size() != d.x.size()) throw std::invalid_argument("x and y have different lengths");
  for (int label : d.y) {
    if (label < 0) throw std::invalid_argument("labels must be non-negative");
    d.num_classes = std::max(d.num_classes, label + 1);
  }
  return d;
}

py::dict record_dict(const ExperimentRecord& r) {
  py::dict d;
  d["algorithm"] = r.algorithm;
  d["dataset"] = r.dataset;
  d["repetition"] = r.repetition;
  d["step"] = r.step;
  d["labeled_count"] = r.labeled_count;
  d["test_accuracy"] = r.test_accuracy;
  d["wall_time_seconds"] = r.wall_time_seconds;
  d["seed"] = r.seed;
  d["config_hash"] = r.config_hash;
  return d;
}

stats::ResultTable table_from(const std::vector<py::dict>& records) {
  stats::ResultTable t;
  for (const auto& r : records) {
    const auto acc = r.contains("test_accuracy") ? r["test_accuracy"] : r["accuracy"];
    t.add({r["algorithm"].cast<std::string>(), r["dataset"].cast<std::string>(), r["repetition"].cast<int>(),
           r["step"].cast<int>(), acc.cast<double>()});
  }
  return t;
}

}  // namespace

PYBIND11_MODULE(_ldm, m) {
  m.doc() = "LDM estimation and LDM-S batch active learning";

  py::class_<TrainedModel>(m, "Model")
      .def_property_readonly("kind", [](const TrainedModel& t) { return std::string(to_string(t.spec().kind)); })
      .def_property_readonly("input_dim", [](const TrainedModel& t) { return t.spec().input_dim; })
      .def_property_readonly("num_classes", [](const TrainedModel& t) { return t.spec().num_classes; })
      .def_property_readonly("params", [](const TrainedModel& t) { return t.params().values; })
      .def("predict",
           [](const TrainedModel& t, const Matrix& x) {
             const auto p = predict_all(t, to_points(x));
             return to_array(p);
           })
      .def("predict_proba",
           [](const TrainedModel& t, const Matrix& x) {
             const auto pts = to_points(x);
             PointSet out(static_cast<std::size_t>(t.spec().num_classes));
             for (std::size_t i = 0; i < pts.size(); ++i) out.push_back(predict_proba(t, pts[i]));
             return to_array(out);
           })
      .def("features", [](const TrainedModel& t, const Matrix& x) { return to_array(features_all(t, to_points(x))); })
      .def("accuracy", [](const TrainedModel& t, const Matrix& x, const Labels& y) { return accuracy(t, to_dataset(x, y)); })
      .def("save",
           [](const TrainedModel& t, const std::filesystem::path& path) {
             std::ofstream out(path);
             if (!out) throw std::runtime_error("cannot write " + path.string());
             save_checkpoint(t, out);
           })
      .def_static("load", [](const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read " + path.string());
        return load_checkpoint(in);
      });

  m.def(
      "generate",
      [](const std::string& kind, std::size_t n, std::uint64_t seed, double separator_angle, double label_noise,
         int classes, std::size_t dim, double cluster_std, double spread) {
        GeneratorParams p;
        p.kind = parse_generator_kind(kind);
        p.n = n;
        p.separator_angle = separator_angle;
        p.label_noise = label_noise;
        p.classes = classes;
        p.dim = dim;
        p.cluster_std = cluster_std;
        p.spread = spread;
        const auto d = generate(p, seed);
        return py::make_tuple(to_array(d.x), to_array(d.y));
      },
      py::arg("kind"), py::arg("n"), py::arg("seed") = 0, py::arg("separator_angle") = 0.7853981633974483,
      py::arg("label_noise") = 0.0, py::arg("classes") = 3, py::arg("dim") = 2, py::arg("cluster_std") = 1.0,
      py::arg("spread") = 3.0, "Synthetic dataset as (x, y).");

  m.def(
      "train",
      [](const Matrix& x, const Labels& y, const std::string& kind, std::optional<std::size_t> hidden, int epochs,
         std::size_t batch_size, const std::string& optimizer, double lr, std::uint64_t seed,
         std::optional<int> num_classes) {
        auto data = to_dataset(x, y);
        if (num_classes) data.num_classes = *num_classes;
        ModelSpec spec;
        spec.kind = parse_model_kind(kind);
        spec.input_dim = data.x.dim();
        spec.num_classes = std::max(data.num_classes, 2);
        spec.hidden_dim = hidden;
        spec.seed = seed;
        data.num_classes = spec.num_classes;
        TrainConfig cfg{epochs, batch_size, parse_optimizer(optimizer), lr, seed};
        py::gil_scoped_release release;
        return train(data, spec, cfg);
      },
      py::arg("x"), py::arg("y"), py::arg("kind") = "logistic", py::arg("hidden") = py::none(),
      py::arg("epochs") = 100, py::arg("batch_size") = 32, py::arg("optimizer") = "adam", py::arg("lr") = 0.01,
      py::arg("seed") = 0, py::arg("num_classes") = py::none());

  m.def("sigma_ladder", &default_sigma_ladder, py::arg("step") = 0.1, py::arg("count") = 51);

  m.def(
      "estimate_ldm_pool",
      [](const TrainedModel& g, const Matrix& pool, int stop, std::uint64_t seed, std::optional<Matrix> mc_set,
         std::optional<std::vector<double>> sigmas, bool perturb_bias, bool independent) {
        const auto pts = to_points(pool);
        std::optional<PointSet> mc;
        if (mc_set) mc = to_points(*mc_set);
        EstimatorConfig cfg{sigmas ? *sigmas : default_sigma_ladder(), stop, mc ? mc->size() : pts.size(), seed,
                            perturb_bias};
        std::vector<LdmEstimate> est;
        {
          py::gil_scoped_release release;
          est = independent ? estimate_ldm_independent(pts, g, cfg, mc) : estimate_ldm_pool(pts, g, cfg, mc);
        }
        py::array_t<double> value(est.size());
        py::array_t<std::uint64_t> drawn(est.size()), found(est.size());
        for (std::size_t i = 0; i < est.size(); ++i) {
          value.mutable_at(i) = est[i].value;
          drawn.mutable_at(i) = est[i].hypotheses_drawn;
          found.mutable_at(i) = est[i].disagreements_found;
        }
        py::dict out;
        out["ldm"] = value;
        out["hypotheses_drawn"] = drawn;
        out["disagreements_found"] = found;
        return out;
      },
      py::arg("model"), py::arg("pool"), py::arg("stop") = 10, py::arg("seed") = 0, py::arg("mc_set") = py::none(),
      py::arg("sigmas") = py::none(), py::arg("perturb_bias") = true, py::arg("independent") = false,
      "LDM estimate for every pool row; returns a dict of arrays.");

  m.def(
      "compute_weights",
      [](const Vector& ldm_values, std::size_t q) {
        const auto w = compute_weights(to_vector(ldm_values), q);
        return py::make_tuple(to_array(w.gamma), w.q_partition, w.threshold);
      },
      py::arg("ldm"), py::arg("q"), "Returns (gamma, q_partition, threshold).");

  m.def(
      "ldm_seeded_select",
      [](const Matrix& features, const Vector& ldm_values, std::size_t q, std::uint64_t seed) {
        Rng rng(seed);
        return ldm_seeded_select(to_points(features), to_vector(ldm_values), q, rng).indices;
      },
      py::arg("features"), py::arg("ldm"), py::arg("q"), py::arg("seed") = 0,
      "Pool indices in selection order.");

  m.def(
      "run_experiment",
      [](std::optional<std::filesystem::path> config, const std::map<std::string, std::string>& overrides,
         std::optional<std::string> strategy, std::optional<std::uint64_t> seed) {
        KeyValues kv = config ? read_key_values(*config) : KeyValues{};
        for (const auto& [k, v] : overrides) kv[k] = v;
        auto cfg = apply_config(ExperimentConfig{}, kv);
        if (strategy) cfg.strategy = parse_strategy(*strategy);
        if (seed) cfg.master_seed = *seed;
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = al_experiment(cfg);
        }
        py::list records;
        for (const auto& rec : r.records) records.append(record_dict(rec));
        return records;
      },
      py::arg("config") = py::none(), py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("strategy") = py::none(), py::arg("seed") = py::none(),
      "Active-learning run; returns one dict per (repetition, step).");

  m.def(
      "verify",
      [](const std::string& suite, std::optional<int> stop, std::optional<std::size_t> mc,
         std::optional<std::size_t> points, std::optional<std::size_t> draws, std::optional<std::size_t> trials,
         std::uint64_t seed) {
        verify::Options o{stop, mc, points, draws, trials, seed};
        verify::Report r;
        {
          py::gil_scoped_release release;
          r = verify::run(verify::parse_suite(suite), o);
        }
        py::dict out;
        out["suite"] = std::string(verify::to_string(r.suite));
        out["passed"] = r.passed;
        py::dict metrics;
        for (const auto& mt : r.metrics) {
          metrics[py::str(mt.name)] =
              py::dict(py::arg("value") = mt.value, py::arg("comparison") = mt.comparison,
                       py::arg("threshold") = mt.threshold, py::arg("passed") = mt.passed);
        }
        out["metrics"] = metrics;
        out["note"] = r.note;
        return out;
      },
      py::arg("suite"), py::arg("stop") = py::none(), py::arg("mc") = py::none(), py::arg("points") = py::none(),
      py::arg("draws") = py::none(), py::arg("trials") = py::none(), py::arg("seed") = 20240501);

  m.def("spearman", [](const Vector& a, const Vector& b) { return stats::spearman(to_vector(a), to_vector(b)); });
  m.def("paired_t_score",
        [](const Vector& a, const Vector& b) { return stats::paired_t_score(to_vector(a), to_vector(b)); });
  m.def(
      "penalty_matrix",
      [](const std::vector<py::dict>& records, double threshold) {
        const auto p = stats::penalty_matrix(table_from(records), threshold);
        return py::make_tuple(p.algorithms, p.entries, p.column_means);
      },
      py::arg("records"), py::arg("threshold") = 2.776, "Returns (algorithms, entries, column_means).");
  m.def(
      "performance_profile",
      [](const std::vector<py::dict>& records, const std::vector<double>& deltas) {
        py::dict out;
        for (const auto& c : stats::performance_profile(table_from(records), deltas)) out[py::str(c.algorithm)] = c.values;
        return out;
      },
      py::arg("records"), py::arg("deltas"));
}
