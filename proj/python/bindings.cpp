#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

#include "kpstorm/baseline.hpp"
#include "kpstorm/datagen.hpp"
#include "kpstorm/error.hpp"
#include "kpstorm/eval.hpp"
#include "kpstorm/forest.hpp"
#include "kpstorm/fusion.hpp"
#include "kpstorm/ingest.hpp"
#include "kpstorm/model_io.hpp"
#include "kpstorm/pca.hpp"

namespace py = pybind11;
using namespace kpstorm;

namespace {

Timestamp to_time(const std::string& text) {
  auto t = Timestamp::parse(text);
  if (!t) throw Error(ErrorKind::kBadTimestamp, "cannot parse timestamp '" + text + "'");
  return *t;
}

std::vector<std::string> time_strings(const std::vector<Timestamp>& times) {
  std::vector<std::string> out;
  out.reserve(times.size());
  for (auto t : times) out.push_back(t.to_string());
  return out;
}

py::array_t<double> matrix(const FusedDataset& d) {
  py::array_t<double> out({d.n_rows(), d.n_features()});
  std::copy(d.values().begin(), d.values().end(), out.mutable_data());
  return out;
}

FusedDataset make_dataset(std::vector<std::string> names,
                          py::array_t<double, py::array::c_style | py::array::forcecast> x,
                          std::vector<double> y, const std::vector<std::string>& times) {
  if (x.ndim() != 2)
    throw Error(ErrorKind::kDimensionMismatch, "features must be a 2-D array");
  std::vector<double> values(x.data(), x.data() + x.size());
  std::vector<Timestamp> stamps;
  for (const auto& t : times) stamps.push_back(to_time(t));
  if (static_cast<std::size_t>(x.shape(1)) != names.size())
    throw Error(ErrorKind::kDimensionMismatch, "column count differs from feature names");
  return FusedDataset(std::move(names), std::move(values), std::move(y), std::move(stamps));
}

std::vector<double> rows_predict(const auto& model, const auto& predictor,
                                 py::array_t<double, py::array::c_style | py::array::forcecast> x) {
  if (x.ndim() == 1) x = x.reshape({py::ssize_t{1}, x.shape(0)});
  if (x.ndim() != 2)
    throw Error(ErrorKind::kDimensionMismatch, "features must be a 1-D or 2-D array");
  const auto p = static_cast<std::size_t>(x.shape(1));
  std::vector<double> out;
  for (py::ssize_t i = 0; i < x.shape(0); ++i)
    out.push_back(predictor(model, std::span<const double>(x.data() + i * p, p)));
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["label"] = r.label;
  d["n"] = r.n;
  d["accuracy_within_1"] = r.accuracy_within_1;
  d["mean_abs_error"] = r.mean_abs_error;
  d["per_bin_hits"] = std::vector<std::size_t>(r.per_bin_hits.begin(), r.per_bin_hits.end());
  d["n_storm"] = r.n_storm;
  d["storm_accuracy_within_1"] = r.storm_accuracy_within_1;
  d["n_train"] = r.n_train;
  d["n_features"] = r.n_features;
  return d;
}

ExperimentPlan make_plan(const std::string& label, std::uint64_t seed, const std::string& cutoff,
                         const LagSpec& lag_spec, const ForestConfig& forest,
                         double downsample_threshold) {
  ExperimentPlan base;
  base.seed = seed;
  base.cutoff = to_time(cutoff);
  base.lag_spec = lag_spec;
  base.forest = forest;
  base.downsample_threshold = downsample_threshold;
  return ExperimentPlan::from_label(label, base);
}

}  // namespace

PYBIND11_MODULE(_kpstorm, m) {
  m.doc() = "Kp forecasting toolkit: fusion, random forest, baselines, PCA and evaluation";

  static py::exception<Error> error(m, "KpstormError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<LagSpec>(m, "LagSpec")
      .def(py::init([](int solar_lookback_minutes, int solar_step_minutes, int dst_lookback_hours,
                       int kp_lookback_hours, int horizon_hours) {
             LagSpec s{solar_lookback_minutes, solar_step_minutes, dst_lookback_hours,
                       kp_lookback_hours, horizon_hours};
             s.validate();
             return s;
           }),
           py::arg("solar_lookback_minutes") = 540, py::arg("solar_step_minutes") = 5,
           py::arg("dst_lookback_hours") = 3, py::arg("kp_lookback_hours") = 24,
           py::arg("horizon_hours") = 3)
      .def_readonly("solar_lookback_minutes", &LagSpec::solar_wind_lookback_minutes)
      .def_readonly("solar_step_minutes", &LagSpec::solar_wind_step_minutes)
      .def_readonly("dst_lookback_hours", &LagSpec::dst_lookback_hours)
      .def_readonly("kp_lookback_hours", &LagSpec::kp_lookback_hours)
      .def_readonly("horizon_hours", &LagSpec::horizon_hours)
      .def_property_readonly("feature_count", &LagSpec::feature_count)
      .def_property_readonly("feature_names", &LagSpec::feature_names);

  py::class_<SourceSeries>(m, "Sources", "Aligned solar-wind, Dst and Kp series");

  m.def("load_sources", &load_sources, py::arg("solar"), py::arg("dst"), py::arg("kp"));
  m.def(
      "synth",
      [](std::uint64_t seed, int days, double storm_rate, double noise) {
        return generate(SynthConfig{seed, days, storm_rate, noise}).sources();
      },
      py::arg("seed") = 7, py::arg("days") = 120, py::arg("storm_rate") = 0.12,
      py::arg("noise") = 1.0, "Synthetic sources from the seeded storm simulator");
  m.def(
      "write_synth",
      [](const std::string& out_dir, std::uint64_t seed, int days, double storm_rate,
         double noise) {
        const auto d = generate(SynthConfig{seed, days, storm_rate, noise});
        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        write_file((dir / "solar_wind.csv").string(), format_solar_wind(d.solar));
        write_file((dir / "dst.csv").string(), format_dst(d.dst));
        write_file((dir / "kp.csv").string(), format_kp(d.kp));
      },
      py::arg("out_dir"), py::arg("seed") = 7, py::arg("days") = 120,
      py::arg("storm_rate") = 0.12, py::arg("noise") = 1.0);

  py::class_<FusedDataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("feature_names"), py::arg("x"), py::arg("y"),
           py::arg("row_times"))
      .def_property_readonly("n_rows", &FusedDataset::n_rows)
      .def_property_readonly("n_features", &FusedDataset::n_features)
      .def_property_readonly("feature_names", &FusedDataset::feature_names)
      .def_property_readonly("x", &matrix)
      .def_property_readonly("y", [](const FusedDataset& d) {
        return py::array_t<double>(d.targets().size(), d.targets().data());
      })
      .def_property_readonly("row_times",
                             [](const FusedDataset& d) { return time_strings(d.row_times()); })
      .def("to_csv", &format_dataset)
      .def_static("from_csv", [](const std::string& text) { return parse_dataset(text); })
      .def("split", [](const FusedDataset& d, const std::string& cutoff) {
        return split_by_time(d, to_time(cutoff));
      }, py::arg("cutoff"))
      .def("select", [](const FusedDataset& d, const std::vector<std::string>& names) {
        return select_features(d, std::span<const std::string>(names));
      }, py::arg("names"))
      .def("downsample", &downsample_low_kp, py::arg("factor"), py::arg("threshold") = 4.0,
           py::arg("seed") = 0)
      .def("__len__", &FusedDataset::n_rows);

  m.def("fuse", &fuse, py::arg("sources"), py::arg("lag_spec") = LagSpec{});

  py::class_<ForestConfig>(m, "ForestConfig")
      .def(py::init([](int n_trees, std::optional<int> mtry, int min_leaf, std::uint64_t seed,
                       bool bootstrap) {
             ForestConfig c{n_trees, mtry, min_leaf, seed, bootstrap};
             c.validate();
             return c;
           }),
           py::arg("n_trees") = 100, py::arg("mtry") = py::none(), py::arg("min_leaf") = 5,
           py::arg("seed") = 0, py::arg("bootstrap") = true)
      .def_readonly("n_trees", &ForestConfig::n_trees)
      .def_readonly("mtry", &ForestConfig::mtry)
      .def_readonly("min_leaf", &ForestConfig::min_leaf)
      .def_readonly("seed", &ForestConfig::seed)
      .def_readonly("bootstrap", &ForestConfig::bootstrap);

  py::class_<ForestModel>(m, "ForestModel")
      .def_property_readonly("feature_names", [](const ForestModel& f) { return f.feature_names; })
      .def_property_readonly("importances", [](const ForestModel& f) { return f.importances; })
      .def_property_readonly("oob_mse", [](const ForestModel& f) { return f.oob_mse; })
      .def_property_readonly("n_trees", [](const ForestModel& f) { return f.trees.size(); })
      .def("predict", [](const ForestModel& f, const FusedDataset& d) { return predict(f, d); })
      .def("predict", [](const ForestModel& f, py::array_t<double, py::array::c_style | py::array::forcecast> x) {
        return rows_predict(f, [](const ForestModel& mm, std::span<const double> r) { return predict(mm, r); }, x);
      })
      .def("ranking", [](const ForestModel& f) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& r : importance(f).ranked) out.emplace_back(r.name, r.importance);
        return out;
      }, "(feature, importance) pairs, most important first")
      .def("top_k", [](const ForestModel& f, std::size_t k) { return top_k(importance(f), k).names; })
      .def("to_json", [](const ForestModel& f) { return save_model(f); })
      .def_static("from_json", [](const std::string& s) { return load_forest(s); })
      .def(py::self == py::self);

  m.def("fit_forest", &fit_forest, py::arg("data"), py::arg("config") = ForestConfig{},
        py::arg("threads") = 0, py::call_guard<py::gil_scoped_release>());

  py::class_<LinearModel>(m, "LinearModel")
      .def_readonly("intercept", &LinearModel::intercept)
      .def_readonly("coefficients", &LinearModel::coefficients)
      .def_readonly("feature_names", &LinearModel::feature_names)
      .def("predict", [](const LinearModel& l, const FusedDataset& d) { return predict_linear(l, d); })
      .def("predict", [](const LinearModel& l, py::array_t<double, py::array::c_style | py::array::forcecast> x) {
        return rows_predict(l, [](const LinearModel& mm, std::span<const double> r) { return predict_linear(mm, r); }, x);
      })
      .def("to_json", [](const LinearModel& l) { return save_model(l); })
      .def_static("from_json", [](const std::string& s) { return load_linear(s); })
      .def(py::self == py::self);

  m.def("fit_linear", &fit_linear, py::arg("data"));

  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("mean", &PcaModel::mean)
      .def_readonly("scale", &PcaModel::scale)
      .def_readonly("directions", &PcaModel::directions)
      .def_readonly("eigenvalues", &PcaModel::eigenvalues)
      .def_readonly("explained_variance_ratio", &PcaModel::explained_variance_ratio)
      .def("project", [](const PcaModel& p, const FusedDataset& d) { return project(p, d); });

  m.def("fit_pca", &fit_pca, py::arg("data"), py::arg("k") = 2, py::arg("standardize") = false);
  m.def("kp_label", &kp_label);

  m.def(
      "accuracy_within_1",
      [](const std::vector<double>& predicted, const std::vector<double>& actual) {
        return accuracy_within_1(predicted, actual);
      },
      py::arg("predicted"), py::arg("actual"));

  m.def(
      "run_experiment",
      [](const SourceSeries& sources, const std::string& label, std::uint64_t seed,
         const std::string& cutoff, const LagSpec& lag_spec, const ForestConfig& forest,
         double downsample_threshold, unsigned threads) {
        const auto plan = make_plan(label, seed, cutoff, lag_spec, forest, downsample_threshold);
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(plan, sources, threads);
        }
        return report_dict(r);
      },
      py::arg("sources"), py::arg("label") = "RF", py::arg("seed") = 0,
      py::arg("cutoff") = "2021-10-01T00:00Z", py::arg("lag_spec") = LagSpec{},
      py::arg("forest") = ForestConfig{}, py::arg("downsample_threshold") = 4.0,
      py::arg("threads") = 0, "One plan, described by its label (e.g. 'RF top-50 L=2')");

  m.def(
      "compare",
      [](const SourceSeries& sources, std::vector<std::string> labels, std::uint64_t seed,
         const std::string& cutoff, const LagSpec& lag_spec, const ForestConfig& forest,
         double downsample_threshold, unsigned threads) {
        if (labels.empty())
          labels = {"RF", "RF top-100", "RF top-50", "RF top-50 L=2", "Linear"};
        std::vector<ExperimentPlan> plans;
        for (const auto& l : labels)
          plans.push_back(make_plan(l, seed, cutoff, lag_spec, forest, downsample_threshold));
        std::vector<ComparisonRow> rows;
        {
          py::gil_scoped_release release;
          rows = comparison_table(plans, sources, threads);
        }
        py::list out;
        for (const auto& r : rows) out.append(report_dict(r.report));
        return out;
      },
      py::arg("sources"), py::arg("labels") = std::vector<std::string>{}, py::arg("seed") = 0,
      py::arg("cutoff") = "2021-10-01T00:00Z", py::arg("lag_spec") = LagSpec{},
      py::arg("forest") = ForestConfig{}, py::arg("downsample_threshold") = 4.0,
      py::arg("threads") = 0);
}
