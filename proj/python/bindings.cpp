#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nlborn/bounds.hpp"
#include "nlborn/errors.hpp"
#include "nlborn/experiment.hpp"
#include "nlborn/forward.hpp"
#include "nlborn/grid.hpp"
#include "nlborn/hash.hpp"
#include "nlborn/helmholtz.hpp"
#include "nlborn/inverse.hpp"
#include "nlborn/phantom.hpp"

namespace py = pybind11;
using namespace nlborn;

namespace {

using GridPtr = std::shared_ptr<DiskGrid>;

Eigen::MatrixXd points_matrix(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::MatrixXd m(static_cast<long>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<long>(i)) = pts[i].transpose();
  return m;
}

std::vector<Eigen::Vector2d> points_from(const Eigen::MatrixXd& m) {
  if (m.cols() != 2) throw ShapeError("points must have two columns");
  std::vector<Eigen::Vector2d> pts;
  for (long i = 0; i < m.rows(); ++i) pts.emplace_back(m(i, 0), m(i, 1));
  return pts;
}

py::dict bounds_dict(const BoundsReport& r) {
  return py::module_::import("json").attr("loads")(bounds_to_json(r).dump());
}

ExperimentConfig config_from(const std::string& json) {
  return ExperimentConfig::from_json(Json::parse(json));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nonlinear Born series and inverse Born series on the unit disk";

  auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ResolutionError>(m, "ResolutionError", base.ptr());
  py::register_exception<SingularOperatorError>(m, "SingularOperatorError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<DegenerateRegularizerError>(m, "DegenerateRegularizerError", base.ptr());
  py::register_exception<BoundViolationError>(m, "BoundViolationError", base.ptr());
  py::register_exception<ConfigMismatchError>(m, "ConfigMismatchError", base.ptr());

  // Grid and sensors.
  py::class_<DiskGrid, GridPtr>(m, "DiskGrid")
      .def(py::init([](double h) { return std::make_shared<DiskGrid>(build_disk_grid(h)); }),
           py::arg("target_h"))
      .def_static("from_counts",
                  [](int radial, int angular) {
                    return std::make_shared<DiskGrid>(build_disk_grid(radial, angular));
                  })
      .def_readonly("radial", &DiskGrid::radial)
      .def_readonly("angular", &DiskGrid::angular)
      .def_readonly("h", &DiskGrid::h)
      .def_readonly("radii", &DiskGrid::radii)
      .def_readonly("boundary_nodes", &DiskGrid::boundary_nodes)
      .def_readonly("quad_weights", &DiskGrid::quad_weights)
      .def_readonly("boundary_weights", &DiskGrid::boundary_weights)
      .def_property_readonly("nodes", [](const DiskGrid& g) { return points_matrix(g.nodes); })
      .def_property_readonly("interior_mask",
                             [](const DiskGrid& g) {
                               return std::vector<bool>(g.interior_mask.begin(), g.interior_mask.end());
                             })
      .def_property_readonly("size", &DiskGrid::size)
      .def_property_readonly("boundary_spacing", &DiskGrid::boundary_spacing)
      .def("fingerprint", [](const DiskGrid& g) { return hex_digest(g.fingerprint()); })
      .def("__len__", &DiskGrid::size);

  py::class_<BoundarySource>(m, "BoundarySource")
      .def(py::init([](double angle, double strength, double width, double k) {
             return BoundarySource{angle, strength, width, k};
           }),
           py::arg("angle") = 0.0, py::arg("strength") = 1.0, py::arg("width") = 0.15,
           py::arg("wavenumber") = 1.0)
      .def_readwrite("angle", &BoundarySource::angle)
      .def_readwrite("strength", &BoundarySource::strength)
      .def_readwrite("width", &BoundarySource::width)
      .def_readwrite("wavenumber", &BoundarySource::wavenumber);

  py::class_<SensorLayout>(m, "SensorLayout")
      .def_readonly("sources", &SensorLayout::sources)
      .def_readonly("detector_angles", &SensorLayout::detector_angles)
      .def_property_readonly("n_sources", &SensorLayout::n_sources)
      .def_property_readonly("n_detectors", &SensorLayout::n_detectors);

  m.def("make_sensor_layout", &make_sensor_layout, py::arg("n_sources"), py::arg("n_detectors"),
        py::arg("wavenumbers"), py::arg("strength") = 1.0, py::arg("width") = 0.15);
  m.def("gaussian_boundary_source", [](const BoundarySource& s, const GridPtr& g) {
    return gaussian_boundary_source(s, *g);
  });
  m.def("boundary_trace", [](const GridPtr& g, const std::vector<double>& angles) {
    return Eigen::MatrixXd(boundary_trace(*g, angles));
  });
  m.def("interpolate", [](const GridPtr& g, const Eigen::VectorXd& f, const Eigen::MatrixXd& pts) {
    return interpolate(*g, f, points_from(pts));
  });

  // Helmholtz operator and Green's operator.
  py::class_<WellPosedness>(m, "WellPosedness")
      .def_readonly("ok", &WellPosedness::ok)
      .def_readonly("sigma_min", &WellPosedness::sigma_min)
      .def_readonly("threshold", &WellPosedness::threshold);

  py::class_<HelmholtzOperator, std::shared_ptr<HelmholtzOperator>>(m, "HelmholtzOperator")
      .def(py::init([](const GridPtr& g, double k, double rel) {
             return std::make_shared<HelmholtzOperator>(g, k, rel);
           }),
           py::arg("grid"), py::arg("k"), py::arg("singular_rel_threshold") = 1e-8)
      .def_property_readonly("k", &HelmholtzOperator::k)
      .def_property_readonly("system_matrix", &HelmholtzOperator::system_matrix)
      .def_property_readonly("wellposedness", &HelmholtzOperator::wellposedness)
      .def("apply", &HelmholtzOperator::apply)
      .def("solve", &HelmholtzOperator::solve);

  m.def("solve_background", &solve_background, py::arg("op"), py::arg("g"));

  py::class_<GreensOperator, std::shared_ptr<GreensOperator>>(m, "GreensOperator")
      .def_static("from_matrix", [](double k, const Eigen::MatrixXd& g) {
        return std::make_shared<GreensOperator>(GreensOperator::from_matrix(k, g));
      })
      .def_property_readonly("k", &GreensOperator::k)
      .def_property_readonly("size", &GreensOperator::size)
      .def_property_readonly("matrix", &GreensOperator::matrix)
      .def("apply", &GreensOperator::apply);

  m.def("greens_operator", [](const HelmholtzOperator& op) {
    return std::make_shared<GreensOperator>(greens_operator(op));
  });
  m.def("b_apply", &b_apply, py::arg("greens"), py::arg("v"), py::arg("beta"));
  m.def("compute_mu", &compute_mu);

  // Forward problem.
  py::class_<Nonlinearity>(m, "Nonlinearity")
      .def(py::init([](std::vector<int> degrees, Eigen::VectorXd coefficients) {
             return Nonlinearity{std::move(degrees), std::move(coefficients)};
           }),
           py::arg("degrees"), py::arg("coefficients"))
      .def_static("cubic", &Nonlinearity::cubic)
      .def_readwrite("degrees", &Nonlinearity::degrees)
      .def_readwrite("coefficients", &Nonlinearity::coefficients)
      .def("sup_norm", &Nonlinearity::sup_norm);

  py::class_<FixedPointResult>(m, "FixedPointResult")
      .def_readonly("u", &FixedPointResult::u)
      .def_readonly("scattered", &FixedPointResult::scattered)
      .def_readonly("iterations", &FixedPointResult::iterations)
      .def_readonly("residual_history", &FixedPointResult::residual_history)
      .def_readonly("admissible_radius", &FixedPointResult::admissible_radius)
      .def_readonly("admissible", &FixedPointResult::admissible)
      .def_readonly("within_ball", &FixedPointResult::within_ball);

  m.def(
      "fixed_point_solve",
      [](const GreensOperator& g, const Field& u0, const Nonlinearity& nl, std::optional<double> mu,
         double tol, int max_iter) { return fixed_point_solve(g, u0, nl, mu, {tol, max_iter}); },
      py::arg("greens"), py::arg("u0"), py::arg("nonlinearity"), py::arg("mu") = py::none(),
      py::arg("tol") = 1e-10, py::arg("max_iter") = 200);

  py::class_<BornSum>(m, "BornSum")
      .def_readonly("u", &BornSum::u)
      .def_readonly("term_norms", &BornSum::term_norms);
  m.def("born_sum", &born_sum, py::arg("max_order"), py::arg("u0"), py::arg("nonlinearity"),
        py::arg("greens"));
  m.def("born_term", [](int n, const Field& u0, const Nonlinearity& nl, const GreensOperator& g) {
    return born_term_equal_args(n, u0, nl, g).field;
  });

  py::class_<ForwardModel, std::shared_ptr<ForwardModel>> fm(m, "ForwardModel");
  py::enum_<ForwardModel::GreensMode>(fm, "GreensMode")
      .value("Dense", ForwardModel::GreensMode::Dense)
      .value("Implicit", ForwardModel::GreensMode::Implicit);
  fm.def(py::init([](const GridPtr& g, const SensorLayout& layout, std::vector<int> degrees,
                     ForwardModel::GreensMode mode) {
           return std::make_shared<ForwardModel>(ForwardModel::build(g, layout, std::move(degrees), mode));
         }),
         py::arg("grid"), py::arg("layout"), py::arg("degrees") = std::vector<int>{3},
         py::arg("mode") = ForwardModel::GreensMode::Dense)
      .def_property_readonly("n_sources", &ForwardModel::n_sources)
      .def_property_readonly("n_detectors", &ForwardModel::n_detectors)
      .def_property_readonly("n_nodes", &ForwardModel::n_nodes)
      .def_property_readonly("n_unknowns", &ForwardModel::n_unknowns)
      .def_property_readonly("degrees", &ForwardModel::degrees)
      .def("background", [](const ForwardModel& f, int s) { return f.sources().at(static_cast<std::size_t>(s)).u0; })
      .def("background_norm", &ForwardModel::background_norm)
      .def("mu_per_wavenumber", &ForwardModel::mu_per_wavenumber)
      .def("k_n_apply", [](const ForwardModel& f, const std::vector<Eigen::VectorXd>& args) {
        return f.k_n_apply(args);
      });

  py::enum_<SolverChoice>(m, "Solver")
      .value("FixedPoint", SolverChoice::FixedPoint)
      .value("Born", SolverChoice::Born);

  py::class_<ScatteringData>(m, "ScatteringData")
      .def_readonly("values", &ScatteringData::values)
      .def_readonly("wavenumbers", &ScatteringData::wavenumbers)
      .def_readonly("failed_sources", &ScatteringData::failed_sources)
      .def_readonly("failures", &ScatteringData::failures)
      .def_readonly("iterations", &ScatteringData::iterations);
  m.def("scattering_data",
        [](const ForwardModel& f, const Nonlinearity& nl, SolverChoice s, int born_order) {
          return scattering_data(f, nl, s, born_order);
        },
        py::arg("model"), py::arg("nonlinearity"), py::arg("solver") = SolverChoice::FixedPoint,
        py::arg("born_order") = 10);

  // Bounds.
  py::enum_<QPolynomial>(m, "QPolynomial")
      .value("PresentDegrees", QPolynomial::PresentDegrees)
      .value("FullRange", QPolynomial::FullRange);
  py::class_<SeriesConstants>(m, "SeriesConstants")
      .def_readonly("nu", &SeriesConstants::nu)
      .def_readonly("K", &SeriesConstants::K);
  py::class_<InverseRadius>(m, "InverseRadius")
      .def_readonly("C", &InverseRadius::C)
      .def_readonly("r", &InverseRadius::r)
      .def_readonly("coupling", &InverseRadius::coupling);
  py::class_<ErrorBound>(m, "ErrorBound")
      .def_readonly("hypothesis_holds", &ErrorBound::hypothesis_holds)
      .def_readonly("threshold", &ErrorBound::threshold)
      .def_readonly("margin", &ErrorBound::margin)
      .def_readonly("prefactor", &ErrorBound::prefactor)
      .def_readonly("bound", &ErrorBound::bound);
  py::class_<GeneratingFunctionCheck>(m, "GeneratingFunctionCheck")
      .def_readonly("residual", &GeneratingFunctionCheck::residual)
      .def_readonly("partial_sum", &GeneratingFunctionCheck::partial_sum)
      .def_readonly("inside_radius", &GeneratingFunctionCheck::inside_radius);

  m.def("nu_sequence", &nu_sequence, py::arg("nu0"), py::arg("degrees"), py::arg("n_max"));
  m.def("cubic_constants", &cubic_constants);
  m.def("general_constants", &general_constants, py::arg("nu0"), py::arg("degrees"),
        py::arg("q") = QPolynomial::PresentDegrees);
  m.def("generating_function_residual", &generating_function_residual);
  m.def("inverse_radius", &inverse_radius, py::arg("mu"), py::arg("nu0"), py::arg("k1_norm"),
        py::arg("degrees") = std::vector<int>{3}, py::arg("q") = QPolynomial::PresentDegrees);
  m.def("error_bound", &error_bound, py::arg("mu"), py::arg("nu0"), py::arg("k1_norm"), py::arg("M"),
        py::arg("residual"), py::arg("degrees") = std::vector<int>{3},
        py::arg("q") = QPolynomial::PresentDegrees);

  // Inverse problem.
  m.def("assemble_k1", [](const ForwardModel& f) { return assemble_k1(f).matrix; });

  py::class_<Regularizer>(m, "Regularizer")
      .def(py::init<const Eigen::MatrixXd&, double, bool>(), py::arg("k1"), py::arg("rcond"),
           py::arg("row_normalize") = false)
      .def_property_readonly("rank", &Regularizer::rank)
      .def_property_readonly("rcond", &Regularizer::rcond)
      .def_property_readonly("singular_values", &Regularizer::singular_values)
      .def_property_readonly("matrix", &Regularizer::matrix)
      .def("apply", &Regularizer::apply)
      .def("norm", [](const Regularizer& r) { return operator_norm(r); });

  py::class_<Reconstruction>(m, "Reconstruction")
      .def_readonly("corrections", &Reconstruction::corrections)
      .def_readonly("partial_sums", &Reconstruction::partial_sums)
      .def_readonly("correction_norms", &Reconstruction::correction_norms)
      .def_readonly("diverged", &Reconstruction::diverged)
      .def_readonly("diverged_at", &Reconstruction::diverged_at)
      .def_property_readonly("estimate", &Reconstruction::estimate);
  m.def("ibs_reconstruct",
        [](const Eigen::MatrixXd& data, const Regularizer& reg, const ForwardModel& f, int order,
           double guard) { return ibs_reconstruct(data, reg, f, {order, guard}); },
        py::arg("data"), py::arg("regularizer"), py::arg("model"), py::arg("order") = 4,
        py::arg("divergence_guard") = 1e6);

  // Experiment driver; configs travel as JSON text.
  m.def("config_defaults", [] { return ExperimentConfig().to_json().dump(); });
  m.def("config_hash", [](const std::string& j) { return config_from(j).hash(); });
  m.def("run_forward", [](const std::string& j) {
    const ForwardRun r = run_forward(config_from(j));
    return py::make_tuple(r.data.values, bounds_dict(r.bounds), r.exit_code);
  });
  m.def("run_reconstruct", [](const std::string& j, std::optional<std::string> data_dir) {
    std::optional<std::filesystem::path> dd;
    if (data_dir) dd = *data_dir;
    const ReconstructRun r = run_reconstruct(config_from(j), dd);
    py::dict out;
    out["estimate"] = r.reconstruction.estimate();
    out["correction_norms"] = r.reconstruction.correction_norms;
    out["projection_distance"] = r.projection_distance;
    out["projection"] = r.projection;
    out["truth"] = r.truth;
    out["rank"] = r.rank;
    out["diverged"] = r.reconstruction.diverged;
    out["bounds"] = bounds_dict(r.bounds);
    out["exit_code"] = r.exit_code;
    return out;
  }, py::arg("config"), py::arg("data_dir") = py::none());
  m.def("run_bounds", [](const std::string& j, std::optional<std::string> data_dir) {
    std::optional<std::filesystem::path> dd;
    if (data_dir) dd = *data_dir;
    return bounds_dict(run_bounds(config_from(j), dd));
  }, py::arg("config"), py::arg("data_dir") = py::none());

  m.def("phantom_names", [] {
    std::vector<std::string> names;
    for (const auto& [name, _] : builtin_phantoms()) names.push_back(name);
    return names;
  });
  m.def("sample_phantom", [](const std::string& name, const GridPtr& g) {
    return sample_phantom(find_phantom(name), *g);
  });
}
