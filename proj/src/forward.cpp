#include "nlborn/forward.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "nlborn/bounds.hpp"
#include "nlborn/compositions.hpp"
#include "nlborn/errors.hpp"

namespace nlborn {

void validate_degrees(const std::vector<int>& degrees) {
  if (degrees.empty()) throw ParameterError("nonlinearity needs at least one degree");
  std::set<int> seen;
  for (int l : degrees) {
    if (l < 2) throw ParameterError("nonlinearity degrees must be >= 2");
    if (!seen.insert(l).second) throw ParameterError("nonlinearity degrees must be distinct");
  }
}

Nonlinearity Nonlinearity::cubic(Field beta) {
  return Nonlinearity{{3}, std::move(beta)};
}

Nonlinearity Nonlinearity::zero(std::vector<int> degrees, int n_nodes) {
  const auto n = static_cast<long>(degrees.size()) * n_nodes;
  return Nonlinearity{std::move(degrees), Eigen::VectorXd::Zero(n)};
}

int Nonlinearity::n_nodes() const {
  return degrees.empty() ? 0 : static_cast<int>(coefficients.size() / static_cast<long>(degrees.size()));
}

int Nonlinearity::max_degree() const {
  return degrees.empty() ? 0 : *std::max_element(degrees.begin(), degrees.end());
}

Eigen::VectorXd::ConstSegmentReturnType Nonlinearity::block(int d) const {
  const int n = n_nodes();
  return coefficients.segment(static_cast<long>(d) * n, n);
}

Eigen::VectorXd::SegmentReturnType Nonlinearity::block(int d) {
  const int n = n_nodes();
  return coefficients.segment(static_cast<long>(d) * n, n);
}

double Nonlinearity::sup_norm() const {
  return coefficients.size() == 0 ? 0.0 : coefficients.cwiseAbs().maxCoeff();
}

void Nonlinearity::validate(int nodes) const {
  validate_degrees(degrees);
  if (coefficients.size() != static_cast<long>(degrees.size()) * nodes) {
    throw ShapeError("nonlinearity coefficients do not match the grid");
  }
  if (!coefficients.allFinite()) throw ParameterError("nonlinearity coefficients must be finite");
}

namespace {

Field apply_t_scattered(const GreensOperator& gop, const Field& u,
                        const Nonlinearity& nl) {
  Field s = Field::Zero(u.size());
  for (std::size_t d = 0; d < nl.degrees.size(); ++d) {
    const Field power = u.array().pow(nl.degrees[d]).matrix();
    s += b_apply(gop, power, nl.block(static_cast<int>(d)));
  }
  return s;
}

double sup_norm(const Field& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

FixedPointResult fixed_point_solve(const GreensOperator& gop, const Field& u0,
                                   const Nonlinearity& nl, std::optional<double> mu,
                                   const FixedPointOptions& opts) {
  if (u0.size() != gop.size()) throw ShapeError("fixed_point_solve: u0 size mismatch");
  nl.validate(gop.size());
  if (opts.max_iter < 1 || !(opts.tol > 0.0)) {
    throw ParameterError("fixed_point_solve: need max_iter >= 1 and tol > 0");
  }
  FixedPointResult res;
  const double u0_norm = sup_norm(u0);
  if (mu) {
    const SeriesConstants c = general_constants(u0_norm, nl.degrees);
    const double k_mu = c.K * *mu;
    res.admissible_radius = k_mu > 0.0 ? 1.0 / k_mu : std::numeric_limits<double>::infinity();
    res.admissible = nl.sup_norm() < *res.admissible_radius;
  }

  Field scattered = Field::Zero(u0.size());
  Field u = u0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    Field next = apply_t_scattered(gop, u, nl);
    const double step = sup_norm(next - scattered);
    const double size = sup_norm(next);
    res.residual_history.push_back(step);
    scattered = std::move(next);
    u = u0 + scattered;
    if (!std::isfinite(step) || !std::isfinite(size)) break;
    if (step <= opts.tol * size) {
      res.iterations = it;
      res.u = std::move(u);
      res.scattered = std::move(scattered);
      res.within_ball = sup_norm(res.scattered) <= 0.5 * u0_norm;
      return res;
    }
  }
  throw DivergenceError("fixed_point_solve: no convergence after " +
                            std::to_string(res.residual_history.size()) + " iterations",
                        res.residual_history);
}

MultilinearRecursion::MultilinearRecursion(const GreensOperator& gop, const Field& u0,
                                           std::vector<int> degrees,
                                           std::vector<const Eigen::VectorXd*> args)
    : gop_(gop), u0_(u0), degrees_(std::move(degrees)), args_(std::move(args)),
      shared_(false), n_nodes_(gop.size()) {
  validate_degrees(degrees_);
  if (u0.size() != n_nodes_) throw ShapeError("MultilinearRecursion: u0 size mismatch");
  for (const auto* a : args_) {
    if (a == nullptr || a->size() != static_cast<long>(degrees_.size()) * n_nodes_) {
      throw ShapeError("MultilinearRecursion: argument does not match the stacked layout");
    }
  }
}

MultilinearRecursion::MultilinearRecursion(const GreensOperator& gop, const Field& u0,
                                           std::vector<int> degrees,
                                           const Eigen::VectorXd& shared)
    : MultilinearRecursion(gop, u0, std::move(degrees),
                           std::vector<const Eigen::VectorXd*>{&shared}) {
  shared_ = true;
}

const Eigen::VectorXd& MultilinearRecursion::arg(int i) const {
  return shared_ ? *args_.front() : *args_[static_cast<std::size_t>(i)];
}

const Field& MultilinearRecursion::term(int order, int start) {
  if (order < 0 || start < 0) throw ParameterError("MultilinearRecursion: negative index");
  if (order == 0) return u0_;
  if (shared_) {
    start = 0;
  } else if (start + order > static_cast<int>(args_.size())) {
    throw ShapeError("MultilinearRecursion: order " + std::to_string(order) +
                     " needs more arguments than supplied");
  }
  const auto key = std::make_pair(order, start);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  const int last = start + order - 1;
  Field result = Field::Zero(n_nodes_);
  for (std::size_t d = 0; d < degrees_.size(); ++d) {
    Field inner = Field::Zero(n_nodes_);
    for_each_composition(order - 1, degrees_[d], 0, [&](const std::vector<int>& parts) {
      Field prod = Field::Ones(n_nodes_);
      int offset = start;
      for (int p : parts) {
        prod.array() *= term(p, offset).array();
        offset += p;
      }
      inner += prod;
    });
    const auto beta = arg(last).segment(static_cast<long>(d) * n_nodes_, n_nodes_);
    result += b_apply(gop_, inner, beta);
  }
  return memo_.emplace(key, std::move(result)).first->second;
}

SeriesTerm born_term_equal_args(int n, const Field& u0, const Nonlinearity& nl,
                                const GreensOperator& gop) {
  if (n < 1) throw ParameterError("born_term_equal_args: order must be >= 1");
  nl.validate(gop.size());
  MultilinearRecursion rec(gop, u0, nl.degrees, nl.coefficients);
  return {n, rec.term(n)};
}

BornSum born_sum(int max_order, const Field& u0, const Nonlinearity& nl,
                 const GreensOperator& gop) {
  if (max_order < 1) throw ParameterError("born_sum: order must be >= 1");
  nl.validate(gop.size());
  MultilinearRecursion rec(gop, u0, nl.degrees, nl.coefficients);
  BornSum out;
  Field scattered = Field::Zero(u0.size());
  for (int n = 1; n <= max_order; ++n) {
    const Field& t = rec.term(n);
    out.term_norms.push_back(sup_norm(t));
    scattered += t;
  }
  out.u = u0 + scattered;
  return out;
}

ForwardModel::ForwardModel(std::vector<SourceBackground> sources,
                           Eigen::SparseMatrix<double> trace, std::vector<int> degrees)
    : sources_(std::move(sources)), trace_(std::move(trace)), degrees_(std::move(degrees)) {
  validate_degrees(degrees_);
  for (const auto& s : sources_) {
    if (!s.greens || s.greens->size() != trace_.cols() || s.u0.size() != trace_.cols()) {
      throw ShapeError("ForwardModel: source background does not match the trace");
    }
  }
}

ForwardModel ForwardModel::build(std::shared_ptr<const DiskGrid> grid,
                                 const SensorLayout& layout, std::vector<int> degrees,
                                 GreensMode mode) {
  std::vector<std::pair<double, std::shared_ptr<const HelmholtzOperator>>> ops;
  std::vector<std::shared_ptr<const GreensOperator>> greens;
  for (double k : layout.wavenumbers()) {
    auto op = std::make_shared<const HelmholtzOperator>(grid, k);
    if (!op->wellposedness().ok) {
      throw SingularOperatorError("wavenumber k = " + std::to_string(k) +
                                      " is a discrete Neumann eigenvalue of this grid",
                                  op->wellposedness().sigma_min);
    }
    greens.push_back(mode == GreensMode::Dense
                         ? std::make_shared<const GreensOperator>(greens_operator(*op))
                         : std::make_shared<const GreensOperator>(GreensOperator::implicit(op)));
    ops.emplace_back(k, std::move(op));
  }
  std::vector<SourceBackground> sources;
  for (const auto& src : layout.sources) {
    std::size_t i = 0;
    while (ops[i].first != src.wavenumber) ++i;
    const Eigen::VectorXd g = gaussian_boundary_source(src, *grid);
    sources.push_back({src.wavenumber, solve_background(*ops[i].second, g), greens[i]});
  }
  ForwardModel model(std::move(sources), boundary_trace(*grid, layout.detector_angles),
                     std::move(degrees));
  model.grid_ = std::move(grid);
  return model;
}

double ForwardModel::background_norm() const {
  double v = 0.0;
  for (const auto& s : sources_) v = std::max(v, sup_norm(s.u0));
  return v;
}

std::vector<std::pair<double, double>> ForwardModel::mu_per_wavenumber() const {
  std::vector<std::pair<double, double>> out;
  std::vector<const GreensOperator*> seen;
  for (const auto& s : sources_) {
    if (std::find(seen.begin(), seen.end(), s.greens.get()) != seen.end()) continue;
    seen.push_back(s.greens.get());
    out.emplace_back(s.k, compute_mu(*s.greens));
  }
  return out;
}

Eigen::MatrixXd ForwardModel::k_n_apply(std::span<const Eigen::VectorXd> args) const {
  std::vector<const Eigen::VectorXd*> ptrs;
  for (const auto& a : args) ptrs.push_back(&a);
  const int n = static_cast<int>(args.size());
  Eigen::MatrixXd out(n_sources(), n_detectors());
  for (int s = 0; s < n_sources(); ++s) {
    const auto& src = sources_[static_cast<std::size_t>(s)];
    MultilinearRecursion rec(*src.greens, src.u0, degrees_, ptrs);
    out.row(s) = (trace_ * rec.term(n, 0)).transpose();
  }
  return out;
}

Eigen::VectorXd ScatteringData::flattened() const {
  Eigen::VectorXd v(values.size());
  for (long s = 0; s < values.rows(); ++s) {
    v.segment(s * values.cols(), values.cols()) = values.row(s).transpose();
  }
  return v;
}

ScatteringData scattering_data(const ForwardModel& model, const Nonlinearity& nl,
                               SolverChoice solver, int born_order,
                               const FixedPointOptions& opts) {
  nl.validate(model.n_nodes());
  if (nl.degrees != model.degrees()) {
    throw ShapeError("scattering_data: nonlinearity degrees differ from the model");
  }
  ScatteringData data;
  data.values = Eigen::MatrixXd::Zero(model.n_sources(), model.n_detectors());
  for (int s = 0; s < model.n_sources(); ++s) {
    const auto& src = model.sources()[static_cast<std::size_t>(s)];
    data.wavenumbers.push_back(src.k);
    if (solver == SolverChoice::Born) {
      MultilinearRecursion rec(*src.greens, src.u0, nl.degrees, nl.coefficients);
      Field scattered = Field::Zero(model.n_nodes());
      for (int n = 1; n <= born_order; ++n) scattered += rec.term(n);
      data.values.row(s) = model.trace_of(scattered).transpose();
      data.iterations.push_back(0);
      continue;
    }
    try {
      const FixedPointResult r = fixed_point_solve(*src.greens, src.u0, nl, std::nullopt, opts);
      data.values.row(s) = model.trace_of(r.scattered).transpose();
      data.iterations.push_back(r.iterations);
    } catch (const DivergenceError& e) {
      data.failed_sources.push_back(s);
      data.failures.push_back("source " + std::to_string(s) + ": " + e.what());
      data.iterations.push_back(static_cast<int>(e.history().size()));
    }
  }
  return data;
}

}  // namespace nlborn
