#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nlborn/grid.hpp"
#include "nlborn/helmholtz.hpp"

namespace nlborn {

/// Polynomial nonlinearity k^2 * sum_l beta_l(x) u^l.
///
/// Coefficients are stored stacked: block d (of grid length) holds the
/// coefficient for degrees[d]. The same stacked layout is used for the unknown
/// vector of the inverse problem.
struct Nonlinearity {
  std::vector<int> degrees;
  Eigen::VectorXd coefficients;

  static Nonlinearity cubic(Field beta);
  static Nonlinearity zero(std::vector<int> degrees, int n_nodes);

  int n_nodes() const;
  int max_degree() const;
  Eigen::VectorXd::ConstSegmentReturnType block(int d) const;
  Eigen::VectorXd::SegmentReturnType block(int d);
  // Largest sup-norm over the degree blocks.
  double sup_norm() const;
  // Throws ParameterError / ShapeError when degrees or sizes are inconsistent.
  void validate(int n_nodes) const;
};

void validate_degrees(const std::vector<int>& degrees);

struct FixedPointOptions {
  // Relative: stop when ||T(u) - u|| <= tol * ||T(u) - u0||.
  double tol = 1e-10;
  int max_iter = 200;
};

struct FixedPointResult {
  Field u;
  Field scattered;  // u - u0, accumulated without cancellation
  int iterations = 0;
  std::vector<double> residual_history;
  // Small-data contraction check, filled when mu was supplied.
  std::optional<double> admissible_radius;
  bool admissible = false;
  bool within_ball = false;  // ||u - u0|| <= ||u0|| / 2
};

// Fixed-point iteration u <- u0 + sum_l b(u^l, beta_l) started at u0.
// The contraction bound is evaluated and recorded but never blocks the run.
// Throws DivergenceError after max_iter iterations without convergence.
FixedPointResult fixed_point_solve(const GreensOperator& gop, const Field& u0,
                                   const Nonlinearity& nl,
                                   std::optional<double> mu = std::nullopt,
                                   const FixedPointOptions& opts = {});

/// Memoized recursion for the multilinear forward operators
///
///   K_0 = u0,
///   K_{n+1}(a_1..a_{n+1}) = sum_l b_l( sum_{i_1+..+i_l = n}
///                                  K_{i_1}(..) * .. * K_{i_l}(..), a_{n+1} ),
///
/// where the inner factors consume contiguous slices of the argument list in
/// order and the outer b_l takes the degree-l block of the last argument.
/// Terms are cached by (order, slice start); with shared arguments the start is
/// irrelevant and terms are cached by order alone.
class MultilinearRecursion {
 public:
  // Distinct arguments; the pointers must outlive this object.
  MultilinearRecursion(const GreensOperator& gop, const Field& u0,
                       std::vector<int> degrees,
                       std::vector<const Eigen::VectorXd*> args);
  // Every slot receives the same stacked coefficient vector.
  MultilinearRecursion(const GreensOperator& gop, const Field& u0,
                       std::vector<int> degrees, const Eigen::VectorXd& shared);

  // Field of K_order applied to args[start .. start + order).
  const Field& term(int order, int start = 0);

 private:
  const Eigen::VectorXd& arg(int i) const;

  const GreensOperator& gop_;
  const Field& u0_;
  std::vector<int> degrees_;
  std::vector<const Eigen::VectorXd*> args_;
  bool shared_;
  int n_nodes_;
  std::map<std::pair<int, int>, Field> memo_;
};

struct SeriesTerm {
  int order = 0;
  Field field;
};

// Degree-n term K_n(beta, .., beta) of the Born series for a single source.
SeriesTerm born_term_equal_args(int n, const Field& u0, const Nonlinearity& nl,
                                const GreensOperator& gop);

struct BornSum {
  Field u;  // u0 + sum of terms 1..N
  std::vector<double> term_norms;  // sup-norm of term n at index n-1
};

BornSum born_sum(int max_order, const Field& u0, const Nonlinearity& nl,
                 const GreensOperator& gop);

struct SourceBackground {
  double k = 0.0;
  Field u0;
  std::shared_ptr<const GreensOperator> greens;
};

/// Everything needed to evaluate the forward operators for all sources at the
/// detectors: background fields, Green's operators, and the boundary trace.
class ForwardModel {
 public:
  enum class GreensMode { Dense, Implicit };

  ForwardModel(std::vector<SourceBackground> sources,
               Eigen::SparseMatrix<double> trace, std::vector<int> degrees);

  // Assembles one Helmholtz operator per distinct wavenumber and solves the
  // background problem for every source. Throws SingularOperatorError when any
  // wavenumber is ill-posed on the grid.
  static ForwardModel build(std::shared_ptr<const DiskGrid> grid,
                            const SensorLayout& layout, std::vector<int> degrees,
                            GreensMode mode = GreensMode::Dense);

  int n_sources() const { return static_cast<int>(sources_.size()); }
  int n_detectors() const { return static_cast<int>(trace_.rows()); }
  int n_nodes() const { return static_cast<int>(trace_.cols()); }
  int n_unknowns() const { return n_nodes() * static_cast<int>(degrees_.size()); }
  const std::vector<int>& degrees() const { return degrees_; }
  const std::vector<SourceBackground>& sources() const { return sources_; }
  const Eigen::SparseMatrix<double>& trace() const { return trace_; }
  const std::shared_ptr<const DiskGrid>& grid_ptr() const { return grid_; }

  // sup over nodes and sources of |u0|.
  double background_norm() const;
  // mu per distinct wavenumber, in order of first appearance. Needs dense Green's operators.
  std::vector<std::pair<double, double>> mu_per_wavenumber() const;

  Eigen::VectorXd trace_of(const Field& f) const { return trace_ * f; }

  // Detector values of K_n(args[0], .., args[n-1]) with n = args.size(); one
  // row per source, one column per detector.
  Eigen::MatrixXd k_n_apply(std::span<const Eigen::VectorXd> args) const;

 private:
  std::vector<SourceBackground> sources_;
  Eigen::SparseMatrix<double> trace_;
  std::vector<int> degrees_;
  std::shared_ptr<const DiskGrid> grid_;
};

struct ScatteringData {
  Eigen::MatrixXd values;  // sources x detectors
  std::vector<double> wavenumbers;  // per source
  std::vector<int> failed_sources;
  std::vector<std::string> failures;
  std::vector<int> iterations;  // per source, fixed-point solver only

  Eigen::VectorXd flattened() const;  // source-major
};

enum class SolverChoice { FixedPoint, Born };

// phi[s, d] = (u - u0)(x_d; source s). Divergent sources are recorded and
// their rows left at zero.
ScatteringData scattering_data(const ForwardModel& model, const Nonlinearity& nl,
                               SolverChoice solver = SolverChoice::FixedPoint,
                               int born_order = 10,
                               const FixedPointOptions& opts = {});

}  // namespace nlborn
