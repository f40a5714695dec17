#pragma once

#include <memory>

#include <Eigen/Core>

#include "nlborn/grid.hpp"

namespace nlborn {

// Real field sampled at grid nodes.
using Field = Eigen::VectorXd;

struct WellPosedness {
  bool ok = false;
  double sigma_min = 0.0;  // smallest singular value of the system matrix
  double threshold = 0.0;  // near-singular cutoff (relative default times max-norm)
};

/// Chebyshev-Fourier collocation of Delta + k^2 on the polar grid with a
/// Neumann condition on the boundary ring.
///
/// Rows of interior nodes hold u_rr + u_r / r + u_tt / r^2 + k^2 u, with the
/// radial derivatives taken along the full diameter through the node. Rows of
/// boundary nodes hold the normal derivative u_r. The matrix is dense and
/// factorized once by partial-pivoting LU; assembly estimates its smallest
/// singular value by inverse iteration.
class HelmholtzOperator {
 public:
  HelmholtzOperator(std::shared_ptr<const DiskGrid> grid, double k,
                    double singular_rel_threshold = 1e-8);

  double k() const { return k_; }
  const DiskGrid& grid() const { return *grid_; }
  const std::shared_ptr<const DiskGrid>& grid_ptr() const { return grid_; }
  const Eigen::MatrixXd& system_matrix() const { return system_; }
  const WellPosedness& wellposedness() const { return wellposed_; }

  // Collocated (Delta + k^2) u in the interior, du/dn on the boundary ring.
  Field apply(const Field& u) const;
  // system^{-1} rhs. Throws SingularOperatorError when the operator is ill-posed.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

 private:
  struct Factorization;

  std::shared_ptr<const DiskGrid> grid_;
  double k_;
  Eigen::MatrixXd system_;
  std::shared_ptr<const Factorization> lu_;
  WellPosedness wellposed_;
};

HelmholtzOperator assemble(std::shared_ptr<const DiskGrid> grid, double k,
                           double singular_rel_threshold = 1e-8);

WellPosedness check_wellposed(const HelmholtzOperator& op);

// Background field u0 for Neumann data g (aligned with grid.boundary_nodes).
Field solve_background(const HelmholtzOperator& op, const Eigen::VectorXd& g);

/// Discrete solution operator of the Neumann problem: matrix() * f at node i
/// approximates the integral of G(x_i, y) f(y) over the disk, so entry (i, j)
/// plays the role of G(x_i, y_j) w_j. It is the inverse of the system matrix with
/// the boundary columns zeroed (the source term is only collocated inside).
///
/// Either materialized as a dense matrix or backed by the operator's
/// factorization (implicit), for grids where only applications are needed.
class GreensOperator {
 public:
  // Dense operator from an explicit matrix; used for toy problems.
  static GreensOperator from_matrix(double k, Eigen::MatrixXd matrix);
  static GreensOperator implicit(std::shared_ptr<const HelmholtzOperator> op);

  double k() const { return k_; }
  int size() const { return size_; }
  bool is_dense() const { return op_ == nullptr; }
  // Throws ParameterError for an implicit operator.
  const Eigen::MatrixXd& matrix() const;
  Field apply(const Field& f) const;

 private:
  double k_ = 0.0;
  int size_ = 0;
  Eigen::MatrixXd matrix_;
  std::shared_ptr<const HelmholtzOperator> op_;
};

// Dense Green's matrix.
GreensOperator greens_operator(const HelmholtzOperator& op);

// b(v, beta) = -k^2 * integral of G(x, y) beta(y) v(y) dy. The minus sign makes
// u = u0 + b(u^3, beta) the integral form of Delta u + k^2 u + k^2 beta u^3 = 0.
Field b_apply(const GreensOperator& gop, const Field& v, const Field& beta);

// mu = k^2 * max_i sum_j |G_ij| with quadrature weights already folded in.
double compute_mu(const GreensOperator& gop);

}  // namespace nlborn
