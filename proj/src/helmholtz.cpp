#include "nlborn/helmholtz.hpp"

#include <cmath>
#include <string>

#include <numbers>

#include <Eigen/LU>

#include "nlborn/errors.hpp"

namespace nlborn {

struct HelmholtzOperator::Factorization {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

namespace {

// Chebyshev differentiation matrix on pts = cos(pi k / order), k = 0..order.
Eigen::MatrixXd cheb_diff(const std::vector<double>& pts) {
  const int n = static_cast<int>(pts.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  auto c = [n](int k) { return ((k == 0 || k == n - 1) ? 2.0 : 1.0) * (k % 2 ? -1.0 : 1.0); };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) d(i, j) = c(i) / c(j) / (pts[i] - pts[j]);
    }
    d(i, i) = -d.row(i).sum();
  }
  return d;
}

Eigen::MatrixXd assemble_system(const DiskGrid& grid, double k) {
  const int nr = grid.radial;
  const int m = grid.angular;
  const int half = m / 2;
  const int order = grid.cheb_order();
  const Eigen::MatrixXd d1 = cheb_diff(grid.cheb_points);
  const Eigen::MatrixXd d2 = d1 * d1;

  // Second angular derivative on m equispaced points.
  std::vector<double> col(m);
  const double dt = grid.h;
  col[0] = -std::numbers::pi * std::numbers::pi / (3.0 * dt * dt) - 1.0 / 6.0;
  for (int q = 1; q < m; ++q) {
    const double s = std::sin(0.5 * q * dt);
    col[q] = 0.5 * (q % 2 ? 1.0 : -1.0) / (s * s);
  }

  const int n = grid.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < nr; ++j) {
    const double inv_r = 1.0 / grid.radii[j];
    for (int p = 0; p < m; ++p) {
      const int row = grid.index(j, p);
      const int opp = (p + half) % m;
      for (int i = 0; i < nr; ++i) {
        if (j == 0) {
          a(row, grid.index(i, p)) += d1(0, i);
          a(row, grid.index(i, opp)) += d1(0, order - i);
        } else {
          a(row, grid.index(i, p)) += d2(j, i) + inv_r * d1(j, i);
          a(row, grid.index(i, opp)) += d2(j, order - i) + inv_r * d1(j, order - i);
        }
      }
      if (j == 0) continue;
      for (int q = 0; q < m; ++q) {
        a(row, grid.index(j, q)) += inv_r * inv_r * col[static_cast<std::size_t>(std::abs(p - q))];
      }
      a(row, row) += k * k;
    }
  }
  return a;
}

}  // namespace

HelmholtzOperator::HelmholtzOperator(std::shared_ptr<const DiskGrid> grid,
                                     double k, double singular_rel_threshold)
    : grid_(std::move(grid)), k_(k) {
  if (!grid_) throw ParameterError("HelmholtzOperator: null grid");
  if (!std::isfinite(k)) throw ParameterError("HelmholtzOperator: k must be finite");
  system_ = assemble_system(*grid_, k);
  auto f = std::make_shared<Factorization>();
  f->lu.compute(system_);
  lu_ = f;

  wellposed_.threshold = singular_rel_threshold * system_.cwiseAbs().maxCoeff();
  // Inverse iteration on A^T A; ||A x|| for unit x bounds sigma_min from above.
  const int n = grid_->size();
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(0.7 * i + 0.3);
  x.normalize();
  double est = (system_ * x).norm();
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd y = f->lu.solve(f->lu.transpose().solve(x));
    const double ny = y.norm();
    if (!std::isfinite(ny) || ny == 0.0) {
      est = 0.0;
      break;
    }
    x = y / ny;
    const double next = (system_ * x).norm();
    const bool settled = std::fabs(next - est) <= 1e-10 * next;
    est = next;
    if (settled || est <= wellposed_.threshold) break;
  }
  wellposed_.sigma_min = est;
  wellposed_.ok = est > wellposed_.threshold;
}

Field HelmholtzOperator::apply(const Field& u) const {
  if (u.size() != grid_->size()) throw ShapeError("HelmholtzOperator::apply: size");
  return system_ * u;
}

Eigen::MatrixXd HelmholtzOperator::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != grid_->size()) {
    throw ShapeError("HelmholtzOperator::solve: right-hand side has wrong length");
  }
  if (!wellposed_.ok) {
    throw SingularOperatorError(
        "Helmholtz operator is near-singular at k = " + std::to_string(k_) +
            " (sigma_min = " + std::to_string(wellposed_.sigma_min) + ")",
        wellposed_.sigma_min);
  }
  return lu_->lu.solve(rhs);
}

HelmholtzOperator assemble(std::shared_ptr<const DiskGrid> grid, double k,
                           double singular_rel_threshold) {
  return HelmholtzOperator(std::move(grid), k, singular_rel_threshold);
}

WellPosedness check_wellposed(const HelmholtzOperator& op) {
  return op.wellposedness();
}

Field solve_background(const HelmholtzOperator& op, const Eigen::VectorXd& g) {
  const DiskGrid& grid = op.grid();
  if (g.size() != grid.boundary_size()) {
    throw ShapeError("solve_background: boundary data length mismatch");
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grid.size());
  for (int i = 0; i < grid.boundary_size(); ++i) rhs[grid.boundary_nodes[i]] = g[i];
  return op.solve(rhs);
}

GreensOperator GreensOperator::from_matrix(double k, Eigen::MatrixXd matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw ShapeError("GreensOperator: matrix must be square");
  }
  GreensOperator g;
  g.k_ = k;
  g.size_ = static_cast<int>(matrix.rows());
  g.matrix_ = std::move(matrix);
  return g;
}

GreensOperator GreensOperator::implicit(std::shared_ptr<const HelmholtzOperator> op) {
  if (!op) throw ParameterError("GreensOperator::implicit: null operator");
  if (!op->wellposedness().ok) {
    throw SingularOperatorError("GreensOperator: operator is near-singular",
                                op->wellposedness().sigma_min);
  }
  GreensOperator g;
  g.k_ = op->k();
  g.size_ = op->grid().size();
  g.op_ = std::move(op);
  return g;
}

const Eigen::MatrixXd& GreensOperator::matrix() const {
  if (op_) throw ParameterError("GreensOperator: implicit operator has no matrix");
  return matrix_;
}

Field GreensOperator::apply(const Field& f) const {
  if (f.size() != size_) throw ShapeError("GreensOperator::apply: size mismatch");
  if (op_) {
    Eigen::VectorXd rhs = f;
    for (int b : op_->grid().boundary_nodes) rhs[b] = 0.0;
    return op_->solve(rhs);
  }
  return matrix_ * f;
}

GreensOperator greens_operator(const HelmholtzOperator& op) {
  const DiskGrid& grid = op.grid();
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(grid.size(), grid.size());
  for (int b : grid.boundary_nodes) id(b, b) = 0.0;
  return GreensOperator::from_matrix(op.k(), op.solve(id));
}

Field b_apply(const GreensOperator& gop, const Field& v, const Field& beta) {
  if (v.size() != gop.size() || beta.size() != gop.size()) {
    throw ShapeError("b_apply: field sizes do not match the operator");
  }
  return -(gop.k() * gop.k()) * gop.apply(beta.cwiseProduct(v));
}

double compute_mu(const GreensOperator& gop) {
  const Eigen::MatrixXd& g = gop.matrix();
  if (g.size() == 0) return 0.0;
  return gop.k() * gop.k() * g.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace nlborn
