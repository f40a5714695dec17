#include "nlborn/inverse.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "nlborn/compositions.hpp"
#include "nlborn/errors.hpp"

namespace nlborn {

LinearizedMap assemble_k1(const ForwardModel& model) {
  LinearizedMap k1;
  k1.n_sources = model.n_sources();
  k1.n_detectors = model.n_detectors();
  k1.n_nodes = model.n_nodes();
  k1.degrees = model.degrees();
  const int n = k1.n_nodes;
  const int n_det = k1.n_detectors;
  k1.matrix.resize(static_cast<long>(k1.n_sources) * n_det, model.n_unknowns());

  // Detector rows of the Green's matrix, shared by every source at the same k.
  std::vector<std::pair<const GreensOperator*, Eigen::MatrixXd>> trace_greens;
  for (int s = 0; s < k1.n_sources; ++s) {
    const auto& src = model.sources()[static_cast<std::size_t>(s)];
    const Eigen::MatrixXd* rg = nullptr;
    for (const auto& [g, m] : trace_greens) {
      if (g == src.greens.get()) rg = &m;
    }
    if (rg == nullptr) {
      trace_greens.emplace_back(src.greens.get(), model.trace() * src.greens->matrix());
      rg = &trace_greens.back().second;
    }
    const double k2 = src.k * src.k;
    for (std::size_t d = 0; d < k1.degrees.size(); ++d) {
      const Eigen::VectorXd u0l = src.u0.array().pow(k1.degrees[d]).matrix();
      k1.matrix.block(static_cast<long>(s) * n_det, static_cast<long>(d) * n, n_det, n) =
          -k2 * (*rg) * u0l.asDiagonal();
    }
    for (int j = 0; j < n_det; ++j) k1.row_wavenumber.push_back(src.k);
  }
  return k1;
}

Regularizer::Regularizer(const Eigen::MatrixXd& k1, double rcond, bool row_normalize)
    : rcond_(rcond) {
  if (!(rcond > 0.0 && rcond < 1.0)) {
    throw ParameterError("pseudoinverse: rcond must lie in (0, 1)");
  }
  Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(k1.rows());
  if (row_normalize) {
    for (long i = 0; i < k1.rows(); ++i) {
      const double nrm = k1.row(i).norm();
      row_scale[i] = nrm > 0.0 ? 1.0 / nrm : 1.0;
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(row_scale.asDiagonal() * k1,
                                     Eigen::ComputeFullV | Eigen::ComputeThinU);
  singular_values_ = svd.singularValues();
  const double largest = singular_values_.size() ? singular_values_[0] : 0.0;
  const double cutoff = rcond * largest;
  rank_ = 0;
  while (rank_ < singular_values_.size() && singular_values_[rank_] > 0.0 &&
         singular_values_[rank_] >= cutoff) {
    ++rank_;
  }
  if (rank_ == 0) {
    throw DegenerateRegularizerError("pseudoinverse: no singular value survives truncation");
  }
  right_vectors_ = svd.matrixV();
  const auto vk = right_vectors_.leftCols(rank_);
  const auto uk = svd.matrixU().leftCols(rank_);
  pinv_ = vk * singular_values_.head(rank_).cwiseInverse().asDiagonal() * uk.transpose() *
          row_scale.asDiagonal();
}

Eigen::VectorXd Regularizer::apply(const Eigen::VectorXd& data) const {
  if (data.size() != pinv_.cols()) throw ShapeError("Regularizer::apply: data length mismatch");
  return pinv_ * data;
}

Regularizer pseudoinverse(const LinearizedMap& k1, double rcond, bool row_normalize) {
  return Regularizer(k1.matrix, rcond, row_normalize);
}

double operator_norm(const Eigen::MatrixXd& m) {
  return m.size() ? m.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

double operator_norm(const Regularizer& reg) { return operator_norm(reg.matrix()); }

Eigen::VectorXd flatten_data(const Eigen::MatrixXd& data) {
  Eigen::VectorXd v(data.size());
  for (long s = 0; s < data.rows(); ++s) {
    v.segment(s * data.cols(), data.cols()) = data.row(s).transpose();
  }
  return v;
}

Reconstruction ibs_reconstruct(const Eigen::MatrixXd& data, const Regularizer& reg,
                               const ForwardModel& model, const IbsOptions& opts) {
  if (opts.max_order < 1) throw ParameterError("ibs_reconstruct: order must be >= 1");
  if (data.rows() != model.n_sources() || data.cols() != model.n_detectors()) {
    throw ShapeError("ibs_reconstruct: data shape does not match the sensor layout");
  }
  if (reg.matrix().rows() != model.n_unknowns()) {
    throw ShapeError("ibs_reconstruct: regularizer does not match the model unknowns");
  }
  Reconstruction rec;
  auto push = [&](Eigen::VectorXd corr) {
    rec.correction_norms.push_back(corr.size() ? corr.cwiseAbs().maxCoeff() : 0.0);
    rec.partial_sums.push_back(rec.partial_sums.empty() ? corr : rec.partial_sums.back() + corr);
    rec.corrections.push_back(std::move(corr));
  };
  push(reg.apply(flatten_data(data)));
  const double first = rec.correction_norms.front();

  for (int m = 2; m <= opts.max_order; ++m) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(data.rows(), data.cols());
    std::vector<Eigen::VectorXd> args;
    for (int n = 2; n <= m; ++n) {
      for_each_composition(m, n, 1, [&](const std::vector<int>& parts) {
        args.clear();
        for (int i : parts) args.push_back(rec.corrections[static_cast<std::size_t>(i - 1)]);
        acc += model.k_n_apply(args);
      });
    }
    Eigen::VectorXd corr = -reg.apply(flatten_data(acc));
    const double nrm = corr.cwiseAbs().maxCoeff();
    if (!std::isfinite(nrm) || nrm > opts.divergence_guard * first) {
      rec.diverged = true;
      rec.diverged_at = m;
      break;
    }
    push(std::move(corr));
  }
  return rec;
}

Eigen::VectorXd projection(const Regularizer& reg, const LinearizedMap& k1,
                           const Eigen::VectorXd& beta) {
  if (beta.size() != k1.matrix.cols()) throw ShapeError("projection: beta length mismatch");
  return reg.apply(k1.matrix * beta);
}

}  // namespace nlborn
