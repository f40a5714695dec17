#pragma once

#include <vector>

#include <Eigen/Core>

#include "nlborn/forward.hpp"

namespace nlborn {

/// Linearized forward map K1 as a dense matrix.
///
/// Rows run over (source, detector) pairs in source-major order; columns over
/// the stacked unknown vector (one block of grid nodes per degree). Column j of
/// block d holds the detector trace of b_l(u0^l, e_j) for each source.
struct LinearizedMap {
  Eigen::MatrixXd matrix;
  std::vector<double> row_wavenumber;
  int n_sources = 0;
  int n_detectors = 0;
  int n_nodes = 0;
  std::vector<int> degrees;
};

LinearizedMap assemble_k1(const ForwardModel& model);

/// Truncated-SVD pseudoinverse: singular values below rcond times the largest
/// are discarded.
class Regularizer {
 public:
  // Rows of k1 can optionally be scaled to unit Euclidean norm before the SVD;
  // the returned pseudoinverse still acts on unscaled data.
  Regularizer(const Eigen::MatrixXd& k1, double rcond, bool row_normalize = false);

  double rcond() const { return rcond_; }
  int rank() const { return rank_; }
  const Eigen::VectorXd& singular_values() const { return singular_values_; }
  // Right singular vectors: kept ones first, then discarded ones.
  const Eigen::MatrixXd& right_vectors() const { return right_vectors_; }
  const Eigen::MatrixXd& matrix() const { return pinv_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& data) const;

 private:
  double rcond_;
  int rank_ = 0;
  Eigen::VectorXd singular_values_;
  Eigen::MatrixXd right_vectors_;
  Eigen::MatrixXd pinv_;
};

Regularizer pseudoinverse(const LinearizedMap& k1, double rcond,
                          bool row_normalize = false);

// Induced sup -> sup norm: the largest row sum of absolute values.
double operator_norm(const Eigen::MatrixXd& m);
double operator_norm(const Regularizer& reg);

struct IbsOptions {
  int max_order = 4;
  // An order whose correction exceeds guard * ||K1^+ phi|| stops the series.
  double divergence_guard = 1e6;
};

struct Reconstruction {
  std::vector<Eigen::VectorXd> corrections;   // order m at index m-1
  std::vector<Eigen::VectorXd> partial_sums;  // beta~_m at index m-1
  std::vector<double> correction_norms;
  bool diverged = false;
  int diverged_at = 0;  // order that tripped the guard

  int orders() const { return static_cast<int>(corrections.size()); }
  const Eigen::VectorXd& estimate() const { return partial_sums.back(); }
};

/// Inverse Born series
///
///   K~_1 phi = K1^+ phi,
///   K~_m phi = - sum_{n=2}^{m} sum_{i_1+..+i_n = m, i_j >= 1}
///                  K1^+ K_n(K~_{i_1} phi, .., K~_{i_n} phi),
///
/// with K_n evaluated on the model's grid. data is sources x detectors.
Reconstruction ibs_reconstruct(const Eigen::MatrixXd& data, const Regularizer& reg,
                               const ForwardModel& model, const IbsOptions& opts = {});

// K1^+ K1 beta, the part of beta visible through the regularization.
Eigen::VectorXd projection(const Regularizer& reg, const LinearizedMap& k1,
                           const Eigen::VectorXd& beta);

// Source-major flattening of a sources x detectors matrix.
Eigen::VectorXd flatten_data(const Eigen::MatrixXd& data);

}  // namespace nlborn
