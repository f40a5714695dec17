#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace nlborn {

// nu_0..nu_{n_max} from nu_{n+1} = sum_l sum_{i_1+..+i_l = n} nu_{i_1}..nu_{i_l}.
// Throws Error naming the first order whose value overflows.
std::vector<double> nu_sequence(double nu0, const std::vector<int>& degrees,
                                int n_max);

struct SeriesConstants {
  double nu = 0.0;
  double K = 0.0;
};

// Cubic nonlinearity: nu = 3/2 nu0, K = 27/4 nu0^2.
SeriesConstants cubic_constants(double nu0);

// Which powers enter Q(x) = sum_l x^l.
enum class QPolynomial {
  PresentDegrees,  // only the configured degrees
  FullRange,       // every l = 2..L
};

// General polynomial nonlinearity with L = max degree:
// nu = L nu0 / (L - 1), K = (L - 1) Q(nu) / nu0; (0, 0) when nu0 == 0.
SeriesConstants general_constants(double nu0, const std::vector<int>& degrees,
                                  QPolynomial q = QPolynomial::PresentDegrees);

// Q(x) over the chosen powers.
double q_polynomial(double x, const std::vector<int>& degrees,
                    QPolynomial q = QPolynomial::PresentDegrees);

// Worst ratio nu_n / (nu K^n). Throws BoundViolationError when it exceeds 1.
double nu_bound_check(const std::vector<double>& nu_seq, double nu, double K,
                      double mu = 1.0);

struct GeneratingFunctionCheck {
  double residual = 0.0;     // x Q(P_N(x)) - P_N(x) + nu0
  double partial_sum = 0.0;  // P_N(x)
  bool inside_radius = true;
};

// Partial sum P_N of the generating function over the whole sequence, plugged
// into the algebraic identity. inside_radius is false when x >= 1/K (with
// present-degree constants), in which case the residual need not vanish.
GeneratingFunctionCheck generating_function_residual(
    const std::vector<double>& nu_seq, double x, const std::vector<int>& degrees);

struct InverseRadius {
  double C = 0.0;
  double r = 0.0;
  double coupling = 0.0;  // ||K1^+|| nu K mu before the max with 2
};

// r = (sqrt(16 C^2 + 1) - 4 C) / (2 K mu), C = max{2, ||K1^+|| nu K mu}.
// For cubic data this is 2/(27 mu nu0^2) [sqrt(16C^2+1) - 4C] with
// C = max{2, 81/8 mu ||K1^+|| nu0^3}.
InverseRadius inverse_radius(double mu, double nu0, double k1_norm,
                             const std::vector<int>& degrees = {3},
                             QPolynomial q = QPolynomial::PresentDegrees);

struct ErrorBound {
  bool hypothesis_holds = false;
  double threshold = 0.0;  // largest admissible max(||beta||, ||beta~||)
  double margin = 0.0;     // threshold - M
  double prefactor = 0.0;
  double bound = 0.0;      // prefactor * residual when the hypothesis holds
};

// Approximation-error estimate for the inverse series sum. The hypothesis is
//   M < (1 - sqrt(a / (1 + a))) / (K mu),  a = ||K1^+|| nu K mu,
// and the bound is (1 - a / (1 - K mu M)^2 + a)^{-1} * residual, where the
// residual is ||(I - K1^+ K1) beta||.
ErrorBound error_bound(double mu, double nu0, double k1_norm, double M,
                       double residual, const std::vector<int>& degrees = {3},
                       QPolynomial q = QPolynomial::PresentDegrees);

struct BoundsReport {
  std::vector<int> degrees;
  int L = 0;
  std::vector<std::pair<double, double>> mu_per_wavenumber;  // (k, mu)
  double mu = 0.0;   // max over wavenumbers
  double nu0 = 0.0;  // sup |u0| over the grid and all sources
  double nu = 0.0;
  double K = 0.0;
  double forward_radius = 0.0;  // 1 / (K mu)
  double k1_norm = 0.0;         // ||K1^+||, sup -> sup
  double coupling = 0.0;        // ||K1^+|| nu K mu
  double C = 0.0;
  double r = 0.0;
  double M_threshold = 0.0;
  // Filled when the true coefficient and its projection residual are known.
  std::optional<double> M;
  std::optional<double> residual;
  std::optional<ErrorBound> error;
  // Filled when data is supplied.
  std::optional<double> data_norm;  // ||K1^+ phi||
  std::optional<bool> inverse_hypothesis;
};

BoundsReport make_bounds_report(std::vector<std::pair<double, double>> mu_per_k,
                                double nu0, double k1_norm,
                                const std::vector<int>& degrees,
                                QPolynomial q = QPolynomial::PresentDegrees);

}  // namespace nlborn
