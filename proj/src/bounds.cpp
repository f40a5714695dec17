#include "nlborn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlborn/errors.hpp"
#include "nlborn/forward.hpp"

namespace nlborn {

namespace {

// Coefficient n of p^power, with p truncated to degree n.
double power_coefficient(const std::vector<double>& p, int power, int n) {
  std::vector<double> acc(p.begin(), p.begin() + n + 1);
  for (int e = 1; e < power; ++e) {
    std::vector<double> next(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
      if (acc[i] == 0.0) continue;
      for (int j = 0; i + j <= n; ++j) next[i + j] += acc[i] * p[j];
    }
    acc.swap(next);
  }
  return acc[n];
}

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

std::vector<int> q_powers(const std::vector<int>& degrees, QPolynomial q) {
  if (q == QPolynomial::PresentDegrees) return degrees;
  const int L = *std::max_element(degrees.begin(), degrees.end());
  std::vector<int> all;
  for (int l = 2; l <= L; ++l) all.push_back(l);
  return all;
}

}  // namespace

std::vector<double> nu_sequence(double nu0, const std::vector<int>& degrees,
                                int n_max) {
  validate_degrees(degrees);
  if (!(nu0 >= 0.0) || !std::isfinite(nu0)) {
    throw ParameterError("nu_sequence: nu0 must be finite and nonnegative");
  }
  if (n_max < 0) throw ParameterError("nu_sequence: n_max must be nonnegative");
  std::vector<double> nu{nu0};
  nu.reserve(n_max + 1);
  for (int n = 0; n < n_max; ++n) {
    double next = 0.0;
    for (int l : degrees) next += power_coefficient(nu, l, n);
    if (!std::isfinite(next)) {
      throw Error("nu_sequence: overflow at order " + std::to_string(n + 1));
    }
    nu.push_back(next);
  }
  return nu;
}

SeriesConstants cubic_constants(double nu0) {
  if (!(nu0 >= 0.0)) throw ParameterError("cubic_constants: nu0 must be >= 0");
  return {1.5 * nu0, 6.75 * (nu0 * nu0)};
}

double q_polynomial(double x, const std::vector<int>& degrees, QPolynomial q) {
  double s = 0.0;
  for (int l : q_powers(degrees, q)) s += std::pow(x, l);
  return s;
}

SeriesConstants general_constants(double nu0, const std::vector<int>& degrees,
                                  QPolynomial q) {
  validate_degrees(degrees);
  if (!(nu0 >= 0.0)) throw ParameterError("general_constants: nu0 must be >= 0");
  if (nu0 == 0.0) return {0.0, 0.0};
  const int L = *std::max_element(degrees.begin(), degrees.end());
  const double nu = L * nu0 / (L - 1);
  // (L-1) Q(nu) / nu0 expanded termwise; a single cubic term gives 6.75 nu0^2 bit for bit.
  const double ratio = static_cast<double>(L) / (L - 1);
  double K = 0.0;
  for (int l : q_powers(degrees, q)) K += (L - 1) * ipow(ratio, l) * ipow(nu0, l - 1);
  return {nu, K};
}

double nu_bound_check(const std::vector<double>& nu_seq, double nu, double K,
                      double mu) {
  double worst = 0.0;
  if (nu == 0.0) return worst;
  for (std::size_t n = 0; n < nu_seq.size(); ++n) {
    const double scale = std::pow(mu, static_cast<double>(n));
    const double bound = nu * std::pow(K * mu, static_cast<double>(n));
    const double ratio = nu_seq[n] * scale / bound;
    if (std::isfinite(ratio)) worst = std::max(worst, ratio);
    if (ratio > 1.0) {
      throw BoundViolationError("nu_bound_check: nu_" + std::to_string(n) +
                                " exceeds nu K^n (ratio " +
                                std::to_string(ratio) + ")");
    }
  }
  return worst;
}

GeneratingFunctionCheck generating_function_residual(
    const std::vector<double>& nu_seq, double x, const std::vector<int>& degrees) {
  if (nu_seq.empty()) throw ParameterError("generating_function_residual: empty sequence");
  if (x < 0.0) throw ParameterError("generating_function_residual: x must be >= 0");
  GeneratingFunctionCheck out;
  const double nu0 = nu_seq.front();
  double p = 0.0, xn = 1.0;
  for (double v : nu_seq) {
    p += v * xn;
    xn *= x;
  }
  out.partial_sum = p;
  out.residual = x * q_polynomial(p, degrees) - p + nu0;
  const SeriesConstants c = general_constants(nu0, degrees);
  out.inside_radius = c.K == 0.0 || x * c.K < 1.0;
  return out;
}

InverseRadius inverse_radius(double mu, double nu0, double k1_norm,
                             const std::vector<int>& degrees, QPolynomial q) {
  if (!(mu > 0.0) || !(nu0 > 0.0) || !(k1_norm >= 0.0)) {
    throw ParameterError("inverse_radius: need mu > 0, nu0 > 0 and ||K1^+|| >= 0");
  }
  const SeriesConstants c = general_constants(nu0, degrees, q);
  const double k_mu = c.K * mu;
  InverseRadius out;
  out.coupling = k1_norm * c.nu * k_mu;
  out.C = std::max(2.0, out.coupling);
  // sqrt(16C^2+1) - 4C, written without cancellation.
  out.r = 1.0 / (std::sqrt(16.0 * out.C * out.C + 1.0) + 4.0 * out.C) / (2.0 * k_mu);
  return out;
}

ErrorBound error_bound(double mu, double nu0, double k1_norm, double M,
                       double residual, const std::vector<int>& degrees,
                       QPolynomial q) {
  if (mu < 0.0 || nu0 < 0.0 || k1_norm < 0.0 || M < 0.0 || residual < 0.0) {
    throw ParameterError("error_bound: inputs must be nonnegative");
  }
  const SeriesConstants c = general_constants(nu0, degrees, q);
  const double k_mu = c.K * mu;
  const double a = k1_norm * c.nu * k_mu;
  ErrorBound out;
  out.threshold = k_mu > 0.0 ? (1.0 - std::sqrt(a / (1.0 + a))) / k_mu
                             : std::numeric_limits<double>::infinity();
  out.margin = out.threshold - M;
  const double gap = 1.0 - k_mu * M;
  const double denom = gap > 0.0 ? 1.0 - a / (gap * gap) + a : -1.0;
  out.hypothesis_holds = M < out.threshold && denom > 0.0;
  if (out.hypothesis_holds) {
    out.prefactor = 1.0 / denom;
    out.bound = out.prefactor * residual;
  }
  return out;
}

BoundsReport make_bounds_report(std::vector<std::pair<double, double>> mu_per_k,
                                double nu0, double k1_norm,
                                const std::vector<int>& degrees, QPolynomial q) {
  validate_degrees(degrees);
  BoundsReport rep;
  rep.degrees = degrees;
  rep.L = *std::max_element(degrees.begin(), degrees.end());
  rep.mu_per_wavenumber = std::move(mu_per_k);
  for (const auto& [k, mu] : rep.mu_per_wavenumber) rep.mu = std::max(rep.mu, mu);
  rep.nu0 = nu0;
  const SeriesConstants c = general_constants(nu0, degrees, q);
  rep.nu = c.nu;
  rep.K = c.K;
  const double k_mu = c.K * rep.mu;
  rep.forward_radius =
      k_mu > 0.0 ? 1.0 / k_mu : std::numeric_limits<double>::infinity();
  rep.k1_norm = k1_norm;
  if (rep.mu > 0.0 && nu0 > 0.0) {
    const InverseRadius ir = inverse_radius(rep.mu, nu0, k1_norm, degrees, q);
    rep.coupling = ir.coupling;
    rep.C = ir.C;
    rep.r = ir.r;
  } else {
    rep.C = 2.0;
    rep.r = std::numeric_limits<double>::infinity();
  }
  rep.M_threshold = error_bound(rep.mu, nu0, k1_norm, 0.0, 0.0, degrees, q).threshold;
  return rep;
}

}  // namespace nlborn
