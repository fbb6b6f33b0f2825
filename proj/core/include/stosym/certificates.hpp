#ifndef STOSYM_CERTIFICATES_HPP_
#define STOSYM_CERTIFICATES_HPP_

#include <string>
#include <vector>

#include "stosym/model.hpp"
#include "stosym/types.hpp"

namespace stosym {

/* Quadratic incremental Lyapunov certificate for one mode:
 *
 *   V(x,x') = ((1/q) (x-x')' P (x-x'))^(q/2)
 *
 * with linear class-K envelopes  alpha_lo(y) = c_lo y,  alpha_hi(y) = c_hi y
 * bracketing V against ||x-x'||_inf^q, and a linear Lyapunov-difference bound
 * gamma_hat(r) = slope * r. All norm-conversion factors are folded into the
 * three coefficients once, at construction; `*_user` records whether a value
 * was supplied or derived. */
struct QuadraticCertificate {
  Mat P;
  double q = 1.0;
  double kappa_hat = 0.0;  // LMI rate, P A + A'P + sum sigma'P sigma <= -kappa_hat P
  double kappa = 0.0;      // generator decay, kappa = kappa_hat / 2 for q in [1,2]
  double alpha_lo_coeff = 0.0;
  double alpha_hi_coeff = 0.0;
  double gamma_hat_slope = 0.0;
  bool kappa_user = false;
  bool alpha_user = false;
  bool gamma_user = false;

  double lambda_min() const;
  double lambda_max() const;

  /* default envelope coefficients:
   *   c_lo = (lambda_min(P)/q)^(q/2)        (||.||_2 >= ||.||_inf)
   *   c_hi = (n lambda_max(P)/q)^(q/2)      (||.||_2 <= sqrt(n)||.||_inf) */
  void fill_defaults(int n);

  double V(const Vec& x, const Vec& y) const;

  double alpha_lo(double y) const { return alpha_lo_coeff * y; }
  double alpha_hi(double y) const { return alpha_hi_coeff * y; }
  double alpha_lo_inv(double v) const { return v / alpha_lo_coeff; }
  double alpha_hi_inv(double v) const { return v / alpha_hi_coeff; }
};

/* Per-mode certificates plus the aggregates every solver consumes:
 * kappa = min_p kappa_p, alpha_lo = min, alpha_hi = max, gamma_hat = max,
 * and the mode-change ratio mu (1 for a common certificate). */
struct CertificateSet {
  std::vector<QuadraticCertificate> per_mode;
  bool common = false;
  double q = 1.0;
  double mu = 1.0;
  bool mu_user = false;
  double kappa = 0.0;
  double alpha_lo_coeff = 0.0;
  double alpha_hi_coeff = 0.0;
  double gamma_hat_slope = 0.0;

  int num_modes() const { return static_cast<int>(per_mode.size()); }

  double alpha_lo(double y) const { return alpha_lo_coeff * y; }
  double alpha_hi(double y) const { return alpha_hi_coeff * y; }
  double alpha_lo_inv(double v) const { return v / alpha_lo_coeff; }
  double alpha_hi_inv(double v) const { return v / alpha_hi_coeff; }

  /* recompute aggregates from per_mode entries */
  void aggregate();
};

/* true iff P A + A'P + sum_i sigma_i' P sigma_i + kappa_hat P is negative
 * semidefinite up to tol_psd (default 1e-9 * max(1, ||residual||)) */
bool verify_lmi(const Mat& A, const std::vector<Mat>& sigmas, const Mat& P,
                double kappa_hat, double tol_psd = -1.0);

/* largest feasible kappa_hat: the smallest generalized eigenvalue of the
 * pencil (-M, P) with M = P A + A'P + sum sigma'P sigma. Returns 0 (with a
 * diagnostic) when M is not negative definite relative to P. */
double max_kappa_hat(const Mat& A, const std::vector<Mat>& sigmas, const Mat& P,
                     std::string* diagnostic = nullptr);

/* mu = max over ordered mode pairs (p,p') of lambda_max(P_p, P_p')^(q/2) */
double compute_mu(const CertificateSet& certs);

/* KL bound beta(r,s) = alpha_lo^{-1}(alpha_hi(r) e^{-kappa s}) with the
 * aggregate envelopes, and the per-mode variant */
double beta_bound(double r, double s, const CertificateSet& certs);
double beta_bound_mode(double r, double s, const QuadraticCertificate& cert);

/* q-th moment gap between the solution process and the nominal flow started
 * at x, for one mode (closed form for q in {1,2}, adaptive quadrature
 * otherwise), and its maximum over modes and a box union. */
double h_point_bound(const Vec& x, double t, int mode,
                     const CertificateSet& certs, const SwitchedSystem& sys);
double h_point_bound_norm(double x_norm, double t, int mode,
                          const CertificateSet& certs, const SwitchedSystem& sys);
double h_point_bound_all_modes(double x_norm, double t,
                               const CertificateSet& certs,
                               const SwitchedSystem& sys);
double h_set_bound(const BoxUnion& X, double t, const CertificateSet& certs,
                   const SwitchedSystem& sys);

/* same bound with the time integral evaluated by adaptive Simpson quadrature;
 * reference path for any q >= 1 */
double h_point_bound_quadrature(double x_norm, double t, int mode,
                                const CertificateSet& certs,
                                const SwitchedSystem& sys, double tol = 1e-12);

double gamma_hat(double r, const CertificateSet& certs);

}  // namespace stosym

#endif
