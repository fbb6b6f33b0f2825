#include "stosym/certificates.hpp"

#include <cmath>
#include <functional>

namespace stosym {

double QuadraticCertificate::lambda_min() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double QuadraticCertificate::lambda_max() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void QuadraticCertificate::fill_defaults(int n) {
  if (!alpha_user) {
    alpha_lo_coeff = std::pow(lambda_min() / q, q / 2.0);
    alpha_hi_coeff = std::pow(n * lambda_max() / q, q / 2.0);
  }
  if (!gamma_user) {
    /* mean-value bound on |V(x,y)-V(x,z)| for q = 1: the 2-norm gradient is
     * bounded by sqrt(lambda_max(P)); sqrt(n) converts to the infinity norm */
    gamma_hat_slope = std::sqrt(lambda_max()) * std::sqrt(static_cast<double>(n));
  }
  if (!kappa_user) kappa = kappa_hat / 2.0;
}

double QuadraticCertificate::V(const Vec& x, const Vec& y) const {
  Vec d = x - y;
  double quad = d.dot(P * d) / q;
  return std::pow(quad, q / 2.0);
}

void CertificateSet::aggregate() {
  kappa = std::numeric_limits<double>::infinity();
  alpha_lo_coeff = std::numeric_limits<double>::infinity();
  alpha_hi_coeff = 0.0;
  gamma_hat_slope = 0.0;
  for (const auto& c : per_mode) {
    kappa = std::min(kappa, c.kappa);
    alpha_lo_coeff = std::min(alpha_lo_coeff, c.alpha_lo_coeff);
    alpha_hi_coeff = std::max(alpha_hi_coeff, c.alpha_hi_coeff);
    gamma_hat_slope = std::max(gamma_hat_slope, c.gamma_hat_slope);
  }
  q = per_mode.empty() ? 1.0 : per_mode.front().q;
  common = true;
  for (const auto& c : per_mode)
    if ((c.P - per_mode.front().P).cwiseAbs().maxCoeff() > 0.0) common = false;
  if (!mu_user) mu = common ? 1.0 : compute_mu(*this);
}

namespace {

Mat lmi_residual(const Mat& A, const std::vector<Mat>& sigmas, const Mat& P) {
  Mat M = P * A + A.transpose() * P;
  for (const auto& s : sigmas) M += s.transpose() * P * s;
  return 0.5 * (M + M.transpose());
}

void check_lmi_args(const Mat& A, const Mat& P) {
  if (P.rows() != P.cols() || A.rows() != A.cols() || A.rows() != P.rows())
    throw std::invalid_argument("LMI dimension mismatch");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * P.cwiseAbs().maxCoeff())
    throw std::invalid_argument("P is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("P is not positive definite");
}

}  // namespace

bool verify_lmi(const Mat& A, const std::vector<Mat>& sigmas, const Mat& P,
                double kappa_hat, double tol_psd) {
  check_lmi_args(A, P);
  Mat R = lmi_residual(A, sigmas, P) + kappa_hat * P;
  if (tol_psd < 0.0)
    tol_psd = 1e-9 * std::max(1.0, R.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Mat> es(R, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() <= tol_psd;
}

double max_kappa_hat(const Mat& A, const std::vector<Mat>& sigmas, const Mat& P,
                     std::string* diagnostic) {
  check_lmi_args(A, P);
  Mat M = lmi_residual(A, sigmas, P);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(Mat(-M), P,
                                                    Eigen::EigenvaluesOnly);
  double k = ges.eigenvalues().minCoeff();
  if (k <= 0.0) {
    if (diagnostic)
      *diagnostic = "no certificate at this P: residual is not negative definite";
    return 0.0;
  }
  return k;
}

double compute_mu(const CertificateSet& certs) {
  const auto& pm = certs.per_mode;
  for (const auto& c : pm)
    if (c.q != pm.front().q)
      throw std::invalid_argument("compute_mu: mismatched moment orders");
  if (pm.size() <= 1) return 1.0;
  double mu = 1.0;
  for (std::size_t i = 0; i < pm.size(); ++i)
    for (std::size_t j = 0; j < pm.size(); ++j) {
      if (i == j) continue;
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(pm[i].P, pm[j].P,
                                                        Eigen::EigenvaluesOnly);
      mu = std::max(mu, std::pow(ges.eigenvalues().maxCoeff(),
                                 pm.front().q / 2.0));
    }
  return mu;
}

double beta_bound(double r, double s, const CertificateSet& certs) {
  if (r < 0.0 || s < 0.0) throw std::invalid_argument("beta: negative input");
  return certs.alpha_lo_inv(certs.alpha_hi(r) * std::exp(-certs.kappa * s));
}

double beta_bound_mode(double r, double s, const QuadraticCertificate& c) {
  if (r < 0.0 || s < 0.0) throw std::invalid_argument("beta: negative input");
  return c.alpha_lo_inv(c.alpha_hi(r) * std::exp(-c.kappa * s));
}

namespace {

double mode_Z(const SwitchedSystem& sys, int mode) {
  return sys.modes[mode].lipschitz_diffusion;
}

/* prefactor of the h bound: (1/2) ||sqrt(P)||^2 min(n, q_hat) Z^2 */
double h_prefactor(int mode, const CertificateSet& certs,
                   const SwitchedSystem& sys) {
  const auto& c = certs.per_mode[mode];
  const double Z = mode_Z(sys, mode);
  return 0.5 * c.lambda_max() * std::min(sys.n, sys.q_hat) * Z * Z;
}

}  // namespace

double h_point_bound_norm(double x_norm, double t, int mode,
                          const CertificateSet& certs,
                          const SwitchedSystem& sys) {
  if (t < 0.0) throw std::invalid_argument("h bound: negative time");
  if (t == 0.0) return 0.0;
  const auto& c = certs.per_mode[mode];
  const double pre = h_prefactor(mode, certs, sys);
  if (pre == 0.0) return 0.0;
  const double q = c.q;
  /* integral of beta(||x||^q, s)^(2/q) over [0,t]; with linear envelopes the
   * integrand is (c_hi/c_lo ||x||^q)^(2/q) e^{-2 kappa s / q} */
  const double amp = std::pow(c.alpha_hi(std::pow(x_norm, q)) / c.alpha_lo_coeff,
                              2.0 / q);
  const double integral =
      amp * (q / (2.0 * c.kappa)) * (1.0 - std::exp(-2.0 * c.kappa * t / q));
  return c.alpha_lo_inv(pre * std::exp(-c.kappa * t) * integral);
}

double h_point_bound(const Vec& x, double t, int mode,
                     const CertificateSet& certs, const SwitchedSystem& sys) {
  return h_point_bound_norm(inf_norm(x), t, mode, certs, sys);
}

double h_point_bound_all_modes(double x_norm, double t,
                               const CertificateSet& certs,
                               const SwitchedSystem& sys) {
  double h = 0.0;
  for (int p = 0; p < sys.num_modes(); ++p)
    h = std::max(h, h_point_bound_norm(x_norm, t, p, certs, sys));
  return h;
}

double h_set_bound(const BoxUnion& X, double t, const CertificateSet& certs,
                   const SwitchedSystem& sys) {
  if (X.empty()) throw std::invalid_argument("h bound: empty set");
  /* h is monotone in ||x|| for linear envelopes, so the corner sup is exact */
  return h_point_bound_all_modes(X.sup_inf_norm(), t, certs, sys);
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double h_point_bound_quadrature(double x_norm, double t, int mode,
                                const CertificateSet& certs,
                                const SwitchedSystem& sys, double tol) {
  if (t < 0.0) throw std::invalid_argument("h bound: negative time");
  if (t == 0.0) return 0.0;
  const auto& c = certs.per_mode[mode];
  const double pre = h_prefactor(mode, certs, sys);
  if (pre == 0.0) return 0.0;
  const double q = c.q;
  const double rq = std::pow(x_norm, q);
  auto f = [&](double s) {
    return std::pow(beta_bound_mode(rq, s, c), 2.0 / q);
  };
  const double integral = integrate(f, 0.0, t, tol * std::max(1.0, rq));
  return c.alpha_lo_inv(pre * std::exp(-c.kappa * t) * integral);
}

double gamma_hat(double r, const CertificateSet& certs) {
  if (r < 0.0) throw std::invalid_argument("gamma_hat: negative input");
  return certs.gamma_hat_slope * r;
}

}  // namespace stosym
