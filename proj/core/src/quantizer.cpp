#include "stosym/quantizer.hpp"

#include <cmath>
#include <sstream>

#include "stosym/parallel.hpp"

namespace stosym {

namespace {

constexpr double kIneqSlack = 1e-12;  // absolute slack on every inequality

double slack_factor(double tau, const CertificateSet& c) {
  return 1.0 - std::exp(-c.kappa * tau);
}

/* (1/mu - e^{-kappa tau_d}) / (1 - e^{-kappa tau_d}); positive iff the dwell
 * time exceeds log(mu)/kappa */
double dwell_ratio(double tau_d, const CertificateSet& c) {
  const double e = std::exp(-c.kappa * tau_d);
  return (1.0 / c.mu - e) / (1.0 - e);
}

void require_dwell_ok(double tau_d, const CertificateSet& c) {
  if (!(tau_d > std::log(c.mu) / c.kappa)) {
    std::ostringstream os;
    os << "dwell time too short: tau_d = " << tau_d
       << " must exceed log(mu)/kappa = " << std::log(c.mu) / c.kappa;
    throw infeasible_error(os.str(), "tau_d > log(mu)/kappa");
  }
}

}  // namespace

double min_epsilon_grid(double tau, const CertificateSet& certs,
                        const SwitchedSystem& sys, const BoxUnion& X0,
                        std::optional<double> tau_d) {
  const double q = certs.q;
  const double h = h_set_bound(X0, tau, certs, sys);
  double bound = gamma_hat(std::pow(h, 1.0 / q), certs) / slack_factor(tau, certs);
  if (tau_d) {
    require_dwell_ok(*tau_d, certs);
    bound /= dwell_ratio(*tau_d, certs);
  }
  return std::pow(certs.alpha_lo_inv(bound), 1.0 / q);
}

SolveReport solve_eta(double tau, double epsilon, const CertificateSet& certs,
                      const SwitchedSystem& sys, const BoxUnion& X0,
                      std::optional<double> tau_d) {
  SolveReport rep;
  const double q = certs.q;
  const double aeps = certs.alpha_lo(std::pow(epsilon, q));
  const double h = h_set_bound(X0, tau, certs, sys);
  const double h_root = std::pow(h, 1.0 / q);

  /* condition 1: alpha_hi(eta^q) <= alpha_lo(eps^q) */
  const double eta1 = std::pow(certs.alpha_hi_inv(aeps), 1.0 / q);

  /* condition 2: remaining slack after the decay and moment-gap terms */
  double budget = slack_factor(tau, certs) * aeps;
  if (tau_d) {
    require_dwell_ok(*tau_d, certs);
    budget *= dwell_ratio(*tau_d, certs);
  }
  const double eta2 = budget / certs.gamma_hat_slope - h_root;

  const double span = sys.domain.span();
  double eta = std::min({eta1, eta2, span});

  auto record = [&](const std::string& name, double lhs, double rhs) {
    rep.records.push_back({name, lhs, rhs, lhs <= rhs + kIneqSlack});
  };
  record("alpha_hi(eta^q) <= alpha_lo(eps^q)",
         certs.alpha_hi(std::pow(std::max(eta, 0.0), q)), aeps);
  if (!tau_d) {
    record("e^{-kappa tau} alpha_lo(eps^q) + gamma(h^{1/q}+eta) <= alpha_lo(eps^q)",
           (1.0 - slack_factor(tau, certs)) * aeps +
               gamma_hat(h_root + std::max(eta, 0.0), certs),
           aeps);
  } else {
    record("gamma(h^{1/q}+eta) <= ratio (1-e^{-kappa tau}) alpha_lo(eps^q)",
           gamma_hat(h_root + std::max(eta, 0.0), certs),
           dwell_ratio(*tau_d, certs) * slack_factor(tau, certs) * aeps);
  }
  record("eta <= span(domain)", eta, span);

  if (eta <= 0.0) {
    rep.feasible = false;
    rep.violated = eta2 <= 0.0 ? (tau_d ? "gamma(h^{1/q}+eta) <= ratio (1-e^{-kappa tau}) alpha_lo(eps^q)"
                                        : "e^{-kappa tau} alpha_lo(eps^q) + gamma(h^{1/q}+eta) <= alpha_lo(eps^q)")
                               : "alpha_hi(eta^q) <= alpha_lo(eps^q)";
    return rep;
  }
  rep.feasible = true;
  rep.value = eta;
  return rep;
}

namespace {

/* max over modes (and certificate indices for multiple-Lyapunov sets) of
 * V(flow(x_s, p, tau), x_s) */
double source_step_level(const Vec& x_s, double tau, const CertificateSet& certs,
                         const SwitchedSystem& sys, const FlowConfig& cfg) {
  double m0 = 0.0;
  for (int p = 0; p < sys.num_modes(); ++p) {
    Vec y = nominal_flow(sys, x_s, p, tau, cfg);
    if (certs.common) {
      m0 = std::max(m0, certs.per_mode.front().V(y, x_s));
    } else {
      for (const auto& c : certs.per_mode) m0 = std::max(m0, c.V(y, x_s));
    }
  }
  return m0;
}

}  // namespace

double eta_bar_analytic(int N, double tau, const Vec& x_s,
                        const CertificateSet& certs, const SwitchedSystem& sys,
                        const FlowConfig& cfg, std::optional<double> tau_d) {
  const double m0 = source_step_level(x_s, tau, certs, sys, cfg);
  double rate = certs.kappa;
  if (tau_d) {
    require_dwell_ok(*tau_d, certs);
    rate -= std::log(certs.mu) / *tau_d;
  }
  return std::pow(certs.alpha_lo_inv(std::exp(-rate * N * tau) * m0),
                  1.0 / certs.q);
}

SolveReport solve_horizon(double tau, double epsilon, const Vec& x_s,
                          const CertificateSet& certs, const SwitchedSystem& sys,
                          const FlowConfig& cfg, std::optional<double> tau_d,
                          int N_max) {
  SolveReport rep;
  const double q = certs.q;
  const double aeps = certs.alpha_lo(std::pow(epsilon, q));
  if (tau_d) require_dwell_ok(*tau_d, certs);

  for (int N = 1; N <= N_max; ++N) {
    const double h = h_point_bound_all_modes(inf_norm(x_s), (N + 1) * tau,
                                             certs, sys);
    const double defect = std::pow(h, 1.0 / q) +
                          eta_bar_analytic(N, tau, x_s, certs, sys, cfg, tau_d);
    double lhs, rhs;
    std::string name;
    if (!tau_d) {
      lhs = std::exp(-certs.kappa * tau) * aeps + gamma_hat(defect, certs);
      rhs = aeps;
      name = "e^{-kappa tau} alpha_lo(eps^q) + gamma(h^{1/q}+eta_bar) <= alpha_lo(eps^q)";
    } else {
      lhs = gamma_hat(defect, certs);
      rhs = dwell_ratio(*tau_d, certs) * slack_factor(tau, certs) * aeps;
      name = "gamma(h^{1/q}+eta_bar) <= ratio (1-e^{-kappa tau}) alpha_lo(eps^q)";
    }
    rep.records.push_back({"N=" + std::to_string(N) + ": " + name, lhs, rhs,
                           lhs <= rhs + kIneqSlack});
    if (lhs <= rhs + kIneqSlack) {
      rep.feasible = true;
      rep.value = N;
      return rep;
    }
  }
  rep.feasible = false;
  std::ostringstream os;
  os << "no N <= " << N_max << " satisfies the horizon condition";
  rep.violated = os.str();
  return rep;
}

std::vector<double> delta_sequence(double epsilon, double tau, int dwell_steps,
                                   double disturbance,
                                   const CertificateSet& certs) {
  std::vector<double> d(dwell_steps + 1);
  d[0] = certs.alpha_lo(std::pow(epsilon, certs.q));
  const double decay = std::exp(-certs.kappa * tau);
  for (int i = 0; i < dwell_steps; ++i) d[i + 1] = decay * d[i] + disturbance;
  return d;
}

double delta_closed_form(int i, double epsilon, double tau, double disturbance,
                         const CertificateSet& certs) {
  const double d0 = certs.alpha_lo(std::pow(epsilon, certs.q));
  const double decay = std::exp(-certs.kappa * tau);
  const double di = std::pow(decay, i);
  return di * d0 + disturbance * (1.0 - di) / (1.0 - decay);
}

bool delta_sequence_feasible(const std::vector<double>& deltas, double mu,
                             std::string* diag) {
  for (std::size_t i = 1; i < deltas.size(); ++i)
    if (deltas[i] > deltas[i - 1] + kIneqSlack) {
      if (diag) *diag = "delta sequence is not monotone non-increasing";
      return false;
    }
  if (!deltas.empty() &&
      deltas.back() > deltas.front() / mu + kIneqSlack) {
    if (diag) *diag = "delta_Nhat exceeds delta_0 / mu";
    return false;
  }
  return true;
}

double grid_state_count(const BoxUnion& domain, double eta, int m,
                        int dwell_steps) {
  double count = 0.0;
  for (const auto& b : domain.boxes) {
    double c = 1.0;
    for (int i = 0; i < b.dim(); ++i) {
      const auto lo = static_cast<long long>(std::ceil(b.lo[i] / eta - 1e-9));
      const auto hi = static_cast<long long>(std::floor(b.hi[i] / eta + 1e-9));
      c *= static_cast<double>(hi - lo + 1);
    }
    count += c;
  }
  /* dwell models carry a (mode, counter) component; dwell_steps = 0 marks a
   * plain grid */
  if (dwell_steps >= 1) count *= static_cast<double>(m) * dwell_steps;
  return count;
}

ApproachReport compare_approaches(const SwitchedSystem& sys,
                                  const CertificateSet& certs, double tau,
                                  double epsilon, const FlowConfig& cfg,
                                  std::optional<double> tau_d,
                                  std::optional<double> eta_override,
                                  std::optional<int> N_override,
                                  const Vec* x_s_in) {
  ApproachReport rep;
  const double n = sys.n, q = certs.q;
  double rate = certs.kappa;
  if (tau_d) rate -= std::log(certs.mu) / *tau_d;
  rep.criterion_value = sys.num_modes() * std::exp(-rate * tau * n / q);
  rep.criterion_seq = rep.criterion_value <= 1.0;

  const int nhat =
      tau_d ? static_cast<int>(std::llround(*tau_d / tau)) : 1;

  if (eta_override) {
    rep.grid_feasible = true;
    rep.grid_eta = *eta_override;
  } else {
    try {
      auto r = solve_eta(tau, epsilon, certs, sys, sys.domain, tau_d);
      rep.grid_feasible = r.feasible;
      rep.grid_eta = r.value;
    } catch (const infeasible_error&) {
      rep.grid_feasible = false;
    }
  }
  if (rep.grid_feasible)
    rep.grid_count =
        grid_state_count(sys.domain, rep.grid_eta, sys.num_modes(),
                         tau_d ? nhat : 0);

  Vec x_s = x_s_in ? *x_s_in : select_source_state(sys, certs, tau, cfg);
  if (N_override) {
    rep.seq_feasible = true;
    rep.seq_N = *N_override;
  } else {
    try {
      auto r = solve_horizon(tau, epsilon, x_s, certs, sys, cfg, tau_d);
      rep.seq_feasible = r.feasible;
      rep.seq_N = static_cast<int>(r.value);
    } catch (const infeasible_error&) {
      rep.seq_feasible = false;
    }
  }
  if (rep.seq_feasible) {
    rep.seq_count = std::pow(static_cast<double>(sys.num_modes()), rep.seq_N);
    if (tau_d) rep.seq_count *= nhat;
  }

  if (rep.grid_feasible && rep.seq_feasible)
    rep.recommendation = rep.seq_count <= rep.grid_count ? "sequence" : "grid";
  else if (rep.seq_feasible)
    rep.recommendation = "sequence";
  else if (rep.grid_feasible)
    rep.recommendation = "grid";
  else
    rep.recommendation = "infeasible";
  return rep;
}

Vec select_source_state(const SwitchedSystem& sys, const CertificateSet& certs,
                        double tau, const FlowConfig& cfg, int points_per_dim) {
  double best = std::numeric_limits<double>::infinity();
  Vec best_x;
  for (const auto& box : sys.domain.boxes) {
    const int n = box.dim();
    std::int64_t total = 1;
    for (int i = 0; i < n; ++i) total *= points_per_dim;
    std::vector<double> vals(total);
    parallel_for(total, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t k = b; k < e; ++k) {
        Vec x(n);
        std::int64_t rem = k;
        for (int i = 0; i < n; ++i) {
          const int j = rem % points_per_dim;
          rem /= points_per_dim;
          x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * (j + 0.5) / points_per_dim;
        }
        vals[k] = source_step_level(x, tau, certs, sys, cfg);
      }
    });
    for (std::int64_t k = 0; k < total; ++k) {
      if (vals[k] < best) {
        best = vals[k];
        Vec x(n);
        std::int64_t rem = k;
        for (int i = 0; i < n; ++i) {
          const int j = rem % points_per_dim;
          rem /= points_per_dim;
          x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * (j + 0.5) / points_per_dim;
        }
        best_x = x;
      }
    }
  }
  return best_x;
}

}  // namespace stosym
