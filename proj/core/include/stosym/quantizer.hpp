#ifndef STOSYM_QUANTIZER_HPP_
#define STOSYM_QUANTIZER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "stosym/certificates.hpp"
#include "stosym/flow.hpp"

namespace stosym {

struct GridParams {
  double tau = 0.0;
  double eta = 0.0;
  double epsilon = 0.0;
  std::optional<int> dwell_steps;  // N_hat = tau_d / tau
};

struct SeqParams {
  double tau = 0.0;
  int N = 0;
  Vec x_s;
  double epsilon = 0.0;
  std::optional<int> dwell_steps;
};

/* one audited inequality of a solver run */
struct IneqRecord {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  bool ok = false;
};

struct SolveReport {
  bool feasible = false;
  double value = 0.0;            // eta or N, depending on the solver
  std::string violated;          // name of the failing inequality if infeasible
  std::vector<IneqRecord> records;
};

/* Lower bound on the achievable precision at a fixed sampling time; the
 * multiple-Lyapunov variant applies when tau_d is given and requires
 * tau_d > log(mu)/kappa. */
double min_epsilon_grid(double tau, const CertificateSet& certs,
                        const SwitchedSystem& sys, const BoxUnion& X0,
                        std::optional<double> tau_d = std::nullopt);

/* Largest eta <= span(domain) satisfying both bisimulation inequalities. */
SolveReport solve_eta(double tau, double epsilon, const CertificateSet& certs,
                      const SwitchedSystem& sys, const BoxUnion& X0,
                      std::optional<double> tau_d = std::nullopt);

/* Analytic bound on the one-step defect of the mode-sequence model. */
double eta_bar_analytic(int N, double tau, const Vec& x_s,
                        const CertificateSet& certs, const SwitchedSystem& sys,
                        const FlowConfig& cfg,
                        std::optional<double> tau_d = std::nullopt);

/* Smallest temporal horizon N whose bisimulation condition holds. */
SolveReport solve_horizon(double tau, double epsilon, const Vec& x_s,
                          const CertificateSet& certs, const SwitchedSystem& sys,
                          const FlowConfig& cfg,
                          std::optional<double> tau_d = std::nullopt,
                          int N_max = 64);

/* delta_0..delta_Nhat of the multiple-Lyapunov relation:
 * delta_0 = alpha_lo(eps^q), delta_{i+1} = e^{-kappa tau} delta_i + d */
std::vector<double> delta_sequence(double epsilon, double tau, int dwell_steps,
                                   double disturbance,
                                   const CertificateSet& certs);
double delta_closed_form(int i, double epsilon, double tau, double disturbance,
                         const CertificateSet& certs);
/* checks delta_0 >= ... >= delta_Nhat and delta_Nhat <= delta_0 / mu */
bool delta_sequence_feasible(const std::vector<double>& deltas, double mu,
                             std::string* diag = nullptr);

struct ApproachReport {
  double criterion_value = 0.0;  // m e^{-kappa tau n / q}, dwell-adjusted if set
  bool criterion_seq = false;    // criterion_value <= 1
  bool grid_feasible = false;
  bool seq_feasible = false;
  double grid_eta = 0.0;
  int seq_N = 0;
  double grid_count = 0.0;
  double seq_count = 0.0;
  std::string recommendation;
};

/* Size comparison of the two abstraction approaches at (tau, epsilon).
 * Explicit eta / N overrides skip the solvers (used to audit published
 * parameter sets). */
ApproachReport compare_approaches(const SwitchedSystem& sys,
                                  const CertificateSet& certs, double tau,
                                  double epsilon, const FlowConfig& cfg,
                                  std::optional<double> tau_d = std::nullopt,
                                  std::optional<double> eta_override = std::nullopt,
                                  std::optional<int> N_override = std::nullopt,
                                  const Vec* x_s = nullptr);

/* number of lattice points of [D]_eta (exact, per box), times m * N_hat when
 * dwell_steps >= 1 (pass 0 for a plain grid) */
double grid_state_count(const BoxUnion& domain, double eta, int m, int dwell_steps);

/* Heuristic source state: argmin over a coarse domain grid of
 * max_p V(flow(x, p, tau), x). */
Vec select_source_state(const SwitchedSystem& sys, const CertificateSet& certs,
                        double tau, const FlowConfig& cfg, int points_per_dim = 9);

}  // namespace stosym

#endif
