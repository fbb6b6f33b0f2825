#ifndef STOSYM_VALIDATION_HPP_
#define STOSYM_VALIDATION_HPP_

#include <cstdint>
#include <vector>

#include "stosym/synthesis.hpp"

namespace stosym {

struct ValidationReport {
  std::int64_t runs = 0;
  std::uint64_t seed = 0;
  std::vector<double> time_grid;      // sampling instants tau, 2 tau, ...
  std::vector<double> mean_distance;  // average ||xi(t)||_W over runs
  std::vector<double> stderr_distance;
  std::vector<double> run_max_distance;   // per-run summaries
  std::vector<double> run_first_entry;    // first instant inside W (-1 never)
  std::int64_t faults = 0;                // runtime faults across all runs
};

/* Simulates `runs` closed-loop Euler-Maruyama paths from x0 under the refined
 * strategy and reports infinity-norm distance statistics to the set W.
 * Per-trajectory noise streams keep the report independent of the thread
 * count. */
ValidationReport monte_carlo_closed_loop(
    const SwitchedSystem& sys, const SymbolicModel& model,
    const Controller& ctrl, const CertificateSet& certs, const Vec& x0,
    const BoxUnion& W, double T, std::int64_t runs, std::uint64_t seed,
    const FlowConfig& cfg, const std::vector<double>* deltas = nullptr);

struct EtaHatEstimate {
  double eta_hat = 0.0;      // empirical max of the mean one-step defect
  double half_width = 0.0;   // Hoeffding half-width at the given confidence
  double analytic_bound = 0.0;
  std::int64_t pairs = 0;
  std::int64_t samples_total = 0;
};

/* Empirical eta_hat of a sequence model: expectation (over coupled noise) of
 * the one-step defect, maximized over a subset of (state, mode) pairs. The
 * two paths of a pair share the Brownian increments of their common suffix.
 * `max_pairs` = 0 enumerates every pair (used when m^{N+1} is small or the
 * diffusion vanishes, where the estimate is exact). */
EtaHatEstimate estimate_eta_hat(const SymbolicModel& model,
                                const SwitchedSystem& sys,
                                const CertificateSet& certs,
                                std::int64_t samples_per_transition,
                                std::int64_t max_pairs, double confidence,
                                double range_width, std::uint64_t seed,
                                const FlowConfig& cfg);

/* smallest n with  n >= range^2 ln(2/(1-confidence)) / (2 accuracy^2) */
std::int64_t hoeffding_samples(double range_width, double confidence,
                               double accuracy);

struct BisimViolation {
  std::int64_t pair = 0;
  int step = 0;
  double value = 0.0;  // empirical E[V]
  double bound = 0.0;
};

struct BisimReport {
  std::vector<BisimViolation> violations;
  double worst_ratio = 0.0;  // max over steps of E[V] / bound
  std::int64_t pairs = 0;
};

/* Samples concrete paths against the abstract run under matched mode words
 * and verifies E[V(x_tau, H(x_q))] <= alpha_lo(eps^q) (1+slack) at every
 * sampled step. Mode words are drawn uniformly (dwell-respecting when the
 * model carries a counter). */
BisimReport check_bisim_sample(const SwitchedSystem& sys,
                               const SymbolicModel& model,
                               const CertificateSet& certs,
                               const std::vector<std::pair<Vec, std::int64_t>>& pairs,
                               int horizon_steps, std::int64_t runs,
                               double slack, std::uint64_t seed,
                               const FlowConfig& cfg);

}  // namespace stosym

#endif
