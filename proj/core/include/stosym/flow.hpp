#ifndef STOSYM_FLOW_HPP_
#define STOSYM_FLOW_HPP_

#include <cstdint>
#include <vector>

#include "stosym/model.hpp"
#include "stosym/rng.hpp"

namespace stosym {

struct FlowConfig {
  int ode_substeps_per_tau = 64;   // RK4 steps per sampling period
  int sde_substeps_per_tau = 100;  // Euler-Maruyama steps per sampling period
  std::uint64_t seed = 0;          // global seed of the counter-based streams
};

/* Nominal flow xi_bar_{x p}(tau): fixed-step RK4. For affine modes the per
 * substep RK4 update collapses to one affine map that is precomputed, which
 * keeps large abstraction sweeps cheap and bit-reproducible. */
Vec nominal_flow(const SwitchedSystem& sys, const Vec& x, int mode, double tau,
                 const FlowConfig& cfg);

/* Applies nominal_flow along a mode word (one entry per sampling period). */
Vec nominal_flow_word(const SwitchedSystem& sys, const Vec& x,
                      const std::vector<int>& modes, double tau,
                      const FlowConfig& cfg);

/* Precompiled one-substep RK4 map for an affine mode (x -> R x + r). */
struct AffineStep {
  Mat R;
  Vec r;
};
AffineStep rk4_affine_step(const Mat& A, const Vec& b, double h);

/* Euler-Maruyama sample path under a periodic-tau switching word. Returns the
 * states at the sampling instants 0, tau, ..., k tau. Noise comes from the
 * counter-based stream (cfg.seed, trajectory), so a path is a pure function
 * of its arguments. */
std::vector<Vec> sde_sample_path(const SwitchedSystem& sys, const Vec& x0,
                                 const std::vector<int>& modes, double tau,
                                 std::uint64_t trajectory, const FlowConfig& cfg);

/* One Euler-Maruyama sampling period driven by an externally owned stream. */
Vec em_step_tau(const SwitchedSystem& sys, const Vec& x, int mode, double tau,
                int substeps, NormalStream& noise);

}  // namespace stosym

#endif
