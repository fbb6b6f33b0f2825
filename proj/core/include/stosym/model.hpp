#ifndef STOSYM_MODEL_HPP_
#define STOSYM_MODEL_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "stosym/types.hpp"

namespace stosym {

/* One mode of a stochastic switched system.
 *
 * Drift is either affine (A x + b) or a user-supplied vector field with a
 * declared Lipschitz constant. Diffusion is either linear, given as q_hat
 * matrices sigma_i so that g(x) = [sigma_1 x ... sigma_qhat x], or a
 * user-supplied n x q_hat field with declared Lipschitz constant Z_p and
 * g(0) = 0. */
struct ModeDynamics {
  bool affine = true;
  Mat A;
  Vec b;
  std::function<Vec(const Vec&)> drift_fn;
  double lipschitz_drift = 0.0;

  bool linear_diffusion = true;
  std::vector<Mat> sigmas;
  std::function<Mat(const Vec&)> diffusion_fn;
  double lipschitz_diffusion = 0.0;  // Z_p

  Vec drift(const Vec& x) const { return affine ? Vec(A * x + b) : drift_fn(x); }

  Mat diffusion(const Vec& x) const {
    if (!linear_diffusion) return diffusion_fn(x);
    Mat g(x.size(), static_cast<Eigen::Index>(sigmas.size()));
    for (std::size_t i = 0; i < sigmas.size(); ++i) g.col(i) = sigmas[i] * x;
    return g;
  }
};

struct SwitchedSystem {
  int n = 0;
  int q_hat = 0;
  std::vector<ModeDynamics> modes;  // indexed 0..m-1, reported 1-based
  BoxUnion domain;
  std::optional<double> dwell_time;

  int num_modes() const { return static_cast<int>(modes.size()); }
  bool zero_diffusion() const;
};

/* Z_p for a linear diffusion term: max over i of the induced infinity norm
 * of sigma_i. An explicit override in the system file takes precedence. */
double lipschitz_of_linear_diffusion(const std::vector<Mat>& sigmas);

/* Checks all type invariants; empty result means the system is well formed.
 * Declared Lipschitz constants of non-affine modes are audited against
 * sampled difference quotients (1000 point pairs, deterministic seed). */
std::vector<Diagnostic> validate_system(const SwitchedSystem& sys,
                                        std::uint64_t audit_seed = 0x5705);

/* induced infinity norm (max absolute row sum) */
double induced_inf_norm(const Mat& A);

}  // namespace stosym

#endif
