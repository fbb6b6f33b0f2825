#include "stosym/flow.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace stosym {

AffineStep rk4_affine_step(const Mat& A, const Vec& b, double h) {
  const Eigen::Index n = A.rows();
  const Mat I = Mat::Identity(n, n);
  /* RK4 on xdot = A x + b collapses to x' = R x + r */
  Mat A2 = A * A, A3 = A2 * A, A4 = A3 * A;
  AffineStep s;
  s.R = I + h * A + (h * h / 2.0) * A2 + (h * h * h / 6.0) * A3 +
        (h * h * h * h / 24.0) * A4;
  s.r = (h * I + (h * h / 2.0) * A + (h * h * h / 6.0) * A2 +
         (h * h * h * h / 24.0) * A3) *
        b;
  return s;
}

namespace {

struct StepEntry {
  Mat A;
  Vec b;
  AffineStep step;
};

bool same(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}
bool same(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

/* Thread-local cache of the affine RK4 substep map, validated against the
 * stored A and b so stale pointers can never serve a wrong map. */
const AffineStep& cached_step(const ModeDynamics& md, double h) {
  thread_local std::map<std::pair<const void*, double>, StepEntry> cache;
  auto key = std::make_pair(static_cast<const void*>(&md), h);
  auto it = cache.find(key);
  if (it == cache.end() || !same(it->second.A, md.A) || !same(it->second.b, md.b)) {
    StepEntry e{md.A, md.b, rk4_affine_step(md.A, md.b, h)};
    it = cache.insert_or_assign(key, std::move(e)).first;
  }
  return it->second.step;
}

Vec rk4_general(const ModeDynamics& md, Vec x, double h, int steps) {
  for (int k = 0; k < steps; ++k) {
    Vec k1 = md.drift(x);
    Vec k2 = md.drift(Vec(x + (h / 2.0) * k1));
    Vec k3 = md.drift(Vec(x + (h / 2.0) * k2));
    Vec k4 = md.drift(Vec(x + h * k3));
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw std::runtime_error("nominal flow diverged");
  }
  return x;
}

}  // namespace

Vec nominal_flow(const SwitchedSystem& sys, const Vec& x, int mode, double tau,
                 const FlowConfig& cfg) {
  if (mode < 0 || mode >= sys.num_modes())
    throw std::invalid_argument("invalid mode index");
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  const ModeDynamics& md = sys.modes[mode];
  const int steps = std::max(1, cfg.ode_substeps_per_tau);
  const double h = tau / steps;
  if (!md.affine) return rk4_general(md, x, h, steps);
  const AffineStep& s = cached_step(md, h);
  Vec y = x;
  for (int k = 0; k < steps; ++k) y = s.R * y + s.r;
  if (!y.allFinite()) throw std::runtime_error("nominal flow diverged");
  return y;
}

Vec nominal_flow_word(const SwitchedSystem& sys, const Vec& x,
                      const std::vector<int>& modes, double tau,
                      const FlowConfig& cfg) {
  Vec y = x;
  for (int p : modes) y = nominal_flow(sys, y, p, tau, cfg);
  return y;
}

Vec em_step_tau(const SwitchedSystem& sys, const Vec& x, int mode, double tau,
                int substeps, NormalStream& noise) {
  const ModeDynamics& md = sys.modes[mode];
  const double dt = tau / substeps;
  const double sq = std::sqrt(dt);
  Vec y = x;
  Vec dw(sys.q_hat);
  for (int k = 0; k < substeps; ++k) {
    for (int i = 0; i < sys.q_hat; ++i) dw[i] = sq * noise.next();
    Vec drift = md.drift(y);
    y += dt * drift + md.diffusion(y) * dw;
    if (!y.allFinite()) throw std::runtime_error("sample path diverged");
  }
  return y;
}

std::vector<Vec> sde_sample_path(const SwitchedSystem& sys, const Vec& x0,
                                 const std::vector<int>& modes, double tau,
                                 std::uint64_t trajectory,
                                 const FlowConfig& cfg) {
  NormalStream noise(cfg.seed, trajectory);
  std::vector<Vec> out;
  out.reserve(modes.size() + 1);
  out.push_back(x0);
  Vec x = x0;
  for (int p : modes) {
    x = em_step_tau(sys, x, p, tau, std::max(1, cfg.sde_substeps_per_tau), noise);
    out.push_back(x);
  }
  return out;
}

}  // namespace stosym
