#include "stosym/model.hpp"

#include <cmath>
#include <sstream>

#include "stosym/rng.hpp"

namespace stosym {

double induced_inf_norm(const Mat& A) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    m = std::max(m, A.row(i).cwiseAbs().sum());
  return m;
}

double lipschitz_of_linear_diffusion(const std::vector<Mat>& sigmas) {
  if (sigmas.empty()) throw std::invalid_argument("no sigma matrices");
  const Eigen::Index n = sigmas.front().rows();
  double z = 0.0;
  for (const auto& s : sigmas) {
    if (s.rows() != n || s.cols() != n)
      throw std::invalid_argument("sigma matrices must all be n x n");
    z = std::max(z, induced_inf_norm(s));
  }
  return z;
}

bool SwitchedSystem::zero_diffusion() const {
  for (const auto& m : modes) {
    if (m.linear_diffusion) {
      for (const auto& s : m.sigmas)
        if (s.cwiseAbs().maxCoeff() > 0.0) return false;
    } else if (m.lipschitz_diffusion > 0.0) {
      return false;
    }
  }
  return true;
}

namespace {

void audit_mode(const SwitchedSystem& sys, int p, std::uint64_t seed,
                std::vector<Diagnostic>& out) {
  const ModeDynamics& md = sys.modes[p];
  const double radius = std::max(1.0, sys.domain.empty() ? 1.0 : sys.domain.sup_inf_norm());
  UniformStream u(seed, static_cast<std::uint64_t>(p));

  auto sample = [&] {
    Vec x(sys.n);
    for (int i = 0; i < sys.n; ++i) x[i] = u.next_in(-radius, radius);
    return x;
  };

  if (!md.linear_diffusion) {
    /* g(0) = 0 spot check */
    Mat g0 = md.diffusion(Vec::Zero(sys.n));
    if (g0.cwiseAbs().maxCoeff() > 1e-12) {
      std::ostringstream os;
      os << "mode " << (p + 1) << ": diffusion does not vanish at the origin";
      out.push_back({os.str()});
      return;
    }
    /* difference-quotient audit of the declared Z_p */
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      Vec x = sample(), y = sample();
      double d = inf_norm(Vec(x - y));
      if (d < 1e-9) continue;
      Mat gd = md.diffusion(x) - md.diffusion(y);
      worst = std::max(worst, induced_inf_norm(gd) / d);
    }
    if (worst > md.lipschitz_diffusion * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "mode " << (p + 1) << ": declared diffusion Lipschitz constant "
         << md.lipschitz_diffusion << " below sampled difference quotient "
         << worst;
      out.push_back({os.str()});
    }
  }
  if (!md.affine) {
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      Vec x = sample(), y = sample();
      double d = inf_norm(Vec(x - y));
      if (d < 1e-9) continue;
      worst = std::max(worst, inf_norm(Vec(md.drift(x) - md.drift(y))) / d);
    }
    if (worst > md.lipschitz_drift * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "mode " << (p + 1) << ": declared drift Lipschitz constant "
         << md.lipschitz_drift << " below sampled difference quotient " << worst;
      out.push_back({os.str()});
    }
  }
}

}  // namespace

std::vector<Diagnostic> validate_system(const SwitchedSystem& sys,
                                        std::uint64_t audit_seed) {
  std::vector<Diagnostic> out;
  if (sys.modes.empty()) {
    out.push_back({"no modes"});
    return out;
  }
  if (sys.n <= 0) out.push_back({"state dimension must be positive"});
  if (sys.q_hat <= 0) out.push_back({"Brownian dimension must be positive"});

  for (int p = 0; p < sys.num_modes(); ++p) {
    const auto& m = sys.modes[p];
    std::ostringstream who;
    who << "mode " << (p + 1);
    if (m.affine) {
      if (m.A.rows() != sys.n || m.A.cols() != sys.n || m.b.size() != sys.n)
        out.push_back({who.str() + ": affine drift dimensions do not match n"});
    } else if (!m.drift_fn) {
      out.push_back({who.str() + ": general drift has no evaluator"});
    }
    if (m.linear_diffusion) {
      if (static_cast<int>(m.sigmas.size()) != sys.q_hat)
        out.push_back({who.str() + ": expected q_hat sigma matrices"});
      for (const auto& s : m.sigmas)
        if (s.rows() != sys.n || s.cols() != sys.n)
          out.push_back({who.str() + ": sigma matrix is not n x n"});
    } else if (!m.diffusion_fn) {
      out.push_back({who.str() + ": general diffusion has no evaluator"});
    }
    if (m.lipschitz_diffusion < 0.0)
      out.push_back({who.str() + ": negative diffusion Lipschitz constant"});
  }

  if (sys.domain.empty()) {
    out.push_back({"domain is empty"});
  } else {
    for (const auto& b : sys.domain.boxes) {
      if (b.dim() != sys.n)
        out.push_back({"domain box dimension does not match n"});
      else if (b.span() <= 0.0)
        out.push_back({"domain box has non-positive span"});
    }
  }

  if (sys.dwell_time && *sys.dwell_time <= 0.0)
    out.push_back({"dwell time must be positive"});

  if (out.empty())
    for (int p = 0; p < sys.num_modes(); ++p) audit_mode(sys, p, audit_seed, out);

  return out;
}

}  // namespace stosym
