#include <benchmark/benchmark.h>

#include <stosym/abstraction.hpp>
#include <stosym/synthesis.hpp>
#include <stosym/validation.hpp>

using namespace stosym;

namespace {

/* six-room thermal model (mode 2 = first heater on) */
SwitchedSystem room_system() {
  const double a = 0.05, ae14 = 0.005, ae = 0.0033, ah = 0.0036;
  const double Te = 10.0, Tf = 100.0;
  SwitchedSystem sys;
  sys.n = 6;
  sys.q_hat = 6;
  const int pairs[6][2] = {{0, 1}, {0, 2}, {0, 4}, {1, 3}, {2, 3}, {3, 5}};
  for (int mode = 1; mode <= 3; ++mode) {
    ModeDynamics md;
    md.A = Mat::Zero(6, 6);
    for (auto& pr : pairs) {
      md.A(pr[0], pr[1]) += a;
      md.A(pr[1], pr[0]) += a;
      md.A(pr[0], pr[0]) -= a;
      md.A(pr[1], pr[1]) -= a;
    }
    md.A(0, 0) -= ae14;
    md.A(3, 3) -= ae14;
    for (int i : {1, 2, 4, 5}) md.A(i, i) -= ae;
    md.b = Vec(6);
    md.b << ae14 * Te, ae * Te, ae * Te, ae14 * Te, ae * Te, ae * Te;
    if (mode == 2) {
      md.A(0, 0) -= ah;
      md.b[0] += ah * Tf;
    }
    if (mode == 3) {
      md.A(3, 3) -= ah;
      md.b[3] += ah * Tf;
    }
    const double s = mode == 1 ? 0.002 : 0.003;
    for (int i = 0; i < 6; ++i) {
      Mat sigma = Mat::Zero(6, 6);
      sigma(i, i) = s;
      md.sigmas.push_back(std::move(sigma));
    }
    md.lipschitz_diffusion = s;
    sys.modes.push_back(std::move(md));
  }
  sys.domain = BoxUnion::single(Vec::Constant(6, 11.7), Vec::Constant(6, 22.0));
  return sys;
}

SwitchedSystem planar_system() {
  SwitchedSystem sys;
  sys.n = 2;
  sys.q_hat = 2;
  sys.dwell_time = 2.0;
  for (int p = 1; p <= 2; ++p) {
    ModeDynamics md;
    md.A = Mat(2, 2);
    md.A << -0.25, p, p - 3.0, -0.25;
    md.b = Vec(2);
    md.b << std::pow(-1.0, p) * 0.25, std::pow(-1.0, p) * (3.0 - p);
    for (int i = 0; i < 2; ++i) {
      Mat sigma = Mat::Zero(2, 2);
      sigma(i, i) = 0.01;
      md.sigmas.push_back(std::move(sigma));
    }
    md.lipschitz_diffusion = 0.01;
    sys.modes.push_back(std::move(md));
  }
  Vec lo(2), hi(2);
  lo << -5.0, -4.0;
  hi << 5.0, 4.0;
  sys.domain = BoxUnion::single(lo, hi);
  return sys;
}

CertificateSet planar_certs(const SwitchedSystem& sys) {
  CertificateSet cs;
  cs.q = 1.0;
  for (int p = 0; p < 2; ++p) {
    QuadraticCertificate c;
    c.q = 1.0;
    c.P = Mat::Zero(2, 2);
    c.P(0, 0) = p == 0 ? 2.0 : 1.0;
    c.P(1, 1) = p == 0 ? 1.0 : 2.0;
    c.kappa_hat = max_kappa_hat(sys.modes[p].A, sys.modes[p].sigmas, c.P);
    c.fill_defaults(2);
    cs.per_mode.push_back(std::move(c));
  }
  cs.aggregate();
  return cs;
}

void BM_NominalFlowRoom(benchmark::State& state) {
  auto sys = room_system();
  FlowConfig cfg;
  cfg.ode_substeps_per_tau = static_cast<int>(state.range(0));
  Vec x = Vec::Constant(6, 18.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nominal_flow(sys, x, 1, 30.0, cfg));
  }
}
BENCHMARK(BM_NominalFlowRoom)->Arg(16)->Arg(64)->Arg(256);

void BM_EulerMaruyamaStepRoom(benchmark::State& state) {
  auto sys = room_system();
  Vec x = Vec::Constant(6, 18.0);
  NormalStream noise(7, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        em_step_tau(sys, x, 1, 30.0, static_cast<int>(state.range(0)), noise));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerMaruyamaStepRoom)->Arg(100);

void BM_GridBuildPlanar(benchmark::State& state) {
  auto sys = planar_system();
  auto certs = planar_certs(sys);
  GridParams gp;
  gp.tau = 0.5;
  gp.eta = 1.0 / static_cast<double>(state.range(0));
  gp.epsilon = 1.2;
  gp.dwell_steps = 4;
  for (auto _ : state) {
    auto model = build_grid_dwell(sys, certs, gp);
    benchmark::DoNotOptimize(model.num_states());
    state.SetItemsProcessed(state.iterations() * model.geom.num_points);
  }
}
BENCHMARK(BM_GridBuildPlanar)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SafetyFixedPointPlanar(benchmark::State& state) {
  auto sys = planar_system();
  auto certs = planar_certs(sys);
  GridParams gp;
  gp.tau = 0.5;
  gp.eta = 1.0 / static_cast<double>(state.range(0));
  gp.epsilon = 1.2;
  gp.dwell_steps = 4;
  auto model = build_grid_dwell(sys, certs, gp);
  Vec zlo(2), zhi(2);
  zlo << -1.5, -1.0;
  zhi << 1.5, 1.0;
  auto safe = label_spec_region(model, sys.domain, BoxUnion::single(zlo, zhi),
                                false);
  for (auto _ : state) {
    auto ctrl = solve_safety(model, safe);
    benchmark::DoNotOptimize(ctrl.winning.count());
  }
  state.SetItemsProcessed(state.iterations() * model.num_states());
}
BENCHMARK(BM_SafetyFixedPointPlanar)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SeqBuildPlanar(benchmark::State& state) {
  auto sys = planar_system();
  SeqParams sp;
  sp.tau = 0.5;
  sp.N = static_cast<int>(state.range(0));
  sp.x_s = Vec::Zero(2);
  sp.epsilon = 1.2;
  for (auto _ : state) {
    auto model = build_seq(sys, sp);
    benchmark::DoNotOptimize(model.outputs.size());
  }
  state.SetItemsProcessed(state.iterations() << state.range(0));
}
BENCHMARK(BM_SeqBuildPlanar)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
