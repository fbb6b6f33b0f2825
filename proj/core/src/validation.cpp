#include "stosym/validation.hpp"

#include <cmath>
#include <cstring>

#include "stosym/parallel.hpp"
#include "stosym/rng.hpp"

namespace stosym {

namespace {

/* mode schedule of a sequence-kind controller: open loop, identical for all
 * runs, so it is computed once */
std::vector<int> sequence_schedule(const SymbolicModel& model,
                                   const Controller& ctrl, std::int64_t s0,
                                   int steps) {
  std::vector<int> modes(steps);
  RuntimeStrategy rt(model, ctrl);
  rt.init_at(s0);
  Vec dummy(model.n);
  dummy.setZero();
  for (int k = 0; k < steps; ++k) modes[k] = rt.step(dummy);
  return modes;
}

}  // namespace

ValidationReport monte_carlo_closed_loop(
    const SwitchedSystem& sys, const SymbolicModel& model,
    const Controller& ctrl, const CertificateSet& certs, const Vec& x0,
    const BoxUnion& W, double T, std::int64_t runs, std::uint64_t seed,
    const FlowConfig& cfg, const std::vector<double>* deltas) {
  const int steps = static_cast<int>(std::llround(T / model.tau));
  if (std::abs(steps * model.tau - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("T must be a multiple of tau");

  /* the initial abstract state: first admissible winning state */
  RuntimeStrategy probe(model, ctrl);
  if (!probe.init(x0, certs, deltas))
    throw std::runtime_error(
        "no winning abstract initial state is admissible for x0");
  const std::int64_t s0 = probe.abstract_state();

  const bool seq_kind =
      model.kind == ModelKind::Seq || model.kind == ModelKind::SeqDwell;
  std::vector<int> schedule;
  if (seq_kind) schedule = sequence_schedule(model, ctrl, s0, steps);

  ValidationReport rep;
  rep.runs = runs;
  rep.seed = seed;
  rep.time_grid.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) rep.time_grid[k] = k * model.tau;

  std::vector<double> dist(static_cast<std::size_t>(runs) * (steps + 1));
  std::vector<double> run_max(runs), run_entry(runs);
  std::vector<std::int64_t> run_faults(runs, 0);
  const int substeps = std::max(1, cfg.sde_substeps_per_tau);

  parallel_for(
      runs,
      [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t r = b; r < e; ++r) {
          NormalStream noise(seed, r);
          RuntimeStrategy rt(model, ctrl);
          rt.init_at(s0);
          Vec x = x0;
          double* row = dist.data() + r * (steps + 1);
          row[0] = W.dist_inf(x);
          double worst = row[0];
          double entry = row[0] <= 0.0 ? 0.0 : -1.0;
          for (int k = 0; k < steps; ++k) {
            const int mode = seq_kind ? schedule[k] : rt.step(x);
            x = em_step_tau(sys, x, mode, model.tau, substeps, noise);
            row[k + 1] = W.dist_inf(x);
            worst = std::max(worst, row[k + 1]);
            if (entry < 0.0 && row[k + 1] <= 0.0) entry = (k + 1) * model.tau;
          }
          run_max[r] = worst;
          run_entry[r] = entry;
          if (!seq_kind) run_faults[r] = rt.faults();
        }
      },
      64);

  rep.mean_distance.assign(steps + 1, 0.0);
  rep.stderr_distance.assign(steps + 1, 0.0);
  for (std::int64_t r = 0; r < runs; ++r)
    for (int k = 0; k <= steps; ++k)
      rep.mean_distance[k] += dist[r * (steps + 1) + k];
  for (int k = 0; k <= steps; ++k) rep.mean_distance[k] /= runs;
  for (std::int64_t r = 0; r < runs; ++r)
    for (int k = 0; k <= steps; ++k) {
      const double d = dist[r * (steps + 1) + k] - rep.mean_distance[k];
      rep.stderr_distance[k] += d * d;
    }
  for (int k = 0; k <= steps; ++k)
    rep.stderr_distance[k] =
        runs > 1 ? std::sqrt(rep.stderr_distance[k] / (runs - 1.0) / runs) : 0.0;
  rep.run_max_distance = std::move(run_max);
  rep.run_first_entry = std::move(run_entry);
  for (auto f : run_faults) rep.faults += f;
  return rep;
}

std::int64_t hoeffding_samples(double range_width, double confidence,
                               double accuracy) {
  if (range_width <= 0.0) throw std::invalid_argument("range width must be positive");
  if (confidence <= 0.0 || confidence >= 1.0)
    throw std::invalid_argument("confidence must lie in (0,1)");
  if (accuracy <= 0.0) throw std::invalid_argument("accuracy must be positive");
  const double n = range_width * range_width * std::log(2.0 / (1.0 - confidence)) /
                   (2.0 * accuracy * accuracy);
  return static_cast<std::int64_t>(std::ceil(n));
}

namespace {

/* digits of a sequence state, oldest first */
std::vector<int> word_of(const SymbolicModel& model, std::int64_t s) {
  std::vector<int> w(model.N);
  for (int i = model.N - 1; i >= 0; --i) {
    w[i] = static_cast<int>(s % model.m);
    s /= model.m;
  }
  return w;
}

}  // namespace

EtaHatEstimate estimate_eta_hat(const SymbolicModel& model,
                                const SwitchedSystem& sys,
                                const CertificateSet& certs,
                                std::int64_t samples_per_transition,
                                std::int64_t max_pairs, double confidence,
                                double range_width, std::uint64_t seed,
                                const FlowConfig& cfg) {
  if (model.is_grid())
    throw std::invalid_argument("eta_hat applies to sequence models");
  const bool deterministic = sys.zero_diffusion();
  const std::int64_t total_pairs = model.seq_count() * model.m;
  std::int64_t npairs = max_pairs <= 0 ? total_pairs
                                       : std::min(max_pairs, total_pairs);
  if (deterministic) samples_per_transition = 1;

  /* the sampled subset of (state, mode) pairs */
  std::vector<std::int64_t> pair_ids(npairs);
  if (npairs == total_pairs) {
    for (std::int64_t i = 0; i < npairs; ++i) pair_ids[i] = i;
  } else {
    UniformStream u(seed, 0xE7A);
    for (std::int64_t i = 0; i < npairs; ++i)
      pair_ids[i] = static_cast<std::int64_t>(u.next_below(total_pairs));
  }

  const int substeps = std::max(1, cfg.sde_substeps_per_tau);
  std::vector<double> pair_mean(npairs, 0.0);

  parallel_for(
      npairs,
      [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t j = lo; j < hi; ++j) {
          const std::int64_t s = pair_ids[j] / model.m;
          const int appended = static_cast<int>(pair_ids[j] % model.m);
          auto w = word_of(model, s);
          if (deterministic) {
            /* no noise: the defect is the nominal one-step defect itself */
            Vec x(model.n);
            std::memcpy(x.data(), model.outputs.data() + s * model.n,
                        sizeof(double) * model.n);
            const Vec y = nominal_flow(sys, x, appended, model.tau, cfg);
            const std::int64_t sh =
                (s % (model.seq_count() / model.m)) * model.m + appended;
            Vec out(model.n);
            std::memcpy(out.data(), model.outputs.data() + sh * model.n,
                        sizeof(double) * model.n);
            pair_mean[j] = inf_norm(Vec(y - out));
            continue;
          }
          double acc = 0.0;
          for (std::int64_t r = 0; r < samples_per_transition; ++r) {
            /* the two paths share the suffix increments; stream ids fold the
             * pair index in so pairs are independent */
            NormalStream noise(seed, 0x100000000ull + pair_ids[j] * 131071 + r);
            Vec a = model.x_s;
            a = em_step_tau(sys, a, w[0], model.tau, substeps, noise);
            Vec b = model.x_s;
            /* lockstep over the common suffix (w[1..N-1], appended) */
            const double dt = model.tau / substeps;
            const double sq = std::sqrt(dt);
            Vec dw(sys.q_hat);
            for (int k = 1; k <= model.N; ++k) {
              const int mode = k < model.N ? w[k] : appended;
              const auto& md = sys.modes[mode];
              for (int ss = 0; ss < substeps; ++ss) {
                for (int i = 0; i < sys.q_hat; ++i) dw[i] = sq * noise.next();
                Vec fa = md.drift(a), fb = md.drift(b);
                a += dt * fa + md.diffusion(a) * dw;
                b += dt * fb + md.diffusion(b) * dw;
              }
            }
            acc += inf_norm(Vec(a - b));
          }
          pair_mean[j] = acc / samples_per_transition;
        }
      },
      16);

  EtaHatEstimate est;
  est.pairs = npairs;
  est.samples_total = npairs * samples_per_transition;
  for (double v : pair_mean) est.eta_hat = std::max(est.eta_hat, v);
  est.half_width =
      deterministic
          ? 0.0
          : range_width * std::sqrt(std::log(2.0 / (1.0 - confidence)) /
                                    (2.0 * samples_per_transition));

  /* analytic bound: expectation of the one-mode-step level, Monte Carlo */
  double m0 = 0.0;
  const std::int64_t bound_samples = deterministic ? 1 : 2000;
  for (int p = 0; p < sys.num_modes(); ++p) {
    double acc = 0.0;
    for (std::int64_t r = 0; r < bound_samples; ++r) {
      NormalStream noise(seed, 0x200000000ull + p * 65537 + r);
      Vec y = em_step_tau(sys, model.x_s, p, model.tau, substeps, noise);
      double v = 0.0;
      if (certs.common) {
        v = certs.per_mode.front().V(y, model.x_s);
      } else {
        for (const auto& c : certs.per_mode) v = std::max(v, c.V(y, model.x_s));
      }
      acc += v;
    }
    m0 = std::max(m0, acc / bound_samples);
  }
  double rate = certs.kappa;
  if (model.kind == ModelKind::SeqDwell && sys.dwell_time)
    rate -= std::log(certs.mu) / *sys.dwell_time;
  est.analytic_bound = std::pow(
      certs.alpha_lo_inv(std::exp(-rate * model.N * model.tau) * m0),
      1.0 / certs.q);
  return est;
}

BisimReport check_bisim_sample(
    const SwitchedSystem& sys, const SymbolicModel& model,
    const CertificateSet& certs,
    const std::vector<std::pair<Vec, std::int64_t>>& pairs, int horizon_steps,
    std::int64_t runs, double slack, std::uint64_t seed, const FlowConfig& cfg) {
  BisimReport rep;
  rep.pairs = static_cast<std::int64_t>(pairs.size());
  const double bound =
      certs.alpha_lo(std::pow(model.epsilon, certs.q)) * (1.0 + slack);
  const int substeps = std::max(1, cfg.sde_substeps_per_tau);

  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const Vec& x0 = pairs[pi].first;
    const std::int64_t s0 = pairs[pi].second;

    /* admissible mode word drawn as a random walk over the model; the word is
     * truncated if every input of some state leads to the invalid sink */
    std::vector<int> word;
    std::vector<std::int64_t> astates{s0};
    {
      UniformStream u(seed, 0x300000000ull + pi);
      std::int64_t s = s0;
      for (int k = 0; k < horizon_steps; ++k) {
        int valid[256], nv = 0;
        for (int p = 0; p < model.num_inputs(); ++p)
          if (model.successor(s, p) >= 0) valid[nv++] = p;
        if (nv == 0) break;
        const int choice = valid[u.next_below(nv)];
        word.push_back(choice);
        s = model.successor(s, choice);
        astates.push_back(s);
      }
    }
    const int len = static_cast<int>(word.size());

    /* E[V] against the abstract outputs, step by step */
    std::vector<double> vsum(len + 1, 0.0);
    std::vector<double> vrun(static_cast<std::size_t>(runs) * (len + 1));
    parallel_for(
        runs,
        [&](std::int64_t b, std::int64_t e) {
          for (std::int64_t r = b; r < e; ++r) {
            NormalStream noise(seed, 0x400000000ull + pi * 1000003 + r);
            Vec x = x0;
            double* row = vrun.data() + r * (len + 1);
            for (int k = 0; k <= len; ++k) {
              const Vec h = model.output(astates[k]);
              double v;
              if (certs.common || !model.is_dwell()) {
                v = certs.per_mode.front().V(x, h);
              } else {
                const int p = model.state_mode(astates[k]);
                v = certs.per_mode[p >= 0 ? p : 0].V(x, h);
              }
              row[k] = v;
              if (k < len)
                x = em_step_tau(sys, x, word[k], model.tau, substeps, noise);
            }
          }
        },
        64);
    for (std::int64_t r = 0; r < runs; ++r)
      for (int k = 0; k <= len; ++k)
        vsum[k] += vrun[r * (len + 1) + k];
    for (int k = 0; k <= len; ++k) {
      const double ev = vsum[k] / runs;
      rep.worst_ratio = std::max(rep.worst_ratio, ev / bound);
      if (ev > bound)
        rep.violations.push_back(
            {static_cast<std::int64_t>(pi), k, ev, bound});
    }
  }
  return rep;
}

}  // namespace stosym
