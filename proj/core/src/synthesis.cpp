#include "stosym/synthesis.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include "stosym/parallel.hpp"
#include "stosym/rng.hpp"

namespace stosym {

BoxUnion contract_set(const BoxUnion& s, double eps) {
  BoxUnion out;
  for (const auto& b : s.boxes) {
    Box c{b.lo.array() + eps, b.hi.array() - eps};
    bool ok = true;
    for (int i = 0; i < c.dim(); ++i)
      if (c.lo[i] > c.hi[i]) ok = false;
    if (ok) out.boxes.push_back(std::move(c));
  }
  return out;
}

BoxUnion inflate_set(const BoxUnion& s, double eps) {
  BoxUnion out;
  for (const auto& b : s.boxes)
    out.boxes.push_back(Box{b.lo.array() - eps, b.hi.array() + eps});
  return out;
}

Bitset label_states(const SymbolicModel& model, const BoxUnion& s) {
  const std::int64_t ns = model.num_states();
  Bitset bits(ns);
  auto* words = bits.words().data();
  parallel_for(
      ns,
      [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t st = b; st < e; ++st)
          if (s.contains(model.output(st)))
            words[st >> 6] |= std::uint64_t{1} << (st & 63);
      },
      /* chunk multiple of 64 so parallel writes never share a word */ 1 << 14);
  return bits;
}

Bitset label_spec_region(const SymbolicModel& model, const BoxUnion& region,
                         const BoxUnion& avoid, bool contract) {
  const BoxUnion reg = contract ? contract_set(region, model.epsilon) : region;
  Bitset bits = label_states(model, reg);
  if (!avoid.empty()) {
    const BoxUnion av = contract ? inflate_set(avoid, model.epsilon) : avoid;
    const Bitset bad = label_states(model, av);
    for (std::size_t i = 0; i < bits.words().size(); ++i)
      bits.words()[i] &= ~bad.words()[i];
  }
  return bits;
}

namespace {

/* existential-input predecessor sweep step: out[s] = base[s] && exists input
 * with every successor inside `win` (deterministic models have exactly one
 * successor per input) */
void cpre_sweep(const SymbolicModel& model, const Bitset& base,
                const Bitset& win, Bitset& out) {
  const std::int64_t ns = model.num_states();
  const int m = model.num_inputs();
  auto* ow = out.words().data();
  const auto* bw = base.words().data();
  parallel_for(
      ns,
      [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t s = b; s < e; ++s) {
          ow[s >> 6] &= ~(std::uint64_t{1} << (s & 63));
          if (!((bw[s >> 6] >> (s & 63)) & 1u)) continue;
          bool any = false;
          for (int p = 0; p < m && !any; ++p) {
            if (model.has_multi()) {
              bool all = true, seen = false;
              model.for_each_successor(s, p, [&](std::int64_t t) {
                seen = true;
                if (!win.get(t)) all = false;
              });
              any = seen && all;
            } else {
              const std::int64_t t = model.successor(s, p);
              any = t >= 0 && win.get(t);
            }
          }
          if (any) ow[s >> 6] |= std::uint64_t{1} << (s & 63);
        }
      },
      1 << 14);
}

/* deterministic strategy: smallest input whose successors stay in `win` */
std::vector<std::uint8_t> pick_strategy(const SymbolicModel& model,
                                        const Bitset& win) {
  const std::int64_t ns = model.num_states();
  const int m = model.num_inputs();
  std::vector<std::uint8_t> strat(ns, 0xFF);
  parallel_for(ns, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t s = b; s < e; ++s) {
      if (!win.get(s)) continue;
      for (int p = 0; p < m; ++p) {
        bool ok;
        if (model.has_multi()) {
          bool all = true, seen = false;
          model.for_each_successor(s, p, [&](std::int64_t t) {
            seen = true;
            if (!win.get(t)) all = false;
          });
          ok = seen && all;
        } else {
          const std::int64_t t = model.successor(s, p);
          ok = t >= 0 && win.get(t);
        }
        if (ok) {
          strat[s] = static_cast<std::uint8_t>(p);
          break;
        }
      }
    }
  });
  return strat;
}

/* lattice reverse adjacency (per mode), built once for backward reach */
struct ReverseLattice {
  std::vector<std::int64_t> offsets;  // (num_points * m + 1)
  std::vector<std::int64_t> pre;      // source lattice points
};

ReverseLattice build_reverse(const SymbolicModel& model) {
  const std::int64_t nk = model.geom.num_points;
  const int m = model.num_inputs();
  ReverseLattice r;
  r.offsets.assign(nk * m + 1, 0);
  for (std::int64_t k = 0; k < nk; ++k)
    for (int p = 0; p < m; ++p) {
      const std::int64_t t = model.lattice_succ[k * m + p];
      if (t >= 0) ++r.offsets[t * m + p + 1];
    }
  for (std::size_t i = 1; i < r.offsets.size(); ++i)
    r.offsets[i] += r.offsets[i - 1];
  r.pre.resize(r.offsets.back());
  std::vector<std::int64_t> fill(r.offsets.begin(), r.offsets.end() - 1);
  for (std::int64_t k = 0; k < nk; ++k)
    for (int p = 0; p < m; ++p) {
      const std::int64_t t = model.lattice_succ[k * m + p];
      if (t >= 0) r.pre[fill[t * m + p]++] = k;
    }
  return r;
}

constexpr std::int32_t kUnreached = std::numeric_limits<std::int32_t>::max();

/* predecessors of a product state under the model's transition rule */
template <class Fn>
void for_each_pre(const SymbolicModel& model, const ReverseLattice* rev,
                  std::int64_t t, Fn&& fn) {
  const int m = model.num_inputs();
  const int nhat = model.dwell_steps;
  switch (model.kind) {
    case ModelKind::Grid: {
      for (int p = 0; p < m; ++p) {
        const std::int64_t a = rev->offsets[t * m + p];
        const std::int64_t b = rev->offsets[t * m + p + 1];
        for (std::int64_t j = a; j < b; ++j) fn(rev->pre[j]);
      }
      return;
    }
    case ModelKind::GridDwell: {
      const std::int64_t kk = t / (m * nhat);
      const int pn = static_cast<int>((t / nhat) % m);
      const int in = static_cast<int>(t % nhat);
      /* enumerate compatible (p, i) of the source; the lattice step always
       * runs under the source mode p */
      auto emit = [&](int p, int i) {
        const std::int64_t a = rev->offsets[kk * m + p];
        const std::int64_t b = rev->offsets[kk * m + p + 1];
        for (std::int64_t j = a; j < b; ++j)
          fn((rev->pre[j] * m + p) * nhat + i);
      };
      if (in >= 1 && in <= nhat - 2) {  // mid-count: no switch, i = in-1
        emit(pn, in - 1);
      } else if (in == nhat - 1) {  // reached the boundary or stayed there
        if (nhat >= 2) emit(pn, nhat - 2);
        emit(pn, nhat - 1);
      }
      if (in == 0 && nhat >= 2) {  // switch just happened
        for (int p = 0; p < m; ++p)
          if (p != pn) emit(p, nhat - 1);
      }
      if (nhat == 1) {  // counter degenerate: any source mode allowed
        for (int p = 0; p < m; ++p)
          if (p != pn) emit(p, 0);
      }
      return;
    }
    case ModelKind::Seq: {
      const std::int64_t mN1 = model.seq_count() / m;
      const std::int64_t tail = t / m;
      for (int d = 0; d < m; ++d) fn(d * mN1 + tail);
      return;
    }
    case ModelKind::SeqDwell: {
      const std::int64_t ss = t / nhat;
      const int in = static_cast<int>(t % nhat);
      const int appended = static_cast<int>(ss % m);
      const std::int64_t mN1 = model.seq_count() / m;
      const std::int64_t tail = ss / m;  // p2..pN of the source
      for (int d = 0; d < m; ++d) {
        const std::int64_t s_src = d * mN1 + tail;
        const int src_last = static_cast<int>(s_src % m);
        /* forward rule from (s_src, i): input = appended digit */
        if (in >= 1 && in <= nhat - 2) {
          if (appended == src_last) fn(s_src * nhat + (in - 1));
        } else if (in == nhat - 1) {
          if (appended == src_last) {
            if (nhat >= 2) fn(s_src * nhat + (nhat - 2));
            fn(s_src * nhat + (nhat - 1));
          }
        }
        if (in == 0 && nhat >= 2 && appended != src_last)
          fn(s_src * nhat + (nhat - 1));
        if (nhat == 1 && appended != src_last) fn(s_src * nhat);
      }
      return;
    }
  }
}

}  // namespace

Controller solve_safety(const SymbolicModel& model, const Bitset& safe) {
  const std::int64_t ns = model.num_states();
  Controller c;
  c.num_states = ns;
  c.num_inputs = model.num_inputs();
  Bitset W = safe;
  Bitset next(ns);
  for (;;) {
    cpre_sweep(model, W, W, next);
    if (next == W) break;
    std::swap(W, next);
  }
  c.winning = std::move(W);
  c.strategy = pick_strategy(model, c.winning);
  return c;
}

namespace {

Controller reach_deterministic(const SymbolicModel& model, const Bitset& target) {
  const std::int64_t ns = model.num_states();
  const int m = model.num_inputs();
  Controller c;
  c.num_states = ns;
  c.num_inputs = m;

  std::unique_ptr<ReverseLattice> rev;
  if (model.is_grid()) rev = std::make_unique<ReverseLattice>(build_reverse(model));

  std::vector<std::int32_t> dist(ns, kUnreached);
  std::vector<std::int64_t> frontier, next;
  for (std::int64_t s = 0; s < ns; ++s)
    if (target.get(s)) {
      dist[s] = 0;
      frontier.push_back(s);
    }
  std::int32_t level = 0;
  while (!frontier.empty()) {
    ++level;
    next.clear();
    for (std::int64_t t : frontier)
      for_each_pre(model, rev.get(), t, [&](std::int64_t s) {
        if (dist[s] == kUnreached) {
          dist[s] = level;
          next.push_back(s);
        }
      });
    frontier.swap(next);
  }

  c.winning = Bitset(ns);
  for (std::int64_t s = 0; s < ns; ++s)
    if (dist[s] != kUnreached) c.winning.set(s);

  /* first move of a shortest strategy; inside the target the smallest valid
   * input is kept so the strategy is total on the winning set */
  c.strategy.assign(ns, 0xFF);
  parallel_for(ns, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t s = b; s < e; ++s) {
      if (dist[s] == kUnreached) continue;
      if (dist[s] == 0) {
        for (int p = 0; p < m; ++p) {
          const std::int64_t t = model.successor(s, p);
          if (t >= 0) {
            c.strategy[s] = static_cast<std::uint8_t>(p);
            break;
          }
        }
        continue;
      }
      for (int p = 0; p < m; ++p) {
        const std::int64_t t = model.successor(s, p);
        if (t >= 0 && dist[t] == dist[s] - 1) {
          c.strategy[s] = static_cast<std::uint8_t>(p);
          break;
        }
      }
    }
  });
  return c;
}

Controller reach_adversarial(const SymbolicModel& model, const Bitset& target) {
  const std::int64_t ns = model.num_states();
  Controller c;
  c.num_states = ns;
  c.num_inputs = model.num_inputs();
  Bitset W = target;
  Bitset all(ns, true);
  Bitset pre(ns);
  for (;;) {
    cpre_sweep(model, all, W, pre);
    bool changed = false;
    for (std::size_t i = 0; i < W.words().size(); ++i) {
      const std::uint64_t merged = W.words()[i] | pre.words()[i];
      if (merged != W.words()[i]) changed = true;
      W.words()[i] = merged;
    }
    if (!changed) break;
  }
  c.winning = std::move(W);
  c.strategy = pick_strategy(model, c.winning);
  /* inside the target any valid move is acceptable */
  for (std::int64_t s = 0; s < ns; ++s)
    if (target.get(s) && c.strategy[s] == 0xFF)
      for (int p = 0; p < c.num_inputs; ++p) {
        bool seen = false;
        model.for_each_successor(s, p, [&](std::int64_t) { seen = true; });
        if (seen) {
          c.strategy[s] = static_cast<std::uint8_t>(p);
          break;
        }
      }
  return c;
}

}  // namespace

Controller solve_reach(const SymbolicModel& model, const Bitset& target) {
  return model.has_multi() ? reach_adversarial(model, target)
                           : reach_deterministic(model, target);
}

Controller solve_reach_stay(const SymbolicModel& model, const Bitset& target) {
  Controller safety = solve_safety(model, target);
  Controller reach = solve_reach(model, safety.winning);
  Controller c;
  c.num_states = reach.num_states;
  c.num_inputs = reach.num_inputs;
  c.winning = std::move(reach.winning);
  c.core = std::move(safety.winning);
  c.strategy = std::move(reach.strategy);
  for (std::int64_t s = 0; s < c.num_states; ++s)
    if (c.core.get(s)) c.strategy[s] = safety.strategy[s];
  return c;
}

std::int64_t closure_violations(const SymbolicModel& model, const Controller& c,
                                std::int64_t sample, std::uint64_t seed) {
  const std::int64_t ns = model.num_states();
  std::int64_t violations = 0;
  auto check = [&](std::int64_t s) {
    const int p = c.strategy[s];
    if (p == 0xFF) {
      ++violations;
      return;
    }
    bool ok = true, seen = false;
    model.for_each_successor(s, p, [&](std::int64_t t) {
      seen = true;
      if (!c.winning.get(t)) ok = false;
    });
    if (!seen || !ok) ++violations;
  };
  if (sample <= 0 || sample >= ns) {
    for (std::int64_t s = 0; s < ns; ++s)
      if (c.winning.get(s)) check(s);
  } else {
    /* sample the requested number of winning states */
    UniformStream u(seed, 0);
    std::int64_t checked = 0, attempts = 0;
    const std::int64_t max_attempts = sample * 1000;
    while (checked < sample && attempts < max_attempts) {
      ++attempts;
      const auto s = static_cast<std::int64_t>(u.next_below(ns));
      if (!c.winning.get(s)) continue;
      check(s);
      ++checked;
    }
  }
  return violations;
}

RuntimeStrategy::RuntimeStrategy(const SymbolicModel& model,
                                 const Controller& ctrl)
    : model_(model), ctrl_(ctrl) {}

bool RuntimeStrategy::init(const Vec& x0, const CertificateSet& certs,
                           const std::vector<double>* deltas) {
  auto inits = initial_abstract_states(model_, x0, model_.epsilon, certs, deltas);
  for (std::int64_t s : inits)
    if (ctrl_.winning.get(s)) {
      init_at(s);
      return true;
    }
  return false;
}

void RuntimeStrategy::init_at(std::int64_t state) {
  state_ = state;
  faults_ = 0;
  pending_mode_ =
      model_.kind == ModelKind::GridDwell ? model_.state_mode(state) : -1;
}

int RuntimeStrategy::step(const Vec& measured) {
  const int m = model_.num_inputs();
  auto fallback = [&](std::int64_t s) {
    for (int p = 0; p < m; ++p)
      if (model_.successor(s, p) >= 0) return p;
    return 0;
  };
  switch (model_.kind) {
    case ModelKind::Grid: {
      double d = 0.0;
      const std::int64_t k = model_.geom.nearest_point(measured, &d);
      if (d > model_.geom.eta + 1e-9) ++faults_;  // left the gridded domain
      state_ = k;
      int p = ctrl_.strategy[k];
      if (p == 0xFF) {
        ++faults_;
        p = fallback(k);
      }
      return p;
    }
    case ModelKind::GridDwell: {
      double d = 0.0;
      const std::int64_t k = model_.geom.nearest_point(measured, &d);
      if (d > model_.geom.eta + 1e-9) ++faults_;
      const int p_cur = pending_mode_;
      const int i_cur = model_.state_counter(state_);
      const std::int64_t s =
          (k * m + p_cur) * model_.dwell_steps + i_cur;
      state_ = s;
      int choice = ctrl_.strategy[s];
      if (choice == 0xFF) {
        ++faults_;
        choice = i_cur < model_.dwell_steps - 1 ? p_cur : fallback(s);
      }
      /* advance the (mode, counter) pair; the lattice part is re-measured */
      const int inext = i_cur < model_.dwell_steps - 1
                            ? i_cur + 1
                            : (choice == p_cur ? model_.dwell_steps - 1 : 0);
      state_ = (k * m + choice) * model_.dwell_steps + inext;
      const int apply = p_cur;
      pending_mode_ = choice;
      return apply;
    }
    case ModelKind::Seq:
    case ModelKind::SeqDwell: {
      int p = ctrl_.strategy[state_];
      if (p == 0xFF) {
        ++faults_;
        p = fallback(state_);
      }
      state_ = model_.successor(state_, p);
      return p;
    }
  }
  return 0;
}

void save_controller(const std::string& path, const Controller& c) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "stosym-controller v1\n";
  auto put = [&](const auto& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  put(c.num_states);
  put(c.num_inputs);
  put(c.model_checksum);
  const std::uint8_t kind = static_cast<std::uint8_t>(c.spec.kind);
  put(kind);
  const std::uint8_t contract = c.spec.epsilon_contract ? 1 : 0;
  put(contract);
  auto put_boxes = [&](const BoxUnion& u) {
    const std::int64_t nb = static_cast<std::int64_t>(u.boxes.size());
    put(nb);
    for (const auto& b : u.boxes) {
      const std::int64_t d = b.dim();
      put(d);
      f.write(reinterpret_cast<const char*>(b.lo.data()), d * 8);
      f.write(reinterpret_cast<const char*>(b.hi.data()), d * 8);
    }
  };
  put_boxes(c.spec.safe);
  put_boxes(c.spec.target);
  put_boxes(c.spec.avoid);
  auto put_words = [&](const Bitset& b) {
    const std::int64_t n = b.size();
    put(n);
    f.write(reinterpret_cast<const char*>(b.words().data()),
            static_cast<std::streamsize>(b.words().size() * 8));
  };
  put_words(c.winning);
  put_words(c.core);
  const std::int64_t sn = static_cast<std::int64_t>(c.strategy.size());
  put(sn);
  f.write(reinterpret_cast<const char*>(c.strategy.data()), sn);
}

Controller load_controller(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string header;
  std::getline(f, header);
  if (header != "stosym-controller v1")
    throw std::runtime_error("unsupported controller file version");
  Controller c;
  auto get = [&](auto& v) { f.read(reinterpret_cast<char*>(&v), sizeof v); };
  get(c.num_states);
  get(c.num_inputs);
  get(c.model_checksum);
  std::uint8_t kind, contract;
  get(kind);
  get(contract);
  c.spec.kind = static_cast<SpecKind>(kind);
  c.spec.epsilon_contract = contract != 0;
  auto get_boxes = [&](BoxUnion& u) {
    std::int64_t nb;
    get(nb);
    for (std::int64_t i = 0; i < nb; ++i) {
      std::int64_t d;
      get(d);
      Box b{Vec(d), Vec(d)};
      f.read(reinterpret_cast<char*>(b.lo.data()), d * 8);
      f.read(reinterpret_cast<char*>(b.hi.data()), d * 8);
      u.boxes.push_back(std::move(b));
    }
  };
  get_boxes(c.spec.safe);
  get_boxes(c.spec.target);
  get_boxes(c.spec.avoid);
  auto get_words = [&](Bitset& b) {
    std::int64_t n;
    get(n);
    b = Bitset(n);
    f.read(reinterpret_cast<char*>(b.words().data()),
           static_cast<std::streamsize>(b.words().size() * 8));
  };
  get_words(c.winning);
  get_words(c.core);
  std::int64_t sn;
  get(sn);
  c.strategy.resize(sn);
  f.read(reinterpret_cast<char*>(c.strategy.data()), sn);
  if (!f) throw std::runtime_error("controller file truncated");
  return c;
}

}  // namespace stosym
