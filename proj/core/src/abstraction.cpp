#include "stosym/abstraction.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "stosym/parallel.hpp"

namespace stosym {

namespace {

/* nearest lattice index to t, ties toward the smaller index */
std::int64_t round_index(double t) {
  return static_cast<std::int64_t>(std::ceil(t - 0.5));
}

GridGeometry make_geometry(const BoxUnion& domain, double eta) {
  GridGeometry g;
  g.eta = eta;
  g.n = domain.dim();
  std::int64_t offset = 0;
  for (const auto& b : domain.boxes) {
    GridGeometry::Part p;
    p.idx_lo.resize(g.n);
    p.idx_hi.resize(g.n);
    p.stride.assign(g.n, 1);
    p.offset = offset;
    p.count = 1;
    for (int i = 0; i < g.n; ++i) {
      p.idx_lo[i] = static_cast<std::int64_t>(std::ceil(b.lo[i] / eta - 1e-9));
      p.idx_hi[i] = static_cast<std::int64_t>(std::floor(b.hi[i] / eta + 1e-9));
      if (p.idx_hi[i] < p.idx_lo[i])
        throw std::invalid_argument("eta exceeds the span of a domain box");
    }
    for (int i = g.n - 2; i >= 0; --i)
      p.stride[i] = p.stride[i + 1] * (p.idx_hi[i + 1] - p.idx_lo[i + 1] + 1);
    for (int i = 0; i < g.n; ++i) p.count *= p.idx_hi[i] - p.idx_lo[i] + 1;
    offset += p.count;
    g.parts.push_back(std::move(p));
  }
  g.num_points = offset;
  return g;
}

}  // namespace

Vec GridGeometry::point_of(std::int64_t k) const {
  for (const auto& p : parts) {
    if (k >= p.offset + p.count) continue;
    std::int64_t rem = k - p.offset;
    Vec x(n);
    for (int i = 0; i < n; ++i) {
      const std::int64_t span = p.idx_hi[i] - p.idx_lo[i] + 1;
      const std::int64_t j = (rem / p.stride[i]) % span;
      x[i] = static_cast<double>(p.idx_lo[i] + j) * eta;
    }
    return x;
  }
  throw std::out_of_range("grid state out of range");
}

std::int64_t GridGeometry::nearest_point(const Vec& x, double* dist) const {
  std::int64_t best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : parts) {
    std::int64_t id = p.offset;
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
      std::int64_t j = round_index(x[i] / eta);
      j = std::max(p.idx_lo[i], std::min(p.idx_hi[i], j));
      d = std::max(d, std::abs(x[i] - static_cast<double>(j) * eta));
      id += (j - p.idx_lo[i]) * p.stride[i];
    }
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

std::int64_t SymbolicModel::seq_count() const {
  std::int64_t c = 1;
  for (int i = 0; i < N; ++i) c *= m;
  return c;
}

std::int64_t SymbolicModel::base_count() const {
  return is_grid() ? geom.num_points : seq_count();
}

std::int64_t SymbolicModel::num_states() const {
  switch (kind) {
    case ModelKind::Grid: return geom.num_points;
    case ModelKind::GridDwell: return geom.num_points * m * dwell_steps;
    case ModelKind::Seq: return seq_count();
    case ModelKind::SeqDwell: return seq_count() * dwell_steps;
  }
  return 0;
}

std::int64_t SymbolicModel::grid_point(std::int64_t state) const {
  return kind == ModelKind::Grid ? state : state / (m * dwell_steps);
}

int SymbolicModel::state_mode(std::int64_t state) const {
  switch (kind) {
    case ModelKind::GridDwell: return static_cast<int>((state / dwell_steps) % m);
    case ModelKind::Seq: return static_cast<int>(state % m);
    case ModelKind::SeqDwell: return static_cast<int>((state / dwell_steps) % m);
    default: return -1;
  }
}

int SymbolicModel::state_counter(std::int64_t state) const {
  return is_dwell() ? static_cast<int>(state % dwell_steps) : 0;
}

Vec SymbolicModel::output(std::int64_t state) const {
  if (is_grid()) return geom.point_of(grid_point(state));
  const std::int64_t s = is_dwell() ? state / dwell_steps : state;
  Vec x(n);
  std::memcpy(x.data(), outputs.data() + s * n, sizeof(double) * n);
  return x;
}

std::int64_t SymbolicModel::successor(std::int64_t state, int input) const {
  switch (kind) {
    case ModelKind::Grid:
      return lattice_succ[state * m + input];
    case ModelKind::GridDwell: {
      const std::int64_t k = state / (m * dwell_steps);
      const int p = static_cast<int>((state / dwell_steps) % m);
      const int i = static_cast<int>(state % dwell_steps);
      if (i < dwell_steps - 1 && input != p) return -1;
      const std::int64_t kk = lattice_succ[k * m + p];
      if (kk < 0) return -1;
      const int inext =
          i < dwell_steps - 1 ? i + 1 : (input == p ? dwell_steps - 1 : 0);
      return (kk * m + input) * dwell_steps + inext;
    }
    case ModelKind::Seq: {
      const std::int64_t mN1 = seq_count() / m;
      return (state % mN1) * m + input;
    }
    case ModelKind::SeqDwell: {
      const std::int64_t s = state / dwell_steps;
      const int i = static_cast<int>(state % dwell_steps);
      const int last = static_cast<int>(s % m);
      if (i < dwell_steps - 1 && input != last) return -1;
      const std::int64_t mN1 = seq_count() / m;
      const std::int64_t ss = (s % mN1) * m + input;
      const int inext =
          i < dwell_steps - 1 ? i + 1 : (input == last ? dwell_steps - 1 : 0);
      return ss * dwell_steps + inext;
    }
  }
  return -1;
}

namespace {

void fill_lattice_transitions(SymbolicModel& md, const SwitchedSystem& sys,
                              const BuildOptions& opt) {
  const std::int64_t nk = md.geom.num_points;
  md.lattice_succ.assign(nk * md.m, -1);
  std::vector<std::vector<std::int64_t>> multi;
  if (opt.all_successors) multi.resize(nk * md.m);

  parallel_for(nk, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t k = b; k < e; ++k) {
      const Vec x = md.geom.point_of(k);
      for (int p = 0; p < md.m; ++p) {
        Vec y = nominal_flow(sys, x, p, md.tau, opt.flow);
        if (!sys.domain.contains(y, 1e-12)) continue;  // leaves D: invalid sink
        double d = 0.0;
        const std::int64_t kk = md.geom.nearest_point(y, &d);
        if (kk >= 0 && d <= md.geom.eta + 1e-9)
          md.lattice_succ[k * md.m + p] = kk;
        if (opt.all_successors) {
          /* every lattice point within eta of the flow */
          auto& list = multi[k * md.m + p];
          for (const auto& part : md.geom.parts) {
            std::vector<std::int64_t> lo(md.n), hi(md.n);
            bool ok = true;
            for (int i = 0; i < md.n; ++i) {
              lo[i] = std::max<std::int64_t>(
                  part.idx_lo[i],
                  static_cast<std::int64_t>(std::ceil((y[i] - md.geom.eta) / md.geom.eta - 1e-12)));
              hi[i] = std::min<std::int64_t>(
                  part.idx_hi[i],
                  static_cast<std::int64_t>(std::floor((y[i] + md.geom.eta) / md.geom.eta + 1e-12)));
              if (hi[i] < lo[i]) ok = false;
            }
            if (!ok) continue;
            std::vector<std::int64_t> it(lo);
            for (;;) {
              std::int64_t id = part.offset;
              for (int i = 0; i < md.n; ++i)
                id += (it[i] - part.idx_lo[i]) * part.stride[i];
              list.push_back(id);
              int i = md.n - 1;
              for (; i >= 0; --i) {
                if (++it[i] <= hi[i]) break;
                it[i] = lo[i];
              }
              if (i < 0) break;
            }
          }
        }
      }
    }
  });

  if (opt.all_successors) {
    md.multi_offsets.assign(nk * md.m + 1, 0);
    for (std::int64_t i = 0; i < nk * md.m; ++i)
      md.multi_offsets[i + 1] = md.multi_offsets[i] +
                                static_cast<std::int64_t>(multi[i].size());
    md.multi_succ.resize(md.multi_offsets.back());
    parallel_for(nk * md.m, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i)
        std::copy(multi[i].begin(), multi[i].end(),
                  md.multi_succ.begin() + md.multi_offsets[i]);
    });
  }
}

SymbolicModel build_grid_impl(const SwitchedSystem& sys,
                              const CertificateSet& certs,
                              const GridParams& params, const BuildOptions& opt,
                              bool dwell) {
  if (params.eta <= 0.0 || params.eta > sys.domain.span())
    throw std::invalid_argument("eta must lie in (0, span(domain)]");
  SymbolicModel md;
  md.kind = dwell ? ModelKind::GridDwell : ModelKind::Grid;
  md.n = sys.n;
  md.m = sys.num_modes();
  md.tau = params.tau;
  md.epsilon = params.epsilon;
  md.dwell_steps = dwell ? params.dwell_steps.value() : 1;
  if (dwell) {
    if (!sys.dwell_time)
      throw std::invalid_argument("dwell grid model needs a system dwell time");
    const double tau_d = *sys.dwell_time;
    if (std::abs(tau_d - md.dwell_steps * params.tau) > 1e-9 * tau_d)
      throw std::invalid_argument("tau_d must equal dwell_steps * tau");
    if (!(tau_d > std::log(certs.mu) / certs.kappa))
      throw infeasible_error("dwell time too short", "tau_d > log(mu)/kappa");
  }
  md.geom = make_geometry(sys.domain, params.eta);
  if (md.geom.num_points * md.m > opt.max_states)
    throw std::runtime_error("grid abstraction exceeds the state cap");
  fill_lattice_transitions(md, sys, opt);
  return md;
}

}  // namespace

SymbolicModel build_grid(const SwitchedSystem& sys, const CertificateSet& certs,
                         const GridParams& params, const BuildOptions& opt) {
  return build_grid_impl(sys, certs, params, opt, false);
}

SymbolicModel build_grid_dwell(const SwitchedSystem& sys,
                               const CertificateSet& certs,
                               const GridParams& params,
                               const BuildOptions& opt) {
  if (!params.dwell_steps)
    throw std::invalid_argument("dwell grid model needs dwell_steps");
  return build_grid_impl(sys, certs, params, opt, true);
}

namespace {

SymbolicModel build_seq_impl(const SwitchedSystem& sys, const SeqParams& params,
                             const BuildOptions& opt, bool dwell) {
  if (params.N < 1) throw std::invalid_argument("N must be at least 1");
  SymbolicModel md;
  md.kind = dwell ? ModelKind::SeqDwell : ModelKind::Seq;
  md.n = sys.n;
  md.m = sys.num_modes();
  md.tau = params.tau;
  md.epsilon = params.epsilon;
  md.N = params.N;
  md.x_s = params.x_s;
  md.dwell_steps = dwell ? params.dwell_steps.value() : 1;

  double count = 1.0;
  for (int i = 0; i < md.N; ++i) count *= md.m;
  if (count > static_cast<double>(opt.max_states))
    throw std::runtime_error("sequence abstraction exceeds the state cap");

  /* outputs by level of the m-ary prefix tree: one flow per node */
  std::vector<double> cur(md.x_s.data(), md.x_s.data() + md.n);
  for (int level = 0; level < md.N; ++level) {
    std::int64_t width = 1;
    for (int i = 0; i < level; ++i) width *= md.m;
    std::vector<double> next(width * md.m * md.n);
    parallel_for(width, [&](std::int64_t b, std::int64_t e) {
      Vec x(md.n);
      for (std::int64_t s = b; s < e; ++s) {
        std::memcpy(x.data(), cur.data() + s * md.n, sizeof(double) * md.n);
        for (int p = 0; p < md.m; ++p) {
          Vec y = nominal_flow(sys, x, p, md.tau, opt.flow);
          std::memcpy(next.data() + (s * md.m + p) * md.n, y.data(),
                      sizeof(double) * md.n);
        }
      }
    });
    cur.swap(next);
  }
  md.outputs.swap(cur);
  return md;
}

}  // namespace

SymbolicModel build_seq(const SwitchedSystem& sys, const SeqParams& params,
                        const BuildOptions& opt) {
  return build_seq_impl(sys, params, opt, false);
}

SymbolicModel build_seq_dwell(const SwitchedSystem& sys, const SeqParams& params,
                              const BuildOptions& opt) {
  if (!params.dwell_steps)
    throw std::invalid_argument("dwell sequence model needs dwell_steps");
  return build_seq_impl(sys, params, opt, true);
}

double eta_bar_exact(const SymbolicModel& model, const SwitchedSystem& sys,
                     const FlowConfig& cfg) {
  if (model.is_grid())
    throw std::invalid_argument("eta_bar_exact applies to sequence models");
  const std::int64_t ns = model.seq_count();
  const std::int64_t mN1 = ns / model.m;
  std::vector<double> chunk_max((ns + (1 << 14) - 1) >> 14, 0.0);
  parallel_for(ns, [&](std::int64_t b, std::int64_t e) {
    Vec x(model.n);
    double worst = 0.0;
    for (std::int64_t s = b; s < e; ++s) {
      std::memcpy(x.data(), model.outputs.data() + s * model.n,
                  sizeof(double) * model.n);
      for (int p = 0; p < model.m; ++p) {
        Vec y = nominal_flow(sys, x, p, model.tau, cfg);
        const std::int64_t sh = (s % mN1) * model.m + p;
        double d = 0.0;
        for (int i = 0; i < model.n; ++i)
          d = std::max(d, std::abs(y[i] - model.outputs[sh * model.n + i]));
        worst = std::max(worst, d);
      }
    }
    chunk_max[b >> 14] = worst;
  });
  double worst = 0.0;
  for (double v : chunk_max) worst = std::max(worst, v);
  return worst;
}

bool is_initial_state(const SymbolicModel& model, std::int64_t state) {
  switch (model.kind) {
    case ModelKind::Grid:
    case ModelKind::Seq:
      return true;
    case ModelKind::GridDwell:
      return model.state_counter(state) == 0;
    case ModelKind::SeqDwell: {
      const int nhat = model.dwell_steps;
      const int i = model.state_counter(state);
      std::int64_t s = state / nhat;
      /* digits newest..oldest; runs measured from the newest block backward */
      std::vector<int> digits(model.N);
      for (int k = 0; k < model.N; ++k) {
        digits[k] = static_cast<int>(s % model.m);
        s /= model.m;
      }
      int run_newest = 1;
      while (run_newest < model.N && digits[run_newest] == digits[0]) ++run_newest;
      if (run_newest == model.N)  /* constant word */
        return i == std::min(model.N, nhat - 1);
      if (i != std::min(run_newest - 1, nhat - 1)) return false;
      /* every earlier block, the oldest included, must be N_hat long */
      int k = run_newest;
      while (k < model.N) {
        int len = 1;
        while (k + len < model.N && digits[k + len] == digits[k]) ++len;
        if (len < nhat) return false;
        k += len;
      }
      return true;
    }
  }
  return false;
}

std::vector<std::int64_t> initial_abstract_states(
    const SymbolicModel& model, const Vec& x0, double epsilon,
    const CertificateSet& certs, const std::vector<double>* deltas) {
  const double q = certs.q;
  const double d0 = certs.alpha_lo(std::pow(epsilon, q));
  const std::int64_t ns = model.num_states();
  std::vector<std::int64_t> out;
  for (std::int64_t s = 0; s < ns; ++s) {
    if (!is_initial_state(model, s)) continue;
    double level = d0;
    if (model.is_dwell() && deltas) {
      const int i = model.state_counter(s);
      if (i < static_cast<int>(deltas->size())) level = (*deltas)[i];
    }
    double c_hi = certs.alpha_hi_coeff;
    if (model.is_dwell()) {
      const int p = model.state_mode(s);
      if (p >= 0 && p < certs.num_modes())
        c_hi = certs.per_mode[p].alpha_hi_coeff;
    }
    const double radius = std::pow(level / c_hi, 1.0 / q);
    if (inf_norm(Vec(model.output(s) - x0)) <= radius + 1e-12) out.push_back(s);
  }
  return out;
}

std::int64_t audit_grid_transitions(const SymbolicModel& model,
                                    const SwitchedSystem& sys,
                                    const FlowConfig& cfg, double tol) {
  if (!model.is_grid())
    throw std::invalid_argument("transition audit applies to grid models");
  const std::int64_t nk = model.geom.num_points;
  std::vector<std::int64_t> bad((nk + (1 << 14) - 1) >> 14, 0);
  parallel_for(nk, [&](std::int64_t b, std::int64_t e) {
    std::int64_t count = 0;
    for (std::int64_t k = b; k < e; ++k) {
      const Vec x = model.geom.point_of(k);
      for (int p = 0; p < model.m; ++p) {
        const std::int64_t kk = model.lattice_succ[k * model.m + p];
        if (kk < 0) continue;
        Vec y = nominal_flow(sys, x, p, model.tau, cfg);
        if (inf_norm(Vec(y - model.geom.point_of(kk))) > model.geom.eta + tol)
          ++count;
      }
    }
    bad[b >> 14] = count;
  });
  std::int64_t total = 0;
  for (auto c : bad) total += c;
  return total;
}

/* ---- serialization: text header, little-endian payload, trailing CRC32 ---- */

namespace {

std::uint32_t crc32_update(std::uint32_t crc, const void* data, std::size_t len) {
  static std::uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    init = true;
  }
  const auto* p = static_cast<const unsigned char*>(data);
  crc = ~crc;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  return ~crc;
}

struct Sink {
  std::string bytes;
  template <class T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    bytes.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <class T>
  void put_vec(const std::vector<T>& v) {
    put(static_cast<std::int64_t>(v.size()));
    bytes.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }
};

struct Source {
  const char* p;
  const char* end;
  template <class T>
  T get() {
    if (p + sizeof(T) > end) throw std::runtime_error("model file truncated");
    T v;
    std::memcpy(&v, p, sizeof v);
    p += sizeof v;
    return v;
  }
  template <class T>
  std::vector<T> get_vec() {
    const auto n = get<std::int64_t>();
    if (p + n * static_cast<std::int64_t>(sizeof(T)) > end)
      throw std::runtime_error("model file truncated");
    std::vector<T> v(n);
    std::memcpy(v.data(), p, n * sizeof(T));
    p += n * sizeof(T);
    return v;
  }
};

std::string serialize_payload(const SymbolicModel& m) {
  Sink s;
  s.put(static_cast<std::uint8_t>(m.kind));
  s.put(m.n);
  s.put(m.m);
  s.put(m.N);
  s.put(m.dwell_steps);
  s.put(m.tau);
  s.put(m.epsilon);
  s.put(m.geom.eta);
  s.put(static_cast<std::int64_t>(m.geom.parts.size()));
  for (const auto& p : m.geom.parts) {
    s.put_vec(p.idx_lo);
    s.put_vec(p.idx_hi);
  }
  std::vector<double> xs(m.x_s.data(), m.x_s.data() + m.x_s.size());
  s.put_vec(xs);
  s.put_vec(m.lattice_succ);
  s.put_vec(m.multi_offsets);
  s.put_vec(m.multi_succ);
  s.put_vec(m.outputs);
  return std::move(s.bytes);
}

}  // namespace

std::uint32_t model_checksum(const SymbolicModel& model) {
  const std::string payload = serialize_payload(model);
  return crc32_update(0, payload.data(), payload.size());
}

void save_model(const std::string& path, const SymbolicModel& model) {
  const std::string payload = serialize_payload(model);
  const std::uint32_t crc = crc32_update(0, payload.data(), payload.size());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "stosym-model v1\n";
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  f.write(reinterpret_cast<const char*>(&crc), sizeof crc);
  if (!f) throw std::runtime_error("failed writing " + path);
}

SymbolicModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string header;
  std::getline(f, header);
  if (header != "stosym-model v1")
    throw std::runtime_error("unsupported model file version: " + header);
  std::string rest((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  if (rest.size() < sizeof(std::uint32_t))
    throw std::runtime_error("model file truncated");
  std::uint32_t crc_stored;
  std::memcpy(&crc_stored, rest.data() + rest.size() - 4, 4);
  const std::uint32_t crc = crc32_update(0, rest.data(), rest.size() - 4);
  if (crc != crc_stored) throw std::runtime_error("model file checksum mismatch");

  Source src{rest.data(), rest.data() + rest.size() - 4};
  SymbolicModel m;
  m.kind = static_cast<ModelKind>(src.get<std::uint8_t>());
  m.n = src.get<int>();
  m.m = src.get<int>();
  m.N = src.get<int>();
  m.dwell_steps = src.get<int>();
  m.tau = src.get<double>();
  m.epsilon = src.get<double>();
  m.geom.eta = src.get<double>();
  m.geom.n = m.n;
  const auto nparts = src.get<std::int64_t>();
  std::int64_t offset = 0;
  for (std::int64_t i = 0; i < nparts; ++i) {
    GridGeometry::Part p;
    p.idx_lo = src.get_vec<std::int64_t>();
    p.idx_hi = src.get_vec<std::int64_t>();
    p.stride.assign(m.n, 1);
    for (int d = m.n - 2; d >= 0; --d)
      p.stride[d] = p.stride[d + 1] * (p.idx_hi[d + 1] - p.idx_lo[d + 1] + 1);
    p.count = 1;
    for (int d = 0; d < m.n; ++d) p.count *= p.idx_hi[d] - p.idx_lo[d] + 1;
    p.offset = offset;
    offset += p.count;
    m.geom.parts.push_back(std::move(p));
  }
  m.geom.num_points = offset;
  auto xs = src.get_vec<double>();
  m.x_s = Eigen::Map<Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  m.lattice_succ = src.get_vec<std::int64_t>();
  m.multi_offsets = src.get_vec<std::int64_t>();
  m.multi_succ = src.get_vec<std::int64_t>();
  m.outputs = src.get_vec<double>();
  return m;
}

}  // namespace stosym
