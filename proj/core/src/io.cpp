#include "stosym/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace stosym {

using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  json j;
  f >> j;
  return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) known = true;
    if (!known)
      throw std::runtime_error("unknown key '" + it.key() + "' in " + where);
  }
}

Mat to_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw std::runtime_error(where + ": expected a matrix");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw std::runtime_error(where + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Vec to_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::runtime_error(where + ": expected a vector");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json from_matrix(const Mat& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

json from_vector(const Vec& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

BoxUnion to_boxes(const json& j, const std::string& where) {
  BoxUnion u;
  for (const auto& b : j) {
    reject_unknown(b, {"lo", "hi"}, where);
    u.boxes.push_back(Box{to_vector(b.at("lo"), where), to_vector(b.at("hi"), where)});
  }
  return u;
}

json from_boxes(const BoxUnion& u) {
  json j = json::array();
  for (const auto& b : u.boxes)
    j.push_back({{"lo", from_vector(b.lo)}, {"hi", from_vector(b.hi)}});
  return j;
}

std::string resolve(const std::string& base_file, const std::string& rel) {
  namespace fs = std::filesystem;
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(base_file).parent_path() / p).string();
}

}  // namespace

SwitchedSystem load_system(const std::string& path) {
  const json j = parse_file(path);
  reject_unknown(j, {"n", "q_hat", "dwell_time", "domain", "modes"}, path);
  SwitchedSystem sys;
  sys.n = j.at("n").get<int>();
  sys.q_hat = j.at("q_hat").get<int>();
  if (j.contains("dwell_time") && !j.at("dwell_time").is_null())
    sys.dwell_time = j.at("dwell_time").get<double>();
  sys.domain = to_boxes(j.at("domain"), path + ":domain");
  for (const auto& m : j.at("modes")) {
    reject_unknown(m, {"A", "b", "sigmas", "sigma_diag", "lipschitz_diffusion"},
                   path + ":modes");
    ModeDynamics md;
    md.affine = true;
    md.A = to_matrix(m.at("A"), path + ":A");
    md.b = to_vector(m.at("b"), path + ":b");
    md.linear_diffusion = true;
    if (m.contains("sigma_diag")) {
      const Vec d = to_vector(m.at("sigma_diag"), path + ":sigma_diag");
      for (int i = 0; i < sys.n; ++i) {
        Mat s = Mat::Zero(sys.n, sys.n);
        s(i, i) = d[i];
        md.sigmas.push_back(std::move(s));
      }
    } else if (m.contains("sigmas")) {
      for (const auto& s : m.at("sigmas"))
        md.sigmas.push_back(to_matrix(s, path + ":sigmas"));
    } else {
      throw std::runtime_error(path + ": mode needs sigmas or sigma_diag");
    }
    md.lipschitz_diffusion = m.contains("lipschitz_diffusion")
                                 ? m.at("lipschitz_diffusion").get<double>()
                                 : lipschitz_of_linear_diffusion(md.sigmas);
    sys.modes.push_back(std::move(md));
  }
  return sys;
}

void save_system(const std::string& path, const SwitchedSystem& sys) {
  json j;
  j["n"] = sys.n;
  j["q_hat"] = sys.q_hat;
  if (sys.dwell_time) j["dwell_time"] = *sys.dwell_time;
  j["domain"] = from_boxes(sys.domain);
  json modes = json::array();
  for (const auto& m : sys.modes) {
    json jm;
    jm["A"] = from_matrix(m.A);
    jm["b"] = from_vector(m.b);
    json sig = json::array();
    for (const auto& s : m.sigmas) sig.push_back(from_matrix(s));
    jm["sigmas"] = std::move(sig);
    jm["lipschitz_diffusion"] = m.lipschitz_diffusion;
    modes.push_back(std::move(jm));
  }
  j["modes"] = std::move(modes);
  std::ofstream f(path);
  f << j.dump(1) << "\n";
}

CertificateSet load_certificates(const std::string& path,
                                 const SwitchedSystem& sys) {
  const json j = parse_file(path);
  reject_unknown(j, {"q", "mu", "certificates", "_provenance"}, path);
  CertificateSet cs;
  cs.q = j.at("q").get<double>();
  if (j.contains("mu") && !j.at("mu").is_null()) {
    cs.mu = j.at("mu").get<double>();
    cs.mu_user = true;
    if (cs.mu < 1.0) throw std::runtime_error(path + ": mu must be >= 1");
  }
  const auto& list = j.at("certificates");
  if (list.size() != static_cast<std::size_t>(sys.num_modes()))
    throw std::runtime_error(path + ": one certificate per mode expected");
  for (std::size_t p = 0; p < list.size(); ++p) {
    const auto& c = list[p];
    reject_unknown(c,
                   {"P", "kappa_hat", "kappa", "alpha_lo_coeff", "alpha_hi_coeff",
                    "gamma_hat_slope"},
                   path + ":certificates");
    QuadraticCertificate qc;
    qc.q = cs.q;
    qc.P = to_matrix(c.at("P"), path + ":P");
    if (c.contains("kappa_hat") && !c.at("kappa_hat").is_null()) {
      qc.kappa_hat = c.at("kappa_hat").get<double>();
    } else {
      std::string diag;
      qc.kappa_hat = max_kappa_hat(sys.modes[p].A, sys.modes[p].sigmas, qc.P, &diag);
      if (qc.kappa_hat <= 0.0)
        throw std::runtime_error(path + ": mode " + std::to_string(p + 1) +
                                 ": " + diag);
    }
    if (c.contains("kappa") && !c.at("kappa").is_null()) {
      qc.kappa = c.at("kappa").get<double>();
      qc.kappa_user = true;
    }
    const bool has_lo = c.contains("alpha_lo_coeff") && !c.at("alpha_lo_coeff").is_null();
    const bool has_hi = c.contains("alpha_hi_coeff") && !c.at("alpha_hi_coeff").is_null();
    if (has_lo != has_hi)
      throw std::runtime_error(path + ": envelope coefficients come in pairs");
    if (has_lo) {
      qc.alpha_lo_coeff = c.at("alpha_lo_coeff").get<double>();
      qc.alpha_hi_coeff = c.at("alpha_hi_coeff").get<double>();
      qc.alpha_user = true;
      if (qc.alpha_lo_coeff <= 0.0 || qc.alpha_hi_coeff < qc.alpha_lo_coeff)
        throw std::runtime_error(path + ": need 0 < alpha_lo <= alpha_hi");
    }
    if (c.contains("gamma_hat_slope") && !c.at("gamma_hat_slope").is_null()) {
      qc.gamma_hat_slope = c.at("gamma_hat_slope").get<double>();
      qc.gamma_user = true;
    }
    qc.fill_defaults(sys.n);
    /* verify the stored or computed rate against the LMI for affine modes */
    if (sys.modes[p].affine &&
        !verify_lmi(sys.modes[p].A, sys.modes[p].sigmas, qc.P, qc.kappa_hat))
      throw std::runtime_error(path + ": mode " + std::to_string(p + 1) +
                               ": LMI check fails at the stored kappa_hat");
    cs.per_mode.push_back(std::move(qc));
  }
  cs.aggregate();
  return cs;
}

void save_certificates(const std::string& path, const CertificateSet& certs) {
  json j;
  j["q"] = certs.q;
  j["mu"] = certs.mu;
  json list = json::array();
  json prov = json::array();
  for (const auto& c : certs.per_mode) {
    json jc;
    jc["P"] = from_matrix(c.P);
    jc["kappa_hat"] = c.kappa_hat;
    jc["kappa"] = c.kappa;
    jc["alpha_lo_coeff"] = c.alpha_lo_coeff;
    jc["alpha_hi_coeff"] = c.alpha_hi_coeff;
    jc["gamma_hat_slope"] = c.gamma_hat_slope;
    list.push_back(std::move(jc));
    prov.push_back({{"kappa", c.kappa_user ? "user" : "computed"},
                    {"envelopes", c.alpha_user ? "user" : "computed"},
                    {"gamma_hat", c.gamma_user ? "user" : "computed"}});
  }
  j["certificates"] = std::move(list);
  j["_provenance"] = {{"mu", certs.mu_user ? "user" : "computed"},
                      {"per_mode", std::move(prov)}};
  std::ofstream f(path);
  f << j.dump(1) << "\n";
}

ProjectConfig load_project(const std::string& path) {
  const json j = parse_file(path);
  reject_unknown(j,
                 {"system", "certificates", "approach", "parameters", "spec",
                  "validation", "output_dir"},
                 path);
  ProjectConfig cfg;
  cfg.system_path = resolve(path, j.at("system").get<std::string>());
  cfg.certificate_path = resolve(path, j.at("certificates").get<std::string>());
  if (j.contains("approach")) cfg.approach = j.at("approach").get<std::string>();
  if (cfg.approach != "grid" && cfg.approach != "sequence" && cfg.approach != "auto")
    throw std::runtime_error(path + ": approach must be grid, sequence or auto");

  const auto& p = j.at("parameters");
  reject_unknown(p, {"tau", "epsilon", "eta", "N", "x_s", "dwell_steps"},
                 path + ":parameters");
  cfg.tau = p.at("tau").get<double>();
  cfg.epsilon = p.at("epsilon").get<double>();
  if (p.contains("eta") && !p.at("eta").is_null())
    cfg.eta = p.at("eta").get<double>();
  if (p.contains("N") && !p.at("N").is_null()) cfg.N = p.at("N").get<int>();
  if (p.contains("x_s") && !p.at("x_s").is_null())
    cfg.x_s = to_vector(p.at("x_s"), path + ":x_s");
  if (p.contains("dwell_steps") && !p.at("dwell_steps").is_null())
    cfg.dwell_steps = p.at("dwell_steps").get<int>();

  if (j.contains("spec")) {
    const auto& s = j.at("spec");
    reject_unknown(s, {"kind", "safe", "target", "avoid", "epsilon_contract"},
                   path + ":spec");
    const std::string kind = s.at("kind").get<std::string>();
    if (kind == "safety")
      cfg.spec.kind = SpecKind::Safety;
    else if (kind == "reach")
      cfg.spec.kind = SpecKind::Reach;
    else if (kind == "reach_stay")
      cfg.spec.kind = SpecKind::ReachStay;
    else
      throw std::runtime_error(path + ": unknown spec kind " + kind);
    if (s.contains("safe")) cfg.spec.safe = to_boxes(s.at("safe"), path);
    if (s.contains("target")) cfg.spec.target = to_boxes(s.at("target"), path);
    if (s.contains("avoid")) cfg.spec.avoid = to_boxes(s.at("avoid"), path);
    if (s.contains("epsilon_contract"))
      cfg.spec.epsilon_contract = s.at("epsilon_contract").get<bool>();
    if (cfg.spec.kind == SpecKind::Safety && cfg.spec.safe.empty())
      throw std::runtime_error(path + ": safety spec needs a safe set");
    if (cfg.spec.kind != SpecKind::Safety && cfg.spec.target.empty())
      throw std::runtime_error(path + ": reach spec needs a target set");
  }

  if (j.contains("validation")) {
    const auto& v = j.at("validation");
    reject_unknown(v, {"x0", "W", "T", "runs", "runs_full", "seed", "sde_substeps"},
                   path + ":validation");
    cfg.validation.x0 = to_vector(v.at("x0"), path + ":x0");
    cfg.validation.W = to_boxes(v.at("W"), path + ":W");
    cfg.validation.T = v.at("T").get<double>();
    if (v.contains("runs")) cfg.validation.runs = v.at("runs").get<std::int64_t>();
    if (v.contains("runs_full"))
      cfg.validation.runs_full = v.at("runs_full").get<std::int64_t>();
    if (v.contains("seed")) cfg.validation.seed = v.at("seed").get<std::uint64_t>();
    if (v.contains("sde_substeps"))
      cfg.validation.sde_substeps = v.at("sde_substeps").get<int>();
  }
  if (j.contains("output_dir"))
    cfg.output_dir = j.at("output_dir").get<std::string>();
  return cfg;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    std::fprintf(f, "%s%s", header[i].c_str(),
                 i + 1 < header.size() ? "," : "\n");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < columns.size(); ++c)
      std::fprintf(f, "%.17g%s", columns[c][r],
                   c + 1 < columns.size() ? "," : "\n");
  std::fclose(f);
}

std::uint32_t crc32_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
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
  std::uint32_t crc = ~std::uint32_t{0};
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    const auto got = f.gcount();
    for (std::streamsize i = 0; i < got; ++i)
      crc = table[(crc ^ static_cast<unsigned char>(buf[i])) & 0xFF] ^ (crc >> 8);
  }
  return ~crc;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& artifacts,
                    const std::vector<std::pair<std::string, double>>& timings,
                    std::uint64_t seed, int threads) {
  json j;
  j["format"] = "stosym-manifest v1";
  j["seed"] = seed;
  j["threads"] = threads;
  json arts = json::array();
  for (const auto& a : artifacts)
    arts.push_back({{"name", a.name},
                    {"path", a.path},
                    {"crc32", a.crc32},
                    {"bytes", a.bytes}});
  j["artifacts"] = std::move(arts);
  json times = json::object();
  for (const auto& [k, v] : timings) times[k] = v;
  j["timings_seconds"] = std::move(times);
  std::ofstream f(path);
  f << j.dump(1) << "\n";
}

std::vector<std::string> verify_manifest(const std::string& path) {
  const json j = parse_file(path);
  std::vector<std::string> bad;
  for (const auto& a : j.at("artifacts")) {
    const std::string p = resolve(path, a.at("path").get<std::string>());
    std::uint32_t crc = 0;
    try {
      crc = crc32_file(p);
    } catch (const std::exception&) {
      bad.push_back(a.at("name").get<std::string>() + " (missing)");
      continue;
    }
    if (crc != a.at("crc32").get<std::uint32_t>())
      bad.push_back(a.at("name").get<std::string>());
  }
  return bad;
}

}  // namespace stosym
