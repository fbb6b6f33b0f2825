#ifndef STOSYM_IO_HPP_
#define STOSYM_IO_HPP_

#include <optional>
#include <string>
#include <vector>

#include "stosym/certificates.hpp"
#include "stosym/model.hpp"
#include "stosym/synthesis.hpp"

namespace stosym {

/* System description file (JSON): n, q_hat, optional dwell_time, domain as a
 * list of {lo, hi} boxes, and per-mode A, b plus either full "sigmas" (q_hat
 * n-by-n matrices, row-major) or the "sigma_diag" shorthand for per-coordinate
 * multiplicative noise. Unknown keys are rejected. */
SwitchedSystem load_system(const std::string& path);
void save_system(const std::string& path, const SwitchedSystem& sys);

/* Certificate file (JSON): q, optional mu, and per-mode P with optional
 * kappa_hat/kappa, envelope coefficients, and gamma_hat slope. Missing rates
 * are filled from the LMI, missing coefficients from P; the returned set
 * records which values were user-given. */
CertificateSet load_certificates(const std::string& path,
                                 const SwitchedSystem& sys);
void save_certificates(const std::string& path, const CertificateSet& certs);

struct ValidationSettings {
  Vec x0;
  BoxUnion W;
  double T = 0.0;
  std::int64_t runs = 1000;
  std::int64_t runs_full = 10000;
  std::uint64_t seed = 1;
  int sde_substeps = 100;
};

struct ProjectConfig {
  std::string system_path;
  std::string certificate_path;
  std::string approach = "auto";  // grid | sequence | auto
  double tau = 0.0;
  double epsilon = 0.0;
  std::optional<double> eta;
  std::optional<int> N;
  std::optional<Vec> x_s;
  std::optional<int> dwell_steps;
  SynthSpec spec;
  ValidationSettings validation;
  std::string output_dir = "out";
};

ProjectConfig load_project(const std::string& path);

/* CSV with 17 significant digits per value */
void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

std::uint32_t crc32_file(const std::string& path);

struct ManifestEntry {
  std::string name;
  std::string path;
  std::uint32_t crc32 = 0;
  std::uint64_t bytes = 0;
};

/* run manifest: artifact list with checksums, seeds and stage timings */
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& artifacts,
                    const std::vector<std::pair<std::string, double>>& timings,
                    std::uint64_t seed, int threads);

/* returns the names of manifest artifacts whose checksum no longer matches */
std::vector<std::string> verify_manifest(const std::string& path);

}  // namespace stosym

#endif
