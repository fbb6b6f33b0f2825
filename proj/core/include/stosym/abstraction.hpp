#ifndef STOSYM_ABSTRACTION_HPP_
#define STOSYM_ABSTRACTION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "stosym/certificates.hpp"
#include "stosym/flow.hpp"
#include "stosym/quantizer.hpp"

namespace stosym {

enum class ModelKind : std::uint8_t { Grid = 0, GridDwell = 1, Seq = 2, SeqDwell = 3 };

/* Lattice [D]_eta over a finite union of boxes, states numbered row-major
 * per box. Nearest-point rounding resolves ties toward the smaller index. */
struct GridGeometry {
  double eta = 0.0;
  int n = 0;
  struct Part {
    std::vector<std::int64_t> idx_lo, idx_hi;  // inclusive lattice index range
    std::vector<std::int64_t> stride;          // row-major strides
    std::int64_t offset = 0;                   // first state id of this part
    std::int64_t count = 0;
  };
  std::vector<Part> parts;
  std::int64_t num_points = 0;

  Vec point_of(std::int64_t k) const;
  /* nearest in-lattice point; distance reported via *dist. -1 when the
   * geometry is empty. */
  std::int64_t nearest_point(const Vec& x, double* dist = nullptr) const;
};

struct SymbolicModel {
  ModelKind kind = ModelKind::Grid;
  int n = 0;
  int m = 0;               // number of modes = inputs
  double tau = 0.0;
  double epsilon = 0.0;    // certified precision
  int dwell_steps = 1;     // N_hat; 1 for the non-dwell kinds

  /* grid kinds */
  GridGeometry geom;
  std::vector<std::int64_t> lattice_succ;  // num_points*m, -1 = invalid sink
  /* optional nondeterministic transitions (all lattice points within eta):
   * CSR over (point, mode) */
  std::vector<std::int64_t> multi_offsets;
  std::vector<std::int64_t> multi_succ;

  /* sequence kinds */
  int N = 0;
  Vec x_s;
  std::vector<double> outputs;  // m^N rows of length n

  bool is_grid() const { return kind == ModelKind::Grid || kind == ModelKind::GridDwell; }
  bool is_dwell() const { return kind == ModelKind::GridDwell || kind == ModelKind::SeqDwell; }
  int num_inputs() const { return m; }
  std::int64_t seq_count() const;   // m^N
  std::int64_t base_count() const;  // lattice points or m^N
  std::int64_t num_states() const;  // including mode/counter components

  /* state encodings:
   *   Grid      k
   *   GridDwell (k*m + p)*N_hat + i     p = active mode, i = dwell counter
   *   Seq       s                       s = mode word, oldest digit most significant
   *   SeqDwell  s*N_hat + i */
  Vec output(std::int64_t state) const;
  std::int64_t grid_point(std::int64_t state) const;
  int state_mode(std::int64_t state) const;     // dwell kinds: active / last mode
  int state_counter(std::int64_t state) const;  // dwell kinds

  /* Deterministic successor under an input, -1 when blocked or invalid.
   * Grid: input = mode applied during the step. GridDwell: the step flows
   * under the state's active mode and the input chooses the next mode
   * (restricted unless the counter has reached N_hat-1). Seq kinds: input =
   * the appended (applied) mode, dwell-restricted against the last digit. */
  std::int64_t successor(std::int64_t state, int input) const;

  bool has_multi() const { return !multi_offsets.empty(); }
  /* invokes fn for every successor of (state, input) in the nondeterministic
   * transition relation (falls back to the deterministic successor) */
  template <class Fn>
  void for_each_successor(std::int64_t state, int input, Fn&& fn) const;
};

struct BuildOptions {
  std::int64_t max_states = std::int64_t{1} << 28;
  bool all_successors = false;  // grid kinds: keep every lattice point within eta
  FlowConfig flow;
};

SymbolicModel build_grid(const SwitchedSystem& sys, const CertificateSet& certs,
                         const GridParams& params, const BuildOptions& opt = {});
SymbolicModel build_grid_dwell(const SwitchedSystem& sys,
                               const CertificateSet& certs,
                               const GridParams& params,
                               const BuildOptions& opt = {});
SymbolicModel build_seq(const SwitchedSystem& sys, const SeqParams& params,
                        const BuildOptions& opt = {});
SymbolicModel build_seq_dwell(const SwitchedSystem& sys, const SeqParams& params,
                              const BuildOptions& opt = {});

/* exact one-step defect of a sequence model; always <= eta_bar_analytic */
double eta_bar_exact(const SymbolicModel& model, const SwitchedSystem& sys,
                     const FlowConfig& cfg);

/* true iff `state` is an initial state of the model (dwell sequence models
 * restrict to dwell-respecting mode words with the matching counter) */
bool is_initial_state(const SymbolicModel& model, std::int64_t state);

/* Initial abstract states whose output lies within the bisimulation radius
 * of x0. For dwell models the per-counter radii come from `deltas` when
 * given (delta_sequence output), else from delta_0. */
std::vector<std::int64_t> initial_abstract_states(
    const SymbolicModel& model, const Vec& x0, double epsilon,
    const CertificateSet& certs, const std::vector<double>* deltas = nullptr);

/* audits the within-eta transition invariant; returns the number of violations */
std::int64_t audit_grid_transitions(const SymbolicModel& model,
                                    const SwitchedSystem& sys,
                                    const FlowConfig& cfg, double tol = 1e-9);

void save_model(const std::string& path, const SymbolicModel& model);
SymbolicModel load_model(const std::string& path);

/* CRC32 checksum of the serialized payload (also embedded in the file) */
std::uint32_t model_checksum(const SymbolicModel& model);

template <class Fn>
void SymbolicModel::for_each_successor(std::int64_t state, int input,
                                       Fn&& fn) const {
  if (!has_multi() || !is_grid()) {
    const std::int64_t s = successor(state, input);
    if (s >= 0) fn(s);
    return;
  }
  const std::int64_t k = grid_point(state);
  int flow_mode = input, next_mode = input;
  int i = 0;
  if (kind == ModelKind::GridDwell) {
    flow_mode = state_mode(state);
    i = state_counter(state);
    if (i < dwell_steps - 1 && input != flow_mode) return;
    next_mode = input;
  }
  const std::int64_t a = multi_offsets[k * m + flow_mode];
  const std::int64_t b = multi_offsets[k * m + flow_mode + 1];
  for (std::int64_t j = a; j < b; ++j) {
    const std::int64_t kk = multi_succ[j];
    if (kind == ModelKind::Grid) {
      fn(kk);
    } else {
      const int inext = i < dwell_steps - 1
                            ? i + 1
                            : (next_mode == flow_mode ? dwell_steps - 1 : 0);
      fn((kk * m + next_mode) * dwell_steps + inext);
    }
  }
}

}  // namespace stosym

#endif
