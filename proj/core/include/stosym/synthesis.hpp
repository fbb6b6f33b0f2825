#ifndef STOSYM_SYNTHESIS_HPP_
#define STOSYM_SYNTHESIS_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "stosym/abstraction.hpp"

namespace stosym {

enum class SpecKind : std::uint8_t { Safety = 0, Reach = 1, ReachStay = 2 };

struct SynthSpec {
  SpecKind kind = SpecKind::Safety;
  BoxUnion safe;    // Safety
  BoxUnion target;  // Reach / ReachStay
  BoxUnion avoid;   // subtracted from safe / target
  bool epsilon_contract = true;
};

/* winning region plus a deterministic state -> input strategy
 * (0xFF marks states without a move, i.e. non-winning states) */
struct Controller {
  std::int64_t num_states = 0;
  int num_inputs = 0;
  Bitset winning;
  Bitset core;  // safety core of a reach-stay objective, empty otherwise
  std::vector<std::uint8_t> strategy;
  SynthSpec spec;
  std::uint32_t model_checksum = 0;
};

/* [l, u] -> [l+eps, u-eps] per box, dropping boxes that become empty */
BoxUnion contract_set(const BoxUnion& s, double eps);
/* [l, u] -> [l-eps, u+eps] per box */
BoxUnion inflate_set(const BoxUnion& s, double eps);

/* states whose output lies in the closed box union */
Bitset label_states(const SymbolicModel& model, const BoxUnion& s);

/* labeling of a spec region with the avoid set removed; when `contract` is
 * set the region shrinks and the avoid set grows by the model's epsilon */
Bitset label_spec_region(const SymbolicModel& model, const BoxUnion& region,
                         const BoxUnion& avoid, bool contract);

Controller solve_safety(const SymbolicModel& model, const Bitset& safe);
Controller solve_reach(const SymbolicModel& model, const Bitset& target);
Controller solve_reach_stay(const SymbolicModel& model, const Bitset& target);

/* number of winning states whose strategy successor leaves the winning set
 * (0 for a sound controller); `sample` > 0 checks a deterministic sample */
std::int64_t closure_violations(const SymbolicModel& model, const Controller& c,
                                std::int64_t sample = 0,
                                std::uint64_t seed = 1);

/* Controller refined to a runtime switching signal.
 *
 * Grid kinds look the measured state up at every sampling instant; sequence
 * kinds run open loop as a shift register after initialization. step() returns
 * the mode to apply over the next sampling period. */
class RuntimeStrategy {
 public:
  RuntimeStrategy(const SymbolicModel& model, const Controller& ctrl);

  bool init(const Vec& x0, const CertificateSet& certs,
            const std::vector<double>* deltas = nullptr);
  void init_at(std::int64_t state);

  int step(const Vec& measured);

  std::int64_t abstract_state() const { return state_; }
  int faults() const { return faults_; }
  void reset_faults() { faults_ = 0; }

 private:
  const SymbolicModel& model_;
  const Controller& ctrl_;
  std::int64_t state_ = -1;
  int pending_mode_ = -1;  // grid-dwell: mode decided at the previous instant
  int faults_ = 0;
};

void save_controller(const std::string& path, const Controller& c);
Controller load_controller(const std::string& path);

}  // namespace stosym

#endif
