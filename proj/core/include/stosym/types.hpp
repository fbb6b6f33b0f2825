#ifndef STOSYM_TYPES_HPP_
#define STOSYM_TYPES_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stosym {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double inf_norm(const Vec& x) { return x.lpNorm<Eigen::Infinity>(); }

/* thrown when a solver's feasibility condition cannot be met;
 * `violated` names the failing inequality */
struct infeasible_error : std::runtime_error {
  std::string violated;
  explicit infeasible_error(const std::string& what, std::string cond = {})
      : std::runtime_error(what), violated(std::move(cond)) {}
};

struct Diagnostic {
  std::string message;
};

/* axis-aligned closed box [lo, hi] */
struct Box {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& x, double tol = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }

  /* min over dimensions of the side length */
  double span() const {
    double s = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim(); ++i) s = std::min(s, hi[i] - lo[i]);
    return s;
  }

  /* infinity-norm distance from x to the box (0 inside) */
  double dist_inf(const Vec& x) const {
    double d = 0.0;
    for (int i = 0; i < dim(); ++i) {
      double di = std::max({lo[i] - x[i], x[i] - hi[i], 0.0});
      d = std::max(d, di);
    }
    return d;
  }
};

/* finite union of closed boxes */
struct BoxUnion {
  std::vector<Box> boxes;

  bool empty() const { return boxes.empty(); }
  int dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }

  bool contains(const Vec& x, double tol = 0.0) const {
    for (const auto& b : boxes)
      if (b.contains(x, tol)) return true;
    return false;
  }

  double span() const {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& b : boxes) s = std::min(s, b.span());
    return s;
  }

  /* point-to-set distance in the infinity norm */
  double dist_inf(const Vec& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& b : boxes) d = std::min(d, b.dist_inf(x));
    return d;
  }

  /* sup over the union of ||x||_inf (attained at a corner) */
  double sup_inf_norm() const {
    double s = 0.0;
    for (const auto& b : boxes)
      for (int i = 0; i < b.dim(); ++i)
        s = std::max({s, std::abs(b.lo[i]), std::abs(b.hi[i])});
    return s;
  }

  static BoxUnion single(Vec lo, Vec hi) {
    BoxUnion u;
    u.boxes.push_back(Box{std::move(lo), std::move(hi)});
    return u;
  }
};

/* fixed-size bit set over state indices */
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::int64_t n, bool value = false)
      : n_(n), w_((n + 63) / 64, value ? ~std::uint64_t{0} : 0) {
    trim();
  }

  std::int64_t size() const { return n_; }

  bool get(std::int64_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::int64_t i) { w_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::int64_t i) { w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  void assign(std::int64_t i, bool v) { v ? set(i) : reset(i); }

  std::int64_t count() const {
    std::int64_t c = 0;
    for (auto w : w_) c += __builtin_popcountll(w);
    return c;
  }
  bool any() const {
    for (auto w : w_)
      if (w) return true;
    return false;
  }

  bool operator==(const Bitset& o) const { return n_ == o.n_ && w_ == o.w_; }

  std::vector<std::uint64_t>& words() { return w_; }
  const std::vector<std::uint64_t>& words() const { return w_; }

 private:
  void trim() {
    if (n_ % 64 && !w_.empty()) w_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
  }
  std::int64_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace stosym

#endif
