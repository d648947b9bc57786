#include "lsrecon/recon.hpp"

#include "lsrecon/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace lsrecon {

namespace {

constexpr double kRankThreshold = 1e-10;
// Offsets are stored as integers in units of dx_j / kOffsetScale.
constexpr int kOffsetScale = 64;

template <int Dim>
void basis_values(const Vec<Dim>& s, int degree, double* out) {
  out[0] = 1.0;
  for (int d = 0; d < Dim; ++d) out[1 + d] = s[d];
  if (degree < 2) return;
  if constexpr (Dim == 2) {
    out[3] = s[0] * s[0];
    out[4] = s[0] * s[1];
    out[5] = s[1] * s[1];
  } else {
    out[4] = s[0] * s[0];
    out[5] = s[0] * s[1];
    out[6] = s[1] * s[1];
    out[7] = s[2] * s[2];
    out[8] = s[0] * s[2];
    out[9] = s[1] * s[2];
  }
}

struct Solver {
  Eigen::MatrixXd pinv;  // (unknowns) x (rows)
  bool deficient = false;
};

Solver make_solver(const Eigen::MatrixXd& a) {
  Solver s;
  if (a.rows() == 0) {
    s.pinv = Eigen::MatrixXd::Zero(a.cols(), 0);
    s.deficient = true;
    return s;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(kRankThreshold);
  s.pinv = cod.pseudoInverse();
  s.deficient = cod.rank() < a.cols();
  return s;
}

// Everything that depends only on the geometry of a stencil.
template <int Dim>
struct Pattern {
  Solver linear;
  Solver quadratic;
  std::array<std::vector<int>, Basis<Dim>::kLaterals> members;
  std::array<Solver, Basis<Dim>::kLaterals> lateral;
  std::array<bool, Basis<Dim>::kLaterals> empty{};
};

// A neighbour belongs to an octant's substencil when its cell reaches into that
// octant of the owner-centred frame.  On uniform stencils this is the sign
// pattern of the centre offset with zero components accepted on both sides.
template <int Dim>
std::unique_ptr<Pattern<Dim>> build_pattern(const std::vector<std::array<int, Dim>>& offsets,
                                            const std::vector<int>& half_widths) {
  auto p = std::make_unique<Pattern<Dim>>();
  const int n = static_cast<int>(offsets.size());
  constexpr int kQ = Basis<Dim>::kQuadratic;
  Eigen::MatrixXd a1(n, Dim), a2(n, kQ - 1);
  double row[kQ];
  for (int i = 0; i < n; ++i) {
    Vec<Dim> s;
    for (int d = 0; d < Dim; ++d) s[d] = static_cast<double>(offsets[i][d]) / kOffsetScale;
    basis_values<Dim>(s, 2, row);
    for (int k = 1; k < kQ; ++k) a2(i, k - 1) = row[k];
    for (int d = 0; d < Dim; ++d) a1(i, d) = row[1 + d];
  }
  p->linear = make_solver(a1);
  p->quadratic = make_solver(a2);
  for (int o = 0; o < Basis<Dim>::kLaterals; ++o) {
    for (int i = 0; i < n; ++i) {
      bool in = true;
      for (int d = 0; d < Dim; ++d) {
        const bool positive = (o >> d) & 1;
        const int lo = offsets[i][d] - half_widths[i];
        const int hi = offsets[i][d] + half_widths[i];
        if (positive ? hi <= 0 : lo >= 0) in = false;
      }
      if (in) p->members[o].push_back(i);
    }
    p->empty[o] = p->members[o].empty();
    if (p->empty[o]) {
      p->lateral[o] = p->linear;
      continue;
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(p->members[o].size()), Dim);
    for (std::size_t r = 0; r < p->members[o].size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = a1.row(p->members[o][r]);
    p->lateral[o] = make_solver(sub);
  }
  return p;
}

template <int Dim>
class PatternCache {
 public:
  static PatternCache& instance() {
    static PatternCache cache;
    return cache;
  }

  const Pattern<Dim>& get(const std::string& key, const std::vector<std::array<int, Dim>>& offsets,
                          const std::vector<int>& half_widths) {
    {
      std::shared_lock lock(mutex_);
      auto it = map_.find(key);
      if (it != map_.end()) return *it->second;
    }
    auto fresh = build_pattern<Dim>(offsets, half_widths);
    std::unique_lock lock(mutex_);
    auto [it, inserted] = map_.try_emplace(key, std::move(fresh));
    return *it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::unique_ptr<Pattern<Dim>>> map_;
};

// Stencil of one leaf in canonical (offset-sorted) order.
template <int Dim>
struct Stencil {
  const Pattern<Dim>* pattern = nullptr;
  std::vector<LeafIndex> ids;  // sorted like the pattern rows
};

template <int Dim>
const Stencil<Dim>& gather(const Forest<Dim>& forest, LeafIndex j) {
  thread_local Stencil<Dim> st;
  thread_local std::vector<std::pair<std::array<int, Dim>, LeafIndex>> rows;
  thread_local std::vector<std::array<int, Dim>> offsets;
  thread_local std::vector<int> half_widths;
  thread_local std::string key;

  const auto nb = forest.neighbors(j);
  const Leaf<Dim>& lj = forest.leaf(j);
  const std::int64_t sj = lj.size();
  rows.clear();
  for (auto i : nb) {
    const Leaf<Dim>& li = forest.leaf(i);
    std::array<int, Dim> off{};
    for (int d = 0; d < Dim; ++d) {
      // Centre difference in units of dx_j / kOffsetScale, computed in integers.
      const std::int64_t num = 2 * (static_cast<std::int64_t>(li.anchor[d]) - lj.anchor[d]) +
                               static_cast<std::int64_t>(li.size()) - sj;
      const std::int64_t scaled = num * kOffsetScale;
      if (scaled % (2 * sj) != 0) throw ContractViolation("stencil level gap too large");
      off[d] = static_cast<int>(scaled / (2 * sj));
    }
    rows.emplace_back(off, i);
  }
  std::sort(rows.begin(), rows.end());
  offsets.clear();
  half_widths.clear();
  st.ids.clear();
  key.clear();
  for (const auto& [off, id] : rows) {
    offsets.push_back(off);
    // Half edge of the neighbour in the same units; the offsets determine it
    // only up to level, so it is part of the key below.
    const int hw = static_cast<int>(kOffsetScale * static_cast<std::int64_t>(forest.leaf(id).size()) / (2 * sj));
    half_widths.push_back(hw);
    key.push_back(static_cast<char>(hw));
    st.ids.push_back(id);
    for (int d = 0; d < Dim; ++d) {
      const auto v = static_cast<std::int16_t>(off[d]);
      key.push_back(static_cast<char>(v & 0xff));
      key.push_back(static_cast<char>((v >> 8) & 0xff));
    }
  }
  st.pattern = &PatternCache<Dim>::instance().get(key, offsets, half_widths);
  return st;
}

template <int Dim>
LocalPolynomial<Dim> blank(const Forest<Dim>& forest, std::span<const double> field, LeafIndex j,
                           int degree) {
  LocalPolynomial<Dim> p;
  p.owner = j;
  p.degree = degree;
  p.center = forest.center(j);
  p.dx = forest.edge(j);
  p.c[0] = field[j];
  return p;
}

template <int Dim>
void apply(const Solver& s, std::span<const double> field, LeafIndex j,
           const std::vector<LeafIndex>& ids, const std::vector<int>* members, int first_coeff,
           Coeffs<Dim>& c) {
  const double fj = field[j];
  const Eigen::Index rows = s.pinv.cols();
  for (Eigen::Index k = 0; k < s.pinv.rows(); ++k) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const LeafIndex id = members ? ids[(*members)[r]] : ids[r];
      acc += s.pinv(k, r) * (field[id] - fj);
    }
    c[first_coeff + k] = acc;
  }
}

template <int Dim>
LocalPolynomial<Dim> lateral_from(const Forest<Dim>& forest, std::span<const double> field,
                                  LeafIndex j, const Stencil<Dim>& st, int o) {
  auto p = blank(forest, field, j, 1);
  const Pattern<Dim>& pat = *st.pattern;
  if (pat.empty[o]) {
    apply<Dim>(pat.linear, field, j, st.ids, nullptr, 1, p.c);
    p.degenerate = pat.linear.deficient;
    p.lateral_fallback = true;
  } else {
    apply<Dim>(pat.lateral[o], field, j, st.ids, &pat.members[o], 1, p.c);
    p.degenerate = pat.lateral[o].deficient;
  }
  return p;
}

}  // namespace

template <int Dim>
double LocalPolynomial<Dim>::evaluate(const Vec<Dim>& x) const {
  const Vec<Dim> s = (x - center) / dx;
  double b[Basis<Dim>::kQuadratic];
  basis_values<Dim>(s, degree, b);
  const int n = degree < 2 ? Basis<Dim>::kLinear : Basis<Dim>::kQuadratic;
  double v = 0.0;
  for (int k = 0; k < n; ++k) v += c[k] * b[k];
  return v;
}

template <int Dim>
Vec<Dim> LocalPolynomial<Dim>::gradient(const Vec<Dim>& x) const {
  Vec<Dim> g;
  for (int d = 0; d < Dim; ++d) g[d] = c[1 + d];
  if (degree >= 2) {
    const Vec<Dim> s = (x - center) / dx;
    if constexpr (Dim == 2) {
      g[0] += 2.0 * c[3] * s[0] + c[4] * s[1];
      g[1] += c[4] * s[0] + 2.0 * c[5] * s[1];
    } else {
      g[0] += 2.0 * c[4] * s[0] + c[5] * s[1] + c[8] * s[2];
      g[1] += c[5] * s[0] + 2.0 * c[6] * s[1] + c[9] * s[2];
      g[2] += 2.0 * c[7] * s[2] + c[8] * s[0] + c[9] * s[1];
    }
  }
  return g / dx;
}

template <int Dim>
Eigen::Matrix<double, Dim, Dim> LocalPolynomial<Dim>::hessian() const {
  Eigen::Matrix<double, Dim, Dim> h = Eigen::Matrix<double, Dim, Dim>::Zero();
  if (degree < 2) return h;
  if constexpr (Dim == 2) {
    h << 2.0 * c[3], c[4], c[4], 2.0 * c[5];
  } else {
    h << 2.0 * c[4], c[5], c[8], c[5], 2.0 * c[6], c[9], c[8], c[9], 2.0 * c[7];
  }
  return h / (dx * dx);
}

template <int Dim>
double oscillation_indicator(const Coeffs<Dim>& c) {
  if constexpr (Dim == 2) {
    static constexpr double m[] = {0.0, 1.0, 1.0, 13.0 / 3.0, 7.0 / 6.0, 13.0 / 3.0};
    double s = 0.0;
    for (int k = 0; k < 6; ++k) s += m[k] * c[k] * c[k];
    return s;
  } else {
    static constexpr double m[] = {0.0,       1.0,       1.0,       1.0,       13.0 / 3.0,
                                   7.0 / 6.0, 13.0 / 3.0, 13.0 / 3.0, 7.0 / 6.0, 7.0 / 6.0};
    double s = 0.0;
    for (int k = 0; k < 10; ++k) s += m[k] * c[k] * c[k];
    return s;
  }
}

template <int Dim>
LocalPolynomial<Dim> fit_p1(const Forest<Dim>& forest, std::span<const double> field,
                            LeafIndex leaf) {
  const auto& st = gather(forest, leaf);
  auto p = blank(forest, field, leaf, 1);
  apply<Dim>(st.pattern->linear, field, leaf, st.ids, nullptr, 1, p.c);
  p.degenerate = st.pattern->linear.deficient;
  return p;
}

template <int Dim>
LocalPolynomial<Dim> fit_lateral(const Forest<Dim>& forest, std::span<const double> field,
                                 LeafIndex leaf, int octant) {
  if (octant < 0 || octant >= Basis<Dim>::kLaterals) throw ContractViolation("bad octant");
  const auto& st = gather(forest, leaf);
  return lateral_from(forest, field, leaf, st, octant);
}

template <int Dim>
LocalPolynomial<Dim> fit_quadratic(const Forest<Dim>& forest, std::span<const double> field,
                                   LeafIndex leaf) {
  const auto& st = gather(forest, leaf);
  auto p = blank(forest, field, leaf, 2);
  apply<Dim>(st.pattern->quadratic, field, leaf, st.ids, nullptr, 1, p.c);
  p.degenerate = st.pattern->quadratic.deficient;
  return p;
}

template <int Dim>
LocalPolynomial<Dim> fit_cweno(const Forest<Dim>& forest, std::span<const double> field,
                               LeafIndex leaf, const CwenoParams& params,
                               CwenoWeights<Dim>* weights) {
  constexpr int m = Basis<Dim>::kLaterals;
  const auto& st = gather(forest, leaf);
  auto opt = blank(forest, field, leaf, 2);
  apply<Dim>(st.pattern->quadratic, field, leaf, st.ids, nullptr, 1, opt.c);

  std::array<Coeffs<Dim>, m + 1> poly;
  bool fallback = false;
  for (int o = 0; o < m; ++o) {
    const auto lat = lateral_from(forest, field, leaf, st, o);
    poly[o + 1] = lat.c;
    fallback = fallback || lat.lateral_fallback;
  }
  CwenoWeights<Dim> w;
  w.linear[0] = params.d0;
  for (int k = 1; k <= m; ++k) w.linear[k] = (1.0 - params.d0) / m;
  poly[0] = opt.c;
  for (int k = 1; k <= m; ++k) poly[0] -= w.linear[k] * poly[k];
  poly[0] /= params.d0;

  w.eps = params.eps_factor * opt.dx * opt.dx;
  w.exponent = params.exponent;
  w.indicator[0] = oscillation_indicator<Dim>(opt.c);
  for (int k = 1; k <= m; ++k) w.indicator[k] = oscillation_indicator<Dim>(poly[k]);
  std::array<double, m + 1> alpha;
  // Normalise by the smallest (I + eps) first so that alpha stays representable.
  double base = kInf;
  for (int k = 0; k <= m; ++k) base = std::min(base, w.indicator[k] + w.eps);
  double total = 0.0;
  for (int k = 0; k <= m; ++k) {
    alpha[k] = w.linear[k] / std::pow((w.indicator[k] + w.eps) / base, w.exponent);
    total += alpha[k];
  }
  auto out = opt;
  out.c.setZero();
  for (int k = 0; k <= m; ++k) {
    w.omega[k] = alpha[k] / total;
    out.c += w.omega[k] * poly[k];
  }
  out.c[0] = field[leaf];
  out.degenerate = st.pattern->quadratic.deficient;
  out.lateral_fallback = fallback;
  if (weights) *weights = w;
  return out;
}

template <int Dim>
LocalPolynomial<Dim> fit(const Forest<Dim>& forest, std::span<const double> field, LeafIndex leaf,
                         Reconstruction op, const CwenoParams& params) {
  return op == Reconstruction::P1 ? fit_p1(forest, field, leaf)
                                  : fit_cweno(forest, field, leaf, params);
}

template <int Dim>
PolynomialField<Dim>::PolynomialField(const Forest<Dim>& forest, std::span<const double> field,
                                      Reconstruction op, const CwenoParams& params)
    : forest_(forest), field_(field), op_(op), params_(params), slot_(forest.size(), -1) {
  if (field.size() != forest.size()) throw ContractViolation("field does not match the forest");
}

template <int Dim>
void PolynomialField<Dim>::precompute(std::span<const LeafIndex> leaves, int workers) {
  forest_.build_neighbor_table();
  std::vector<LeafIndex> fresh;
  for (auto j : leaves)
    if (slot_[j] < 0) {
      slot_[j] = static_cast<std::int32_t>(polys_.size() + fresh.size());
      fresh.push_back(j);
    }
  const std::size_t base = polys_.size();
  polys_.resize(base + fresh.size());
  parallel_for(fresh.size(), workers, [&](std::size_t t) {
    polys_[base + t] = fit(forest_, field_, fresh[t], op_, params_);
  });
}

template <int Dim>
const LocalPolynomial<Dim>* PolynomialField<Dim>::cached(LeafIndex leaf) const {
  return slot_[leaf] < 0 ? nullptr : &polys_[slot_[leaf]];
}

template <int Dim>
LocalPolynomial<Dim> PolynomialField<Dim>::at(LeafIndex leaf) const {
  if (const auto* p = cached(leaf)) return *p;
  return fit(forest_, field_, leaf, op_, params_);
}

template <int Dim>
double PolynomialField<Dim>::evaluate(const Vec<Dim>& x) const {
  const LeafIndex j = forest_.locate(x);
  if (const auto* p = cached(j)) return p->evaluate(x);
  return fit(forest_, field_, j, op_, params_).evaluate(x);
}

std::size_t stencil_pattern_count() {
  return PatternCache<2>::instance().size() + PatternCache<3>::instance().size();
}

#define LSRECON_INSTANTIATE_RECON(D)                                                          \
  template struct LocalPolynomial<D>;                                                         \
  template double oscillation_indicator<D>(const Coeffs<D>&);                                 \
  template LocalPolynomial<D> fit_p1<D>(const Forest<D>&, std::span<const double>, LeafIndex); \
  template LocalPolynomial<D> fit_lateral<D>(const Forest<D>&, std::span<const double>,       \
                                             LeafIndex, int);                                 \
  template LocalPolynomial<D> fit_quadratic<D>(const Forest<D>&, std::span<const double>,     \
                                               LeafIndex);                                    \
  template LocalPolynomial<D> fit_cweno<D>(const Forest<D>&, std::span<const double>,         \
                                           LeafIndex, const CwenoParams&, CwenoWeights<D>*);  \
  template class PolynomialField<D>;                                                          \
  template LocalPolynomial<D> fit<D>(const Forest<D>&, std::span<const double>, LeafIndex,    \
                                     Reconstruction, const CwenoParams&);

LSRECON_INSTANTIATE_RECON(2)
LSRECON_INSTANTIATE_RECON(3)

}  // namespace lsrecon
