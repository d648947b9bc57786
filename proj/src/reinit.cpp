#include "lsrecon/reinit.hpp"

#include "lsrecon/parallel.hpp"
#include "lsrecon/point_cloud.hpp"
#include "lsrecon/propagation.hpp"
#include "lsrecon/sl_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace lsrecon {

namespace {

template <int Dim>
double distance_to_cell(const Vec<Dim>& y, const Vec<Dim>& center, double dx) {
  const Vec<Dim> excess = ((y - center).cwiseAbs().array() - 0.5 * dx).max(0.0).matrix();
  return excess.norm();
}

}  // namespace

template <int Dim>
std::vector<LeafIndex> detect_front(const Forest<Dim>& forest, std::span<const double> phi) {
  if (phi.size() != forest.size()) throw ContractViolation("field does not match the forest");
  forest.build_neighbor_table();
  std::vector<LeafIndex> front;
  for (LeafIndex j = 0; j < forest.size(); ++j) {
    for (auto i : forest.neighbors(j)) {
      if (phi[i] * phi[j] <= 0.0) {
        front.push_back(j);
        break;
      }
    }
  }
  if (front.empty()) throw NumericalFailure("no sign change left: the interface was lost");
  return front;
}

template <int Dim>
SeedSet<Dim> make_seeds(std::span<const LeafIndex> front, const PolynomialField<Dim>& recon,
                        const ReinitParams& params) {
  constexpr int kSub = 1 << Dim;
  std::vector<std::array<Seed<Dim>, kSub>> found(front.size());
  std::vector<std::array<char, kSub>> ok(front.size());
  parallel_for(front.size(), params.workers, [&](std::size_t t) {
    const LeafIndex j = front[t];
    const LocalPolynomial<Dim> poly = recon.at(j);
    const Vec<Dim> c = poly.center;
    const double dx = poly.dx;
    for (int s = 0; s < kSub; ++s) {
      Vec<Dim> y = c;
      for (int d = 0; d < Dim; ++d) y[d] += ((s >> d) & 1 ? 0.25 : -0.25) * dx;
      bool good = false;
      for (int it = 0; it <= params.max_iterations; ++it) {
        const double r = poly.evaluate(y);
        if (std::abs(r) <= params.tolerance * dx) {
          good = true;
          break;
        }
        if (it == params.max_iterations) break;
        const Vec<Dim> g = poly.gradient(y);
        const double g2 = g.squaredNorm();
        if (!(g2 > 0.0)) break;
        Vec<Dim> step = -r * g / g2;
        const double len = step.norm();
        if (len > 0.5 * dx) step *= 0.5 * dx / len;  // damping
        y += step;
        if (distance_to_cell<Dim>(y, c, dx) > params.clamp * dx) break;
      }
      ok[t][s] = good;
      found[t][s] = {y, j};
    }
  });
  SeedSet<Dim> set;
  for (std::size_t t = 0; t < front.size(); ++t) {
    bool any = false;
    for (int s = 0; s < kSub; ++s) {
      if (ok[t][s]) {
        set.seeds.push_back(found[t][s]);
        any = true;
      } else {
        ++set.discarded;
      }
    }
    if (!any) set.barren.push_back(front[t]);
  }
  return set;
}

template <int Dim>
ClosestPointResult<Dim> closest_point_newton(const Vec<Dim>& x, const Vec<Dim>& seed,
                                             const LocalPolynomial<Dim>& poly,
                                             const ReinitParams& params) {
  ClosestPointResult<Dim> out;
  out.y = seed;
  out.result = {(x - seed).norm(), true};
  const double dx = poly.dx;
  const auto H = poly.hessian();
  Vec<Dim> y = seed;
  Vec<Dim> g = poly.gradient(y);
  const double g2 = g.squaredNorm();
  if (!(g2 > 0.0)) return out;
  double lambda = (x - y).dot(g) / g2;
  using Kkt = Eigen::Matrix<double, Dim + 1, Dim + 1>;
  using Rhs = Eigen::Matrix<double, Dim + 1, 1>;
  for (int it = 0; it <= params.max_iterations; ++it) {
    g = poly.gradient(y);
    Rhs f;
    f.template head<Dim>() = y - x + lambda * g;
    f[Dim] = poly.evaluate(y);
    if (f.norm() <= params.tolerance * dx) {
      out.y = y;
      out.result = {(x - y).norm(), false};
      return out;
    }
    if (it == params.max_iterations) break;
    Kkt k = Kkt::Zero();
    k.template topLeftCorner<Dim, Dim>() =
        Eigen::Matrix<double, Dim, Dim>::Identity() + lambda * H;
    k.template topRightCorner<Dim, 1>() = g;
    k.template bottomLeftCorner<1, Dim>() = g.transpose();
    Eigen::FullPivLU<Kkt> lu(k);
    if (!lu.isInvertible()) break;
    const Rhs step = lu.solve(-f);
    if (!step.allFinite()) break;
    y += step.template head<Dim>();
    lambda += step[Dim];
    if (distance_to_cell<Dim>(y, poly.center, dx) > params.clamp * dx) break;
  }
  return out;
}

template <int Dim>
std::vector<double> reinitialize(const Forest<Dim>& forest, std::span<const double> phi_tilde,
                                 std::span<const LeafIndex> reinit_band, double gamma,
                                 Reconstruction op, const CwenoParams& cweno,
                                 const ReinitParams& params, ReinitStats* stats) {
  const std::size_t n = forest.size();
  if (phi_tilde.size() != n) throw ContractViolation("field does not match the forest");
  forest.build_neighbor_table();
  const auto front = detect_front(forest, phi_tilde);

  PolynomialField<Dim> recon(forest, phi_tilde, op, cweno);
  recon.precompute(front, params.workers);
  const SeedSet<Dim> seeds = make_seeds(std::span<const LeafIndex>(front), recon, params);
  if (seeds.seeds.empty()) throw NumericalFailure("reinitialisation found no seed points");

  std::vector<Vec<Dim>> positions;
  positions.reserve(seeds.seeds.size());
  double cell = kInf;
  for (const auto& s : seeds.seeds) positions.push_back(s.x);
  for (auto j : front) cell = std::min(cell, forest.edge(j));
  const PointGrid<Dim> grid(std::span<const Vec<Dim>>(positions), cell);

  const auto frozen = dilate(forest, std::span<const LeafIndex>(front), params.frozen_layers);
  PropagationState<Dim> state;
  state.mode = PropagationMode::Signed;
  state.value.resize(n);
  state.reference.assign(n, Vec<Dim>::Zero());
  state.frozen.assign(n, 0);
  state.region.assign(n, 0);
  for (LeafIndex j = 0; j < n; ++j) state.value[j] = std::copysign(kInf, phi_tilde[j]);
  for (auto j : reinit_band) state.region[j] = 1;

  std::vector<ClosestPointResult<Dim>> feet(frozen.size());
  parallel_for(frozen.size(), params.workers, [&](std::size_t t) {
    const LeafIndex j = frozen[t];
    const Vec<Dim> x = forest.center(j);
    const auto hit = grid.nearest(x);
    const Seed<Dim>& s = seeds.seeds[hit.index];
    const auto* poly = recon.cached(s.owner);
    feet[t] = closest_point_newton<Dim>(x, s.x, *poly, params);
  });
  std::size_t fallbacks = 0;
  for (std::size_t t = 0; t < frozen.size(); ++t) {
    const LeafIndex j = frozen[t];
    const double sign = static_cast<double>(sign_of(phi_tilde[j]));
    state.value[j] = sign * feet[t].result.distance;
    state.reference[j] = feet[t].y;
    state.frozen[j] = 1;
    state.region[j] = 1;
    state.frontier.push_back(j);
    fallbacks += feet[t].result.fallback;
  }
  const int sweeps = propagate(state, forest, params.workers);

  std::vector<double> out(phi_tilde.begin(), phi_tilde.end());
  for (LeafIndex j = 0; j < n; ++j)
    if (state.region[j]) out[j] = state.value[j];
  cut(out, gamma);

  if (stats) {
    stats->front = front.size();
    stats->seeds = seeds.seeds.size();
    stats->discarded = seeds.discarded;
    stats->barren = seeds.barren.size();
    stats->frozen = frozen.size();
    stats->newton_fallback = fallbacks;
    stats->sweeps = sweeps;
  }
  return out;
}

#define LSRECON_INSTANTIATE_REINIT(D)                                                          \
  template std::vector<LeafIndex> detect_front<D>(const Forest<D>&, std::span<const double>);  \
  template SeedSet<D> make_seeds<D>(std::span<const LeafIndex>, const PolynomialField<D>&,     \
                                    const ReinitParams&);                                      \
  template ClosestPointResult<D> closest_point_newton<D>(const Vec<D>&, const Vec<D>&,         \
                                                         const LocalPolynomial<D>&,            \
                                                         const ReinitParams&);                 \
  template std::vector<double> reinitialize<D>(const Forest<D>&, std::span<const double>,      \
                                               std::span<const LeafIndex>, double,             \
                                               Reconstruction, const CwenoParams&,             \
                                               const ReinitParams&, ReinitStats*);

LSRECON_INSTANTIATE_REINIT(2)
LSRECON_INSTANTIATE_REINIT(3)

}  // namespace lsrecon
