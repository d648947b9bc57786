#include "lsrecon/sl_solver.hpp"

#include "lsrecon/parallel.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <atomic>
#include <cmath>

namespace lsrecon {

void validate(const SolverParams& params) {
  if (!(params.dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(params.mu >= 0.0)) throw ConfigError("mu must be non-negative");
  if (params.p < 1) throw ConfigError("p must be at least 1");
  if (!(params.cweno.d0 > 0.0 && params.cweno.d0 < 1.0)) throw ConfigError("d0 must lie in (0, 1)");
}

BandConstants BandConstants::from(double dt, double dx_min) {
  BandConstants b;
  b.dx_min = dx_min;
  b.lambda = dt / dx_min;
  b.beta = 2.0 * b.lambda * dx_min;
  b.gamma = 4.0 * b.lambda * dx_min;
  return b;
}

double cutoff(double phi, double beta, double gamma) {
  const double a = std::abs(phi);
  if (a <= beta) return 1.0;
  if (a > gamma) return 0.0;
  const double w = gamma - beta;
  return (a - gamma) * (a - gamma) * (2.0 * a + gamma - 3.0 * beta) / (w * w * w);
}

void cut(std::vector<double>& phi, double gamma) {
  for (double& v : phi) {
    if (v > gamma) v = gamma;
    else if (v < -gamma) v = -gamma;
  }
}

template <int Dim>
std::vector<LeafIndex> dilate(const Forest<Dim>& forest, std::span<const LeafIndex> seeds,
                              int layers) {
  std::vector<char> mark(forest.size(), 0);
  std::vector<LeafIndex> all(seeds.begin(), seeds.end());
  for (auto j : all) mark[j] = 1;
  std::vector<LeafIndex> ring(all);
  for (int l = 0; l < layers; ++l) {
    std::vector<LeafIndex> next;
    for (auto j : ring)
      for (auto k : forest.neighbors(j))
        if (!mark[k]) {
          mark[k] = 1;
          next.push_back(k);
        }
    all.insert(all.end(), next.begin(), next.end());
    ring = std::move(next);
  }
  std::sort(all.begin(), all.end());
  return all;
}

template <int Dim>
BandState<Dim> select_band(const Forest<Dim>& forest, std::span<const double> phi,
                           const BandConstants& constants) {
  if (phi.size() != forest.size()) throw ContractViolation("field does not match the forest");
  BandState<Dim> b;
  b.constants = constants;
  b.in_active.assign(forest.size(), 0);
  b.in_reinit.assign(forest.size(), 0);
  for (LeafIndex j = 0; j < forest.size(); ++j)
    if (std::abs(phi[j]) < constants.gamma) {
      b.active.push_back(j);
      b.in_active[j] = 1;
    }
  const int layers = static_cast<int>(std::ceil(2.0 * constants.lambda - 1e-12));
  b.reinit = dilate(forest, std::span<const LeafIndex>(b.active), layers);
  for (auto j : b.reinit) b.in_reinit[j] = 1;
  return b;
}

template <int Dim>
GradientResult<Dim> gradient(const LocalPolynomial<Dim>& poly) {
  GradientResult<Dim> r;
  r.g = poly.gradient(poly.center);
  r.degenerate = poly.degenerate || r.g.squaredNorm() == 0.0;
  return r;
}

Vec<2> tangent_frame(const Vec<2>& g) {
  const double n = g.norm();
  if (!(n > 0.0)) throw ContractViolation("tangent frame of a zero gradient");
  return Vec<2>(g[1], -g[0]) / n;
}

std::pair<Vec<3>, Vec<3>> tangent_frame(const Vec<3>& g) {
  const double n = g.norm();
  if (!(n > 0.0)) throw ContractViolation("tangent frame of a zero gradient");
  int k = 0;
  for (int d = 1; d < 3; ++d)
    if (std::abs(g[d]) < std::abs(g[k])) k = d;
  const Vec<3> e = Vec<3>::Unit(k);
  const Vec<3> s1 = g.cross(e).normalized();
  const Vec<3> s2 = g.cross(s1).normalized();
  return {s1, s2};
}

template <int Dim>
double compute_energy(std::span<const LeafIndex> front, std::span<const double> d, double dx_min,
                      int p) {
  if (front.empty()) throw NumericalFailure("front is empty: the interface was lost");
  const double w = std::pow(dx_min, Dim - 1);
  std::vector<double> terms(front.size());
  for (std::size_t t = 0; t < front.size(); ++t)
    terms[t] = std::pow(std::abs(d[front[t]]), p) * w;
  return std::pow(pairwise_sum(terms.begin(), terms.end()), 1.0 / p);
}

template <int Dim>
Vec<Dim> effective_velocity(double d, const Vec<Dim>& grad_d, const Vec<Dim>& grad_phi,
                            const SolverParams& params, double dx_min, bool* switched) {
  const bool use_phi = params.cavity_mode && d > params.cavity_distance * dx_min &&
                       grad_d.norm() < params.cavity_gradient;
  if (switched) *switched = use_phi;
  return use_phi ? grad_phi : grad_d;
}

namespace {

template <int Dim>
Vec<Dim> clamp_to_domain(const Vec<Dim>& x, double M, bool& clamped) {
  Vec<Dim> y = x;
  for (int k = 0; k < Dim; ++k) y[k] = std::clamp(y[k], -M, M);
  clamped = y != x;
  return y;
}

}  // namespace

template <int Dim>
std::vector<double> sl_step(const PolynomialField<Dim>& recon, std::span<const double> d,
                            std::span<const Vec<Dim>> grad_d, const BandState<Dim>& band,
                            double energy, const SolverParams& params, StepStats* stats) {
  validate(params);
  const Forest<Dim>& forest = recon.forest();
  const auto phi = recon.field();
  const double M = forest.domain().half_width;
  const double dt = params.dt;
  const double threshold = params.D * std::pow(dt, params.alpha);
  const BandConstants& bc = band.constants;
  if (params.p > 1 && !(energy >= 0.0))
    throw ContractViolation("energy required when p > 1");
  forest.build_neighbor_table();

  std::vector<double> next(phi.begin(), phi.end());
  std::vector<char> flag_fallback(band.active.size(), 0), flag_cavity(band.active.size(), 0);
  std::vector<int> flag_clamped(band.active.size(), 0);

  parallel_for(band.active.size(), params.workers, [&](std::size_t t) {
    const LeafIndex j = band.active[t];
    const LocalPolynomial<Dim> poly = recon.at(j);
    const Vec<Dim> gphi = gradient(poly).g;
    double update;
    if (!(gphi.norm() >= threshold)) {
      // Neighbour average; each reconstruction at its own centre is phi_i.
      const auto nb = forest.neighbors(j);
      double s = 0.0;
      for (auto i : nb) s += phi[i];
      update = nb.empty() ? phi[j] : s / static_cast<double>(nb.size());
      flag_fallback[t] = 1;
    } else {
      const double dj = d[j];
      double C = 1.0;
      if (params.p > 1) C = energy > 0.0 ? std::pow(dj / energy, params.p - 1) : 0.0;
      bool switched = false;
      const Vec<Dim> v = effective_velocity<Dim>(dj, grad_d[j], gphi, params, bc.dx_min, &switched);
      flag_cavity[t] = switched;
      const Vec<Dim> foot = forest.center(j) + C * dt * v;
      const double h = std::sqrt(std::max(0.0, 2.0 * C * params.mu * dj * dt / params.p));
      auto sample = [&](const Vec<Dim>& x) {
        bool clamped = false;
        const Vec<Dim> y = clamp_to_domain<Dim>(x, M, clamped);
        flag_clamped[t] += clamped;
        return recon.evaluate(y);
      };
      if (h == 0.0) {
        update = sample(foot);
      } else if constexpr (Dim == 2) {
        const Vec<2> s = tangent_frame(gphi);
        update = 0.5 * (sample(foot + h * s) + sample(foot - h * s));
      } else {
        const auto [s1, s2] = tangent_frame(gphi);
        update = 0.25 * (sample(foot + h * (s1 + s2)) + sample(foot + h * (s1 - s2)) +
                         sample(foot - h * (s1 - s2)) + sample(foot - h * (s1 + s2)));
      }
    }
    next[j] = phi[j] + cutoff(phi[j], bc.beta, bc.gamma) * (update - phi[j]);
  });

  if (stats) {
    *stats = {};
    stats->updated = band.active.size();
    for (std::size_t t = 0; t < band.active.size(); ++t) {
      stats->fallback += flag_fallback[t];
      stats->cavity_switch += flag_cavity[t];
      stats->clamped_feet += flag_clamped[t];
    }
  }
  return next;
}

template <int Dim>
std::vector<Vec<Dim>> p1_gradients(const Forest<Dim>& forest, std::span<const double> field,
                                   std::span<const LeafIndex> leaves, int workers) {
  forest.build_neighbor_table();
  std::vector<Vec<Dim>> g(forest.size(), Vec<Dim>::Zero());
  parallel_for(leaves.size(), workers, [&](std::size_t t) {
    const LeafIndex j = leaves[t];
    g[j] = gradient(fit_p1(forest, field, j)).g;
  });
  return g;
}

#define LSRECON_INSTANTIATE_SL(D)                                                              \
  template BandState<D> select_band<D>(const Forest<D>&, std::span<const double>,             \
                                       const BandConstants&);                                 \
  template std::vector<LeafIndex> dilate<D>(const Forest<D>&, std::span<const LeafIndex>, int); \
  template GradientResult<D> gradient<D>(const LocalPolynomial<D>&);                           \
  template double compute_energy<D>(std::span<const LeafIndex>, std::span<const double>,      \
                                    double, int);                                             \
  template Vec<D> effective_velocity<D>(double, const Vec<D>&, const Vec<D>&,                 \
                                        const SolverParams&, double, bool*);                  \
  template std::vector<double> sl_step<D>(const PolynomialField<D>&, std::span<const double>, \
                                          std::span<const Vec<D>>, const BandState<D>&,       \
                                          double, const SolverParams&, StepStats*);           \
  template std::vector<Vec<D>> p1_gradients<D>(const Forest<D>&, std::span<const double>,     \
                                               std::span<const LeafIndex>, int);

LSRECON_INSTANTIATE_SL(2)
LSRECON_INSTANTIATE_SL(3)

}  // namespace lsrecon
