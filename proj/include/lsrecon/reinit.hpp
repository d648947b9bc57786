#pragma once

// Closest-point reinitialisation: seeds on the local zero sets, Newton
// projections for the leaves next to the front, signed propagation beyond.

#include "lsrecon/common.hpp"
#include "lsrecon/forest.hpp"
#include "lsrecon/recon.hpp"

#include <span>
#include <vector>

namespace lsrecon {

struct ReinitParams {
  int max_iterations = 20;
  double tolerance = 1e-10;  // times dx of the owner leaf
  double clamp = 2.0;        // kappa: seeds and Newton iterates stay within kappa*dx of the cell
  int frozen_layers = 1;     // D^0 = Q_0 dilated by this many layers
  int workers = 1;
};

// Q_0 = {j : some neighbour i has phi_i * phi_j <= 0}, sorted.
template <int Dim>
std::vector<LeafIndex> detect_front(const Forest<Dim>& forest, std::span<const double> phi);

template <int Dim>
struct Seed {
  Vec<Dim> x = Vec<Dim>::Zero();
  LeafIndex owner = kNoLeaf;
};

template <int Dim>
struct SeedSet {
  std::vector<Seed<Dim>> seeds;
  std::size_t discarded = 0;
  std::vector<LeafIndex> barren;  // front leaves whose projections all failed
};

// Project the 2^n sub-cell centres of each front leaf onto its polynomial's zero set.
template <int Dim>
SeedSet<Dim> make_seeds(std::span<const LeafIndex> front, const PolynomialField<Dim>& recon,
                        const ReinitParams& params = {});

struct ClosestPoint {
  double distance = 0.0;
  bool fallback = false;
};

template <int Dim>
struct ClosestPointResult {
  ClosestPoint result;
  Vec<Dim> y = Vec<Dim>::Zero();  // foot point on R = 0 (the seed on fallback)
};

// min |x - y| subject to R(y) = 0 by Lagrange-Newton from the seed.
template <int Dim>
ClosestPointResult<Dim> closest_point_newton(const Vec<Dim>& x, const Vec<Dim>& seed,
                                             const LocalPolynomial<Dim>& poly,
                                             const ReinitParams& params = {});

struct ReinitStats {
  std::size_t front = 0;
  std::size_t seeds = 0;
  std::size_t discarded = 0;
  std::size_t barren = 0;
  std::size_t frozen = 0;
  std::size_t newton_fallback = 0;
  int sweeps = 0;
};

// Reinitialise phi_tilde on the band `reinit_band` (Q-bar), then cut to +-gamma.
template <int Dim>
std::vector<double> reinitialize(const Forest<Dim>& forest, std::span<const double> phi_tilde,
                                 std::span<const LeafIndex> reinit_band, double gamma,
                                 Reconstruction op, const CwenoParams& cweno = {},
                                 const ReinitParams& params = {}, ReinitStats* stats = nullptr);

}  // namespace lsrecon
