#pragma once

// One semi-Lagrangian step of the localised level-set evolution.

#include "lsrecon/common.hpp"
#include "lsrecon/forest.hpp"
#include "lsrecon/recon.hpp"

#include <span>
#include <utility>
#include <vector>

namespace lsrecon {

struct SolverParams {
  int p = 1;          // fidelity exponent
  double mu = 0.05;   // curvature weight
  double dt = 0.0;
  double D = 1e-3;    // degenerate-gradient threshold D * dt^alpha
  double alpha = 1.0;
  bool cavity_mode = false;
  double cavity_distance = 4.0;  // in units of dx_min
  double cavity_gradient = 0.9;
  Reconstruction op = Reconstruction::P1;
  CwenoParams cweno;
  int workers = 1;
};

void validate(const SolverParams& params);

struct BandConstants {
  double dx_min = 0.0;
  double lambda = 0.0;  // dt / dx_min
  double beta = 0.0;    // 2 lambda dx_min
  double gamma = 0.0;   // 4 lambda dx_min

  static BandConstants from(double dt, double dx_min);
};

double cutoff(double phi, double beta, double gamma);

template <int Dim>
struct BandState {
  BandConstants constants;
  std::vector<LeafIndex> active;  // |phi| < gamma, sorted
  std::vector<LeafIndex> reinit;  // active dilated by ceil(2 lambda) layers, sorted
  std::vector<char> in_active;
  std::vector<char> in_reinit;
};

template <int Dim>
BandState<Dim> select_band(const Forest<Dim>& forest, std::span<const double> phi,
                           const BandConstants& constants);

// Clamp to +-gamma outside |phi| < gamma.
void cut(std::vector<double>& phi, double gamma);

// Dilate a leaf set by `layers` full-adjacency rings.
template <int Dim>
std::vector<LeafIndex> dilate(const Forest<Dim>& forest, std::span<const LeafIndex> seeds,
                              int layers);

template <int Dim>
struct GradientResult {
  Vec<Dim> g = Vec<Dim>::Zero();
  bool degenerate = false;
};

// Gradient of the leaf polynomial at the leaf centre.
template <int Dim>
GradientResult<Dim> gradient(const LocalPolynomial<Dim>& poly);

Vec<2> tangent_frame(const Vec<2>& g);
std::pair<Vec<3>, Vec<3>> tangent_frame(const Vec<3>& g);

// E_p over the front set.
template <int Dim>
double compute_energy(std::span<const LeafIndex> front, std::span<const double> d, double dx_min,
                      int p);

template <int Dim>
Vec<Dim> effective_velocity(double d, const Vec<Dim>& grad_d, const Vec<Dim>& grad_phi,
                            const SolverParams& params, double dx_min, bool* switched = nullptr);

struct StepStats {
  std::size_t updated = 0;
  std::size_t fallback = 0;       // degenerate-gradient branch
  std::size_t cavity_switch = 0;  // velocity replaced by grad phi
  std::size_t clamped_feet = 0;   // displaced points pulled back into the domain
};

// phi^{n+1} on the active set; other entries are copied.  `grad_d` holds the
// distance gradient per leaf (only active entries are read).  The polynomial
// field must reconstruct `phi` with the scheduled operator.
template <int Dim>
std::vector<double> sl_step(const PolynomialField<Dim>& recon, std::span<const double> d,
                            std::span<const Vec<Dim>> grad_d, const BandState<Dim>& band,
                            double energy, const SolverParams& params, StepStats* stats = nullptr);

// P1 gradient of a field at each listed leaf (zero elsewhere).
template <int Dim>
std::vector<Vec<Dim>> p1_gradients(const Forest<Dim>& forest, std::span<const double> field,
                                   std::span<const LeafIndex> leaves, int workers = 1);

}  // namespace lsrecon
