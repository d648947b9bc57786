#pragma once

// Constrained least-squares reconstructions on a leaf's neighbour stencil:
// degree-1 (P1) and third-order CWENO.  Polynomials live on the scaled local
// basis x^ = (x - x_j) / dx_j:
//   2D  {1, x, y, x^2, xy, y^2}
//   3D  {1, x, y, z, x^2, xy, y^2, z^2, xz, yz}
// with degree-1 polynomials using the leading Dim+1 entries.

#include "lsrecon/common.hpp"
#include "lsrecon/forest.hpp"

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

namespace lsrecon {

template <int Dim>
struct Basis {
  static constexpr int kLinear = Dim + 1;
  static constexpr int kQuadratic = Dim == 2 ? 6 : 10;
  static constexpr int kLaterals = 1 << Dim;
};

template <int Dim>
using Coeffs = Eigen::Matrix<double, Basis<Dim>::kQuadratic, 1>;

enum class Reconstruction { P1, Cweno };

template <int Dim>
struct LocalPolynomial {
  LeafIndex owner = kNoLeaf;
  int degree = 1;
  Vec<Dim> center = Vec<Dim>::Zero();
  double dx = 1.0;
  Coeffs<Dim> c = Coeffs<Dim>::Zero();
  bool degenerate = false;        // rank-deficient fit, minimum-norm solution used
  bool lateral_fallback = false;  // an empty lateral stencil was replaced by the full one

  double evaluate(const Vec<Dim>& x) const;
  Vec<Dim> gradient(const Vec<Dim>& x) const;
  // Constant for degree <= 2.
  Eigen::Matrix<double, Dim, Dim> hessian() const;
};

struct CwenoParams {
  double d0 = 0.75;         // optimal-polynomial weight; laterals share 1 - d0
  double exponent = 2.0;    // l
  double eps_factor = 1.0;  // eps = eps_factor * dx_j^2
};

template <int Dim>
struct CwenoWeights {
  static constexpr int kCount = Basis<Dim>::kLaterals + 1;  // index 0 is P_0
  std::array<double, kCount> linear{};
  std::array<double, kCount> omega{};
  std::array<double, kCount> indicator{};
  double eps = 0.0;
  double exponent = 2.0;
};

// I = c^T M c with the diagonal indicator matrix; degree-1 input is zero padded.
template <int Dim>
double oscillation_indicator(const Coeffs<Dim>& c);

// Constrained fits: c_0 = field[leaf], remaining coefficients by least squares
// over the stencil (all full-adjacency neighbours).
template <int Dim>
LocalPolynomial<Dim> fit_p1(const Forest<Dim>& forest, std::span<const double> field,
                            LeafIndex leaf);

// Octant index: bit d set selects the positive side of axis d (2D: 0 sw, 1 se, 2 nw, 3 ne).
template <int Dim>
LocalPolynomial<Dim> fit_lateral(const Forest<Dim>& forest, std::span<const double> field,
                                 LeafIndex leaf, int octant);

template <int Dim>
LocalPolynomial<Dim> fit_quadratic(const Forest<Dim>& forest, std::span<const double> field,
                                   LeafIndex leaf);

template <int Dim>
LocalPolynomial<Dim> fit_cweno(const Forest<Dim>& forest, std::span<const double> field,
                               LeafIndex leaf, const CwenoParams& params = {},
                               CwenoWeights<Dim>* weights = nullptr);

template <int Dim>
LocalPolynomial<Dim> fit(const Forest<Dim>& forest, std::span<const double> field, LeafIndex leaf,
                         Reconstruction op, const CwenoParams& params = {});

// Reconstructions of one field snapshot, precomputed on a leaf set and
// computed on demand elsewhere.  Holds references: the forest and the field
// must outlive it and stay unchanged.
template <int Dim>
class PolynomialField {
 public:
  PolynomialField(const Forest<Dim>& forest, std::span<const double> field, Reconstruction op,
                  const CwenoParams& params = {});

  void precompute(std::span<const LeafIndex> leaves, int workers = 1);
  LocalPolynomial<Dim> at(LeafIndex leaf) const;
  const LocalPolynomial<Dim>* cached(LeafIndex leaf) const;
  // Value of the reconstruction of the leaf containing x.
  double evaluate(const Vec<Dim>& x) const;

  const Forest<Dim>& forest() const { return forest_; }
  std::span<const double> field() const { return field_; }
  Reconstruction op() const { return op_; }

 private:
  const Forest<Dim>& forest_;
  std::span<const double> field_;
  Reconstruction op_;
  CwenoParams params_;
  std::vector<std::int32_t> slot_;
  std::vector<LocalPolynomial<Dim>> polys_;
};

// Number of distinct stencil patterns seen so far (pseudo-inverses are shared per pattern).
std::size_t stencil_pattern_count();

}  // namespace lsrecon
