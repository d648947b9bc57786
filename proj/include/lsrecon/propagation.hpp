#pragma once

// Layer-by-layer spreading of a minimised distance that carries, per leaf, the
// reference point realising it.  Used for the unsigned cloud distance and for
// the signed fill after reinitialisation.

#include "lsrecon/common.hpp"
#include "lsrecon/forest.hpp"
#include "lsrecon/point_cloud.hpp"

#include <limits>
#include <vector>

namespace lsrecon {

enum class PropagationMode { Distance, Signed };

template <int Dim>
struct PropagationState {
  PropagationMode mode = PropagationMode::Distance;
  // +inf when unset; in signed mode the sentinel is +-inf and carries the sign.
  std::vector<double> value;
  std::vector<Vec<Dim>> reference;
  std::vector<LeafIndex> frontier;  // D^m, sorted
  std::vector<char> frozen;         // never updated (signed mode seeds)
  std::vector<char> region;         // if non-empty, only these leaves may change
  int sweeps = 0;
};

// g_j = min |x_j - q| over the points binned in j, D^0 = the non-empty leaves.
template <int Dim>
PropagationState<Dim> init_distance_exact(const Forest<Dim>& forest, const LeafBins& bins,
                                          const PointCloud<Dim>& cloud);

// Run sweeps until the frontier empties (or `max_sweeps` is reached).  Returns
// the number of sweeps performed.  Throws NumericalFailure past forest.size() sweeps.
template <int Dim>
int propagate(PropagationState<Dim>& state, const Forest<Dim>& forest, int workers = 1,
              int max_sweeps = std::numeric_limits<int>::max());

}  // namespace lsrecon
