#include "lsrecon/propagation.hpp"

#include "lsrecon/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace lsrecon {

template <int Dim>
PropagationState<Dim> init_distance_exact(const Forest<Dim>& forest, const LeafBins& bins,
                                          const PointCloud<Dim>& cloud) {
  if (cloud.size() == 0) throw ContractViolation("distance initialisation needs a non-empty cloud");
  if (bins.offsets.size() != forest.size() + 1)
    throw ContractViolation("point bins do not match the forest");
  PropagationState<Dim> s;
  s.mode = PropagationMode::Distance;
  s.value.assign(forest.size(), kInf);
  s.reference.assign(forest.size(), Vec<Dim>::Zero());
  for (LeafIndex j = 0; j < forest.size(); ++j) {
    const auto pts = bins.of(j);
    if (pts.empty()) continue;
    const Vec<Dim> x = forest.center(j);
    for (auto p : pts) {
      const double dist = (x - cloud.points[p]).norm();
      if (dist < s.value[j]) {
        s.value[j] = dist;
        s.reference[j] = cloud.points[p];
      }
    }
    s.frontier.push_back(j);
  }
  return s;
}

template <int Dim>
int propagate(PropagationState<Dim>& s, const Forest<Dim>& forest, int workers, int max_sweeps) {
  const std::size_t n = forest.size();
  if (s.value.size() != n || s.reference.size() != n)
    throw ContractViolation("propagation state does not match the forest");
  if (!s.frozen.empty() && s.frozen.size() != n) throw ContractViolation("frozen mask size");
  if (!s.region.empty() && s.region.size() != n) throw ContractViolation("region mask size");
  forest.build_neighbor_table();

  const bool signed_mode = s.mode == PropagationMode::Signed;
  auto updatable = [&](LeafIndex i) {
    return (s.frozen.empty() || !s.frozen[i]) && (s.region.empty() || s.region[i]);
  };

  std::vector<char> in_front(n, 0);
  std::vector<char> in_next(n, 0);
  std::vector<LeafIndex> layer;
  std::vector<double> cand_value;
  std::vector<LeafIndex> cand_source;
  std::vector<Vec<Dim>> cand_ref;
  int done = 0;
  while (!s.frontier.empty() && done < max_sweeps) {
    if (done > static_cast<int>(n))
      throw NumericalFailure("propagation failed to terminate");
    for (auto k : s.frontier) in_front[k] = 1;

    // N^m: neighbours of the frontier that may change.
    layer.clear();
    for (auto k : s.frontier) {
      for (auto i : forest.neighbors(k)) {
        if (!in_next[i] && updatable(i)) {
          in_next[i] = 1;
          layer.push_back(i);
        }
      }
    }
    std::sort(layer.begin(), layer.end());

    cand_value.assign(layer.size(), kInf);
    cand_source.assign(layer.size(), kNoLeaf);
    cand_ref.resize(layer.size());
    parallel_for(layer.size(), workers, [&](std::size_t t) {
      const LeafIndex i = layer[t];
      const Vec<Dim> x = forest.center(i);
      double best = kInf;
      LeafIndex src = kNoLeaf;
      for (auto k : forest.neighbors(i)) {
        if (!in_front[k]) continue;
        const double dist = (x - s.reference[k]).norm();
        if (dist < best) {  // neighbours are sorted, so ties keep the smallest id
          best = dist;
          src = k;
        }
      }
      cand_value[t] = best;
      cand_source[t] = src;
      if (src != kNoLeaf) cand_ref[t] = s.reference[src];
    });

    for (auto k : s.frontier) in_front[k] = 0;
    for (auto i : layer) in_next[i] = 0;
    std::vector<LeafIndex> next;
    for (std::size_t t = 0; t < layer.size(); ++t) {
      const LeafIndex i = layer[t];
      if (cand_source[t] == kNoLeaf || !(cand_value[t] < std::abs(s.value[i]))) continue;
      s.value[i] = signed_mode ? std::copysign(cand_value[t], s.value[i]) : cand_value[t];
      s.reference[i] = cand_ref[t];
      next.push_back(i);
    }
    s.frontier = std::move(next);
    ++s.sweeps;
    ++done;
  }
  return done;
}

template PropagationState<2> init_distance_exact<2>(const Forest<2>&, const LeafBins&,
                                                    const PointCloud<2>&);
template PropagationState<3> init_distance_exact<3>(const Forest<3>&, const LeafBins&,
                                                    const PointCloud<3>&);
template int propagate<2>(PropagationState<2>&, const Forest<2>&, int, int);
template int propagate<3>(PropagationState<3>&, const Forest<3>&, int, int);

}  // namespace lsrecon
