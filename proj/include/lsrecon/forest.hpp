#pragma once

// Graded quadtree (Dim = 2) / octree (Dim = 3) over the cube [-M, M]^Dim.
//
// Leaves are kept in Z-order (Morton order of their lower-corner anchor,
// expressed in units of the finest representable cell).  With that ordering a
// sibling family is a contiguous run of 2^Dim leaves, point location is a binary
// search over the Morton keys, and iteration order is deterministic.

#include "lsrecon/common.hpp"

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace lsrecon {

// Deepest level the integer anchors can represent.
inline constexpr int kMaxDepth = 20;

struct Domain {
  double half_width = 1.2;  // domain is [-M, M]^n
  int max_level = 6;        // L
  int min_level = 2;        // coarsening never goes above this level

  double root_edge() const { return 2.0 * half_width; }
  // Edge of a leaf at `level`.
  double edge(int level) const { return root_edge() / static_cast<double>(1u << level); }
  double min_edge() const { return edge(max_level); }
};

void validate(const Domain& domain);

enum class Adjacency {
  Face,  // share an (n-1)-dimensional face ("edge" neighbours in 2D)
  Full,  // share any boundary point (edge and corner neighbours)
};

template <int Dim>
struct Leaf {
  std::array<std::uint32_t, Dim> anchor{};  // lower corner, finest-cell units
  int level = 0;

  std::uint32_t size() const { return 1u << (kMaxDepth - level); }
};

// Provenance of a leaf after a topology change, relative to the forest before it.
struct LeafOrigin {
  enum class Kind : std::uint8_t { Kept, Refined, Coarsened };
  Kind kind = Kind::Kept;
  // Kept: the same leaf.  Refined: the ancestor leaf it was cut from.
  // Coarsened: the first of the 2^Dim former children (they are contiguous).
  LeafIndex source = kNoLeaf;
};

using AdaptMap = std::vector<LeafOrigin>;  // indexed by new leaf id

// Chain two maps: `first` takes A -> B, `second` takes B -> C.
// Coarsening in `second` is only representable for families kept by `first`.
AdaptMap compose(const AdaptMap& first, const AdaptMap& second);

std::uint64_t morton_encode2(std::uint32_t x, std::uint32_t y);
std::uint64_t morton_encode3(std::uint32_t x, std::uint32_t y, std::uint32_t z);

template <int Dim>
class Forest {
 public:
  static constexpr int kChildren = 1 << Dim;
  static constexpr int kDirections = Dim == 2 ? 8 : 26;

  // Uniform forest with every leaf at `level`.
  Forest(const Domain& domain, int level);

  const Domain& domain() const { return domain_; }
  void set_max_level(int level);
  void set_min_level(int level);

  std::size_t size() const { return leaves_.size(); }
  const Leaf<Dim>& leaf(LeafIndex i) const { return leaves_[i]; }
  int level(LeafIndex i) const { return leaves_[i].level; }
  std::uint64_t key(LeafIndex i) const { return keys_[i]; }
  Vec<Dim> center(LeafIndex i) const;
  double edge(LeafIndex i) const { return domain_.edge(leaves_[i].level); }
  double volume(LeafIndex i) const;
  int finest_level() const;
  int coarsest_level() const;

  // Child-index path from the root (most significant first).
  std::vector<int> path(LeafIndex i) const;

  bool contains(const Vec<Dim>& x) const;
  // Unique leaf whose half-open cell holds x; the domain's top faces are closed.
  LeafIndex locate(const Vec<Dim>& x) const;

  // Cached full-adjacency lists, sorted by leaf id.  The table is built on
  // first use after a topology change; call build_neighbor_table() before
  // sharing the forest across threads.
  std::span<const LeafIndex> neighbors(LeafIndex i) const;
  std::vector<LeafIndex> neighbors(LeafIndex i, Adjacency mode) const;
  void build_neighbor_table() const;

  // Uncached neighbour search, valid on unbalanced forests too.
  void collect_neighbors(LeafIndex i, std::vector<LeafIndex>& out) const;

  bool touches(LeafIndex a, LeafIndex b, Adjacency mode) const;

  // Split every listed leaf once.  Leaves already at max_level are skipped.
  AdaptMap refine(std::span<const LeafIndex> leaves);
  // Merge the families starting at each listed first child.
  AdaptMap coarsen(std::span<const LeafIndex> first_children);
  bool is_family(LeafIndex first_child) const;

  // Exhaustive scan of all adjacent pairs (full adjacency).
  bool is_balanced() const;
  bool balanced_flag() const { return balanced_; }
  void mark_balanced() { balanced_ = true; }

 private:
  struct NeighborTable {
    std::vector<std::uint32_t> offsets;
    std::vector<LeafIndex> ids;
  };

  void rebuild_keys();
  std::uint64_t encode(const std::array<std::uint32_t, Dim>& a) const;
  bool anchor_in_domain(const std::array<std::int64_t, Dim>& a) const;
  LeafIndex locate_anchor(const std::array<std::uint32_t, Dim>& a) const;
  void reset_topology_caches();

  Domain domain_;
  std::vector<Leaf<Dim>> leaves_;
  std::vector<std::uint64_t> keys_;
  bool balanced_ = true;
  mutable std::shared_ptr<const NeighborTable> table_;
};

// Enforce 2:1 grading under full adjacency by refinement only.
template <int Dim>
AdaptMap balance_2to1(Forest<Dim>& forest);

// Value of a new leaf refined from `source` (an id in the old forest) at x.
template <int Dim>
using SourceEvaluator = std::function<double(LeafIndex source, const Vec<Dim>& x)>;

// Carry a per-leaf field across a topology change.  Coarsened leaves take the
// mean of their former children; refined ones evaluate the source's reconstruction.
template <int Dim>
std::vector<double> transfer_field(const Forest<Dim>& updated, const AdaptMap& map,
                                   std::span<const double> old_values,
                                   const SourceEvaluator<Dim>& evaluate);

// Single-leaf operations.  `recon` evaluates the leaf's local reconstruction.
template <int Dim>
struct RefineResult {
  std::vector<LeafIndex> children;
  bool at_max_level = false;  // request ignored
};

template <int Dim>
RefineResult<Dim> refine_leaf(Forest<Dim>& forest, LeafIndex leaf, std::vector<double>& field,
                              const std::function<double(const Vec<Dim>&)>& recon);

template <int Dim>
LeafIndex coarsen_family(Forest<Dim>& forest, LeafIndex first_child, std::vector<double>& field);

// Balance and carry one field; `recon` evaluates the old forest's leaf reconstruction.
template <int Dim>
AdaptMap balance_2to1(Forest<Dim>& forest, std::vector<double>& field,
                      const std::function<double(const Forest<Dim>& old,
                                                 std::span<const double> old_field,
                                                 LeafIndex source, const Vec<Dim>& x)>& recon);

}  // namespace lsrecon
