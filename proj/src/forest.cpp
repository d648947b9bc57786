#include "lsrecon/forest.hpp"

#include <algorithm>
#include <numeric>

namespace lsrecon {

namespace {

std::uint64_t spread2(std::uint32_t v) {
  std::uint64_t x = v & 0xfffffu;
  x = (x | (x << 16)) & 0x0000ffff0000ffffull;
  x = (x | (x << 8)) & 0x00ff00ff00ff00ffull;
  x = (x | (x << 4)) & 0x0f0f0f0f0f0f0f0full;
  x = (x | (x << 2)) & 0x3333333333333333ull;
  x = (x | (x << 1)) & 0x5555555555555555ull;
  return x;
}

std::uint64_t spread3(std::uint32_t v) {
  std::uint64_t x = v & 0x1fffffu;
  x = (x | (x << 32)) & 0x1f00000000ffffull;
  x = (x | (x << 16)) & 0x1f0000ff0000ffull;
  x = (x | (x << 8)) & 0x100f00f00f00f00full;
  x = (x | (x << 4)) & 0x10c30c30c30c30c3ull;
  x = (x | (x << 2)) & 0x1249249249249249ull;
  return x;
}

constexpr std::uint32_t kRootSize = 1u << kMaxDepth;

}  // namespace

std::uint64_t morton_encode2(std::uint32_t x, std::uint32_t y) {
  return spread2(x) | (spread2(y) << 1);
}

std::uint64_t morton_encode3(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
  return spread3(x) | (spread3(y) << 1) | (spread3(z) << 2);
}

void validate(const Domain& domain) {
  if (!(domain.half_width > 1.0)) throw ConfigError("domain half-width M must exceed 1");
  if (domain.max_level < 0 || domain.max_level > kMaxDepth)
    throw ConfigError("max level out of range [0, " + std::to_string(kMaxDepth) + "]");
  if (domain.min_level < 0 || domain.min_level > domain.max_level)
    throw ConfigError("min level must lie in [0, max level]");
}

AdaptMap compose(const AdaptMap& first, const AdaptMap& second) {
  AdaptMap out(second.size());
  for (std::size_t i = 0; i < second.size(); ++i) {
    const LeafOrigin& o = second[i];
    const LeafOrigin& mid = first[o.source];
    switch (o.kind) {
      case LeafOrigin::Kind::Kept:
        out[i] = mid;
        break;
      case LeafOrigin::Kind::Refined:
        if (mid.kind == LeafOrigin::Kind::Coarsened)
          throw ContractViolation("cannot compose refinement of a coarsened leaf");
        out[i] = {LeafOrigin::Kind::Refined, mid.source};
        break;
      case LeafOrigin::Kind::Coarsened:
        if (mid.kind != LeafOrigin::Kind::Kept)
          throw ContractViolation("coarsened family was not kept by the first map");
        out[i] = {LeafOrigin::Kind::Coarsened, mid.source};
        break;
    }
  }
  return out;
}

template <int Dim>
Forest<Dim>::Forest(const Domain& domain, int level) : domain_(domain) {
  validate(domain_);
  if (level < 0 || level > domain_.max_level)
    throw ConfigError("initial level must lie in [0, max level]");
  const std::uint32_t per_axis = 1u << level;
  const std::uint32_t size = kRootSize >> level;
  std::size_t count = 1;
  for (int d = 0; d < Dim; ++d) count *= per_axis;
  leaves_.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Leaf<Dim> leaf;
    leaf.level = level;
    std::size_t rest = n;
    for (int d = 0; d < Dim; ++d) {
      leaf.anchor[d] = static_cast<std::uint32_t>(rest % per_axis) * size;
      rest /= per_axis;
    }
    leaves_.push_back(leaf);
  }
  rebuild_keys();
  std::vector<std::size_t> order(leaves_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys_[a] < keys_[b]; });
  std::vector<Leaf<Dim>> sorted;
  sorted.reserve(leaves_.size());
  for (auto k : order) sorted.push_back(leaves_[k]);
  leaves_ = std::move(sorted);
  rebuild_keys();
  balanced_ = true;
}

template <int Dim>
void Forest<Dim>::set_max_level(int level) {
  Domain d = domain_;
  d.max_level = level;
  validate(d);
  if (level < finest_level()) throw ContractViolation("max level below existing leaves");
  domain_ = d;
}

template <int Dim>
void Forest<Dim>::set_min_level(int level) {
  Domain d = domain_;
  d.min_level = level;
  validate(d);
  domain_ = d;
}

template <int Dim>
std::uint64_t Forest<Dim>::encode(const std::array<std::uint32_t, Dim>& a) const {
  if constexpr (Dim == 2) {
    return morton_encode2(a[0], a[1]);
  } else {
    return morton_encode3(a[0], a[1], a[2]);
  }
}

template <int Dim>
void Forest<Dim>::rebuild_keys() {
  keys_.resize(leaves_.size());
  for (std::size_t i = 0; i < leaves_.size(); ++i) keys_[i] = encode(leaves_[i].anchor);
}

template <int Dim>
void Forest<Dim>::reset_topology_caches() {
  table_.reset();
  balanced_ = false;
}

template <int Dim>
Vec<Dim> Forest<Dim>::center(LeafIndex i) const {
  const Leaf<Dim>& leaf = leaves_[i];
  const double unit = domain_.half_width / static_cast<double>(kRootSize);
  Vec<Dim> c;
  const double s = static_cast<double>(leaf.size());
  for (int d = 0; d < Dim; ++d) {
    c[d] = -domain_.half_width + (2.0 * static_cast<double>(leaf.anchor[d]) + s) * unit;
  }
  return c;
}

template <int Dim>
double Forest<Dim>::volume(LeafIndex i) const {
  double v = 1.0;
  const double e = edge(i);
  for (int d = 0; d < Dim; ++d) v *= e;
  return v;
}

template <int Dim>
int Forest<Dim>::finest_level() const {
  int l = 0;
  for (const auto& leaf : leaves_) l = std::max(l, leaf.level);
  return l;
}

template <int Dim>
int Forest<Dim>::coarsest_level() const {
  int l = kMaxDepth;
  for (const auto& leaf : leaves_) l = std::min(l, leaf.level);
  return l;
}

template <int Dim>
std::vector<int> Forest<Dim>::path(LeafIndex i) const {
  const Leaf<Dim>& leaf = leaves_[i];
  std::vector<int> p;
  p.reserve(static_cast<std::size_t>(leaf.level));
  for (int l = 1; l <= leaf.level; ++l) {
    const int bit = kMaxDepth - l;
    int child = 0;
    for (int d = 0; d < Dim; ++d) child |= static_cast<int>((leaf.anchor[d] >> bit) & 1u) << d;
    p.push_back(child);
  }
  return p;
}

template <int Dim>
bool Forest<Dim>::contains(const Vec<Dim>& x) const {
  for (int d = 0; d < Dim; ++d) {
    if (!(x[d] >= -domain_.half_width && x[d] <= domain_.half_width)) return false;
  }
  return true;
}

template <int Dim>
LeafIndex Forest<Dim>::locate_anchor(const std::array<std::uint32_t, Dim>& a) const {
  const std::uint64_t k = encode(a);
  auto it = std::upper_bound(keys_.begin(), keys_.end(), k);
  return static_cast<LeafIndex>((it - keys_.begin()) - 1);
}

template <int Dim>
LeafIndex Forest<Dim>::locate(const Vec<Dim>& x) const {
  if (!contains(x)) throw DomainError("point outside the computational domain");
  std::array<std::uint32_t, Dim> u{};
  const double scale = static_cast<double>(kRootSize) / domain_.root_edge();
  for (int d = 0; d < Dim; ++d) {
    const double t = std::floor((x[d] + domain_.half_width) * scale);
    u[d] = static_cast<std::uint32_t>(std::clamp(t, 0.0, static_cast<double>(kRootSize - 1)));
  }
  return locate_anchor(u);
}

template <int Dim>
bool Forest<Dim>::anchor_in_domain(const std::array<std::int64_t, Dim>& a) const {
  for (int d = 0; d < Dim; ++d) {
    if (a[d] < 0 || a[d] >= static_cast<std::int64_t>(kRootSize)) return false;
  }
  return true;
}

template <int Dim>
bool Forest<Dim>::touches(LeafIndex a, LeafIndex b, Adjacency mode) const {
  if (a == b) return false;
  const Leaf<Dim>& la = leaves_[a];
  const Leaf<Dim>& lb = leaves_[b];
  int touching_axes = 0;
  for (int d = 0; d < Dim; ++d) {
    const std::int64_t lo = std::max<std::int64_t>(la.anchor[d], lb.anchor[d]);
    const std::int64_t hi = std::min<std::int64_t>(std::int64_t{la.anchor[d]} + la.size(),
                                                   std::int64_t{lb.anchor[d]} + lb.size());
    if (lo > hi) return false;
    if (lo == hi) ++touching_axes;
  }
  if (touching_axes == 0) return false;  // overlapping: impossible in a valid tiling
  return mode == Adjacency::Full || touching_axes == 1;
}

template <int Dim>
void Forest<Dim>::collect_neighbors(LeafIndex i, std::vector<LeafIndex>& out) const {
  out.clear();
  const Leaf<Dim>& leaf = leaves_[i];
  const std::int64_t size = leaf.size();
  std::array<int, Dim> dir{};
  for (int code = 0; code < kDirections + 1; ++code) {
    int rest = code;
    bool zero = true;
    for (int d = 0; d < Dim; ++d) {
      dir[d] = rest % 3 - 1;
      rest /= 3;
      zero = zero && dir[d] == 0;
    }
    if (zero) continue;
    std::array<std::int64_t, Dim> region{};
    for (int d = 0; d < Dim; ++d) region[d] = std::int64_t{leaf.anchor[d]} + dir[d] * size;
    if (!anchor_in_domain(region)) continue;
    std::array<std::uint32_t, Dim> ra{};
    for (int d = 0; d < Dim; ++d) ra[d] = static_cast<std::uint32_t>(region[d]);
    const LeafIndex k = locate_anchor(ra);
    if (leaves_[k].level <= leaf.level) {
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
      continue;
    }
    // Region is subdivided: its leaves are a contiguous key range.
    const std::uint64_t lo_key = encode(ra);
    std::uint64_t span_keys = 1;
    for (int d = 0; d < Dim; ++d) span_keys *= static_cast<std::uint64_t>(size);
    auto first = std::lower_bound(keys_.begin(), keys_.end(), lo_key);
    auto last = std::lower_bound(first, keys_.end(), lo_key + span_keys);
    for (auto it = first; it != last; ++it) {
      const auto j = static_cast<LeafIndex>(it - keys_.begin());
      if (touches(i, j, Adjacency::Full)) out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
}

template <int Dim>
void Forest<Dim>::build_neighbor_table() const {
  if (table_) return;
  auto table = std::make_shared<NeighborTable>();
  table->offsets.resize(leaves_.size() + 1);
  table->ids.reserve(leaves_.size() * (Dim == 2 ? 8 : 26));
  std::vector<LeafIndex> scratch;
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    table->offsets[i] = static_cast<std::uint32_t>(table->ids.size());
    collect_neighbors(static_cast<LeafIndex>(i), scratch);
    table->ids.insert(table->ids.end(), scratch.begin(), scratch.end());
  }
  table->offsets[leaves_.size()] = static_cast<std::uint32_t>(table->ids.size());
  table_ = std::move(table);
}

template <int Dim>
std::span<const LeafIndex> Forest<Dim>::neighbors(LeafIndex i) const {
  build_neighbor_table();
  const auto b = table_->offsets[i];
  const auto e = table_->offsets[i + 1];
  return {table_->ids.data() + b, e - b};
}

template <int Dim>
std::vector<LeafIndex> Forest<Dim>::neighbors(LeafIndex i, Adjacency mode) const {
  auto all = neighbors(i);
  std::vector<LeafIndex> out;
  out.reserve(all.size());
  for (auto j : all) {
    if (mode == Adjacency::Full || touches(i, j, Adjacency::Face)) out.push_back(j);
  }
  return out;
}

template <int Dim>
AdaptMap Forest<Dim>::refine(std::span<const LeafIndex> which) {
  std::vector<char> mark(leaves_.size(), 0);
  bool any = false;
  for (auto i : which) {
    if (leaves_[i].level < domain_.max_level) {
      mark[i] = 1;
      any = true;
    }
  }
  AdaptMap map;
  if (!any) {
    map.resize(leaves_.size());
    for (std::size_t i = 0; i < leaves_.size(); ++i)
      map[i] = {LeafOrigin::Kind::Kept, static_cast<LeafIndex>(i)};
    return map;
  }
  std::vector<Leaf<Dim>> next;
  next.reserve(leaves_.size() + which.size() * (kChildren - 1));
  map.reserve(next.capacity());
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    const Leaf<Dim>& leaf = leaves_[i];
    if (!mark[i]) {
      next.push_back(leaf);
      map.push_back({LeafOrigin::Kind::Kept, static_cast<LeafIndex>(i)});
      continue;
    }
    const std::uint32_t half = leaf.size() >> 1;
    for (int c = 0; c < kChildren; ++c) {
      Leaf<Dim> child;
      child.level = leaf.level + 1;
      for (int d = 0; d < Dim; ++d) child.anchor[d] = leaf.anchor[d] + (((c >> d) & 1) ? half : 0u);
      next.push_back(child);
      map.push_back({LeafOrigin::Kind::Refined, static_cast<LeafIndex>(i)});
    }
  }
  leaves_ = std::move(next);
  rebuild_keys();
  reset_topology_caches();
  return map;
}

template <int Dim>
bool Forest<Dim>::is_family(LeafIndex first) const {
  if (first + static_cast<std::size_t>(kChildren) > leaves_.size()) return false;
  const Leaf<Dim>& f = leaves_[first];
  if (f.level == 0) return false;
  const std::uint32_t size = f.size();
  for (int d = 0; d < Dim; ++d) {
    if (f.anchor[d] % (2 * size) != 0) return false;
  }
  for (int c = 1; c < kChildren; ++c) {
    const Leaf<Dim>& l = leaves_[first + c];
    if (l.level != f.level) return false;
    for (int d = 0; d < Dim; ++d) {
      if (l.anchor[d] != f.anchor[d] + (((c >> d) & 1) ? size : 0u)) return false;
    }
  }
  return true;
}

template <int Dim>
AdaptMap Forest<Dim>::coarsen(std::span<const LeafIndex> first_children) {
  std::vector<char> start(leaves_.size(), 0);
  for (auto f : first_children) {
    if (!is_family(f)) throw ContractViolation("coarsen: incomplete sibling family");
    start[f] = 1;
  }
  std::vector<Leaf<Dim>> next;
  next.reserve(leaves_.size());
  AdaptMap map;
  map.reserve(leaves_.size());
  for (std::size_t i = 0; i < leaves_.size();) {
    if (start[i]) {
      Leaf<Dim> parent = leaves_[i];
      parent.level -= 1;
      next.push_back(parent);
      map.push_back({LeafOrigin::Kind::Coarsened, static_cast<LeafIndex>(i)});
      i += kChildren;
    } else {
      next.push_back(leaves_[i]);
      map.push_back({LeafOrigin::Kind::Kept, static_cast<LeafIndex>(i)});
      ++i;
    }
  }
  leaves_ = std::move(next);
  rebuild_keys();
  reset_topology_caches();
  return map;
}

template <int Dim>
bool Forest<Dim>::is_balanced() const {
  std::vector<LeafIndex> nb;
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    collect_neighbors(static_cast<LeafIndex>(i), nb);
    for (auto j : nb) {
      if (std::abs(leaves_[i].level - leaves_[j].level) > 1) return false;
    }
  }
  return true;
}

template <int Dim>
AdaptMap balance_2to1(Forest<Dim>& forest) {
  AdaptMap total(forest.size());
  for (std::size_t i = 0; i < forest.size(); ++i)
    total[i] = {LeafOrigin::Kind::Kept, static_cast<LeafIndex>(i)};

  // A leaf must split when a neighbour is more than one level finer.  Only
  // leaves adjacent to freshly refined cells can become violators, so after
  // the first full scan the candidate set is the set of new children.
  std::vector<LeafIndex> candidates(forest.size());
  std::iota(candidates.begin(), candidates.end(), LeafIndex{0});
  std::vector<LeafIndex> nb;
  std::vector<char> marked;
  while (true) {
    marked.assign(forest.size(), 0);
    std::vector<LeafIndex> to_refine;
    for (auto c : candidates) {
      forest.collect_neighbors(c, nb);
      for (auto k : nb) {
        const int lc = forest.level(c);
        const int lk = forest.level(k);
        const LeafIndex coarse = lk < lc - 1 ? k : (lc < lk - 1 ? c : kNoLeaf);
        if (coarse != kNoLeaf && !marked[coarse]) {
          marked[coarse] = 1;
          to_refine.push_back(coarse);
        }
      }
    }
    if (to_refine.empty()) break;
    std::sort(to_refine.begin(), to_refine.end());
    AdaptMap step = forest.refine(to_refine);
    candidates.clear();
    for (std::size_t i = 0; i < step.size(); ++i) {
      if (step[i].kind == LeafOrigin::Kind::Refined) candidates.push_back(static_cast<LeafIndex>(i));
    }
    total = compose(total, step);
  }
  forest.mark_balanced();
  return total;
}

template <int Dim>
std::vector<double> transfer_field(const Forest<Dim>& updated, const AdaptMap& map,
                                   std::span<const double> old_values,
                                   const SourceEvaluator<Dim>& evaluate) {
  std::vector<double> out(map.size());
  constexpr int kChildren = Forest<Dim>::kChildren;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const LeafOrigin& o = map[i];
    switch (o.kind) {
      case LeafOrigin::Kind::Kept:
        out[i] = old_values[o.source];
        break;
      case LeafOrigin::Kind::Refined:
        out[i] = evaluate(o.source, updated.center(static_cast<LeafIndex>(i)));
        break;
      case LeafOrigin::Kind::Coarsened: {
        // Pairwise sum: exact for equal children.
        double s[kChildren];
        for (int c = 0; c < kChildren; ++c) s[c] = old_values[o.source + c];
        for (int w = kChildren / 2; w >= 1; w /= 2)
          for (int c = 0; c < w; ++c) s[c] = s[2 * c] + s[2 * c + 1];
        out[i] = s[0] / kChildren;
        break;
      }
    }
  }
  return out;
}

template <int Dim>
RefineResult<Dim> refine_leaf(Forest<Dim>& forest, LeafIndex leaf, std::vector<double>& field,
                              const std::function<double(const Vec<Dim>&)>& recon) {
  RefineResult<Dim> result;
  if (forest.level(leaf) >= forest.domain().max_level) {
    result.at_max_level = true;
    return result;
  }
  const LeafIndex ids[] = {leaf};
  AdaptMap map = forest.refine(ids);
  field = transfer_field<Dim>(forest, map, field,
                              [&](LeafIndex, const Vec<Dim>& x) { return recon(x); });
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i].kind == LeafOrigin::Kind::Refined) result.children.push_back(static_cast<LeafIndex>(i));
  }
  return result;
}

template <int Dim>
LeafIndex coarsen_family(Forest<Dim>& forest, LeafIndex first_child, std::vector<double>& field) {
  const LeafIndex ids[] = {first_child};
  AdaptMap map = forest.coarsen(ids);
  field = transfer_field<Dim>(forest, map, field, [](LeafIndex, const Vec<Dim>&) { return 0.0; });
  return first_child;  // the parent takes the first child's slot in Z-order
}

template <int Dim>
AdaptMap balance_2to1(Forest<Dim>& forest, std::vector<double>& field,
                      const std::function<double(const Forest<Dim>& old,
                                                 std::span<const double> old_field,
                                                 LeafIndex source, const Vec<Dim>& x)>& recon) {
  const Forest<Dim> before = forest;
  const std::vector<double> old_field = field;
  AdaptMap map = balance_2to1(forest);
  field = transfer_field<Dim>(forest, map, old_field, [&](LeafIndex src, const Vec<Dim>& x) {
    return recon(before, old_field, src, x);
  });
  return map;
}

#define LSRECON_INSTANTIATE_FOREST(D)                                                         \
  template class Forest<D>;                                                                   \
  template AdaptMap balance_2to1<D>(Forest<D>&);                                              \
  template std::vector<double> transfer_field<D>(const Forest<D>&, const AdaptMap&,          \
                                                 std::span<const double>,                     \
                                                 const SourceEvaluator<D>&);                  \
  template RefineResult<D> refine_leaf<D>(Forest<D>&, LeafIndex, std::vector<double>&,        \
                                          const std::function<double(const Vec<D>&)>&);       \
  template LeafIndex coarsen_family<D>(Forest<D>&, LeafIndex, std::vector<double>&);          \
  template AdaptMap balance_2to1<D>(                                                          \
      Forest<D>&, std::vector<double>&,                                                       \
      const std::function<double(const Forest<D>&, std::span<const double>, LeafIndex,       \
                                 const Vec<D>&)>&);

LSRECON_INSTANTIATE_FOREST(2)
LSRECON_INSTANTIATE_FOREST(3)

}  // namespace lsrecon
