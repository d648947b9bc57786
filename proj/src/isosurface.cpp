#include "lsrecon/isosurface.hpp"

#include "lsrecon/parallel.hpp"
#include "mc_tables.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <unordered_map>

namespace lsrecon {

template <int Dim>
SampleGrid<Dim> resample(const Forest<Dim>& forest, std::span<const double> phi,
                         Reconstruction op, double gamma, int margin, int workers) {
  if (phi.size() != forest.size()) throw ContractViolation("field does not match the forest");
  const Domain& dom = forest.domain();
  const double h = dom.min_edge();
  const long cells = 1L << dom.max_level;

  std::vector<LeafIndex> band;
  std::array<long, Dim> lo, hi;
  lo.fill(cells);
  hi.fill(-1);
  for (LeafIndex j = 0; j < forest.size(); ++j) {
    if (!(std::abs(phi[j]) < gamma)) continue;
    band.push_back(j);
    const Vec<Dim> c = forest.center(j);
    const double half = 0.5 * forest.edge(j);
    for (int d = 0; d < Dim; ++d) {
      lo[d] = std::min(lo[d], std::lround(std::floor((c[d] - half + dom.half_width) / h)));
      hi[d] = std::max(hi[d], std::lround(std::ceil((c[d] + half + dom.half_width) / h)) - 1);
    }
  }
  if (band.empty()) throw NumericalFailure("no band to extract a surface from");

  SampleGrid<Dim> g;
  g.h = h;
  std::size_t total = 1;
  for (int d = 0; d < Dim; ++d) {
    lo[d] = std::max(0L, lo[d] - margin);
    hi[d] = std::min(cells - 1, hi[d] + margin);
    g.n[d] = static_cast<int>(hi[d] - lo[d] + 1);
    g.origin[d] = -dom.half_width + (static_cast<double>(lo[d]) + 0.5) * h;
    total *= static_cast<std::size_t>(g.n[d]);
  }

  PolynomialField<Dim> recon(forest, phi, op);
  recon.precompute(band, workers);
  g.value.resize(total);
  parallel_for(total, workers, [&](std::size_t k) {
    std::array<int, Dim> i;
    std::size_t r = k;
    for (int d = 0; d < Dim; ++d) {
      i[d] = static_cast<int>(r % g.n[d]);
      r /= g.n[d];
    }
    const Vec<Dim> x = g.node(i);
    const LeafIndex j = forest.locate(x);
    const auto* poly = recon.cached(j);
    g.value[k] = poly ? poly->evaluate(x) : phi[j];
  });
  return g;
}

namespace {

template <int Dim>
Vec<Dim> crossing(const SampleGrid<Dim>& g, const std::array<int, Dim>& a, int axis) {
  std::array<int, Dim> b = a;
  ++b[axis];
  const double va = g.value[g.id(a)], vb = g.value[g.id(b)];
  const double t = va / (va - vb);
  Vec<Dim> x = g.node(a);
  x[axis] += t * g.h;
  return x;
}

}  // namespace

Contour marching_squares(const SampleGrid<2>& g) {
  std::unordered_map<std::uint64_t, int> index;
  std::vector<Vec<2>> verts;
  // Edge e of cell (i, j): 0 bottom, 1 right, 2 top, 3 left.
  auto vertex = [&](int i, int j, int e) {
    std::array<int, 2> a{i, j};
    int axis = 0;
    if (e == 1) a = {i + 1, j}, axis = 1;
    else if (e == 2) a = {i, j + 1}, axis = 0;
    else if (e == 3) axis = 1;
    const std::uint64_t key = 2 * static_cast<std::uint64_t>(g.id(a)) + axis;
    auto [it, fresh] = index.try_emplace(key, static_cast<int>(verts.size()));
    if (fresh) verts.push_back(crossing<2>(g, a, axis));
    return it->second;
  };
  static constexpr int kAround[4][2] = {{3, 0}, {0, 1}, {1, 2}, {2, 3}};

  std::vector<std::array<int, 2>> segs;
  for (int j = 0; j + 1 < g.n[1]; ++j) {
    for (int i = 0; i + 1 < g.n[0]; ++i) {
      const double v[4] = {g.value[g.id({i, j})], g.value[g.id({i + 1, j})],
                           g.value[g.id({i + 1, j + 1})], g.value[g.id({i, j + 1})]};
      int code = 0;
      for (int c = 0; c < 4; ++c)
        if (v[c] < 0.0) code |= 1 << c;
      if (code == 0 || code == 15) continue;
      auto cut_corner = [&](int c) {
        segs.push_back({vertex(i, j, kAround[c][0]), vertex(i, j, kAround[c][1])});
      };
      if (code == 5 || code == 10) {
        const bool centre_in = (v[0] + v[1] + v[2] + v[3]) < 0.0;
        // Cut off the corners whose sign differs from the centre.
        const bool odd_in = code == 10;
        if (centre_in == odd_in) {
          cut_corner(0);
          cut_corner(2);
        } else {
          cut_corner(1);
          cut_corner(3);
        }
        continue;
      }
      // One corner differs from the other three, or two adjacent corners do.
      const int minority = __builtin_popcount(code) <= 2 ? code : (~code & 15);
      if (__builtin_popcount(minority) == 1) {
        cut_corner(__builtin_ctz(minority));
      } else {
        // Two adjacent corners: the segment joins the two edges leaving the pair.
        int a = __builtin_ctz(minority);
        int b = 31 - __builtin_clz(minority);
        if (a == 0 && b == 3) std::swap(a, b);
        segs.push_back({vertex(i, j, kAround[a][0]), vertex(i, j, kAround[b][1])});
      }
    }
  }

  std::vector<std::vector<int>> adj(verts.size());
  for (std::size_t s = 0; s < segs.size(); ++s) {
    adj[segs[s][0]].push_back(static_cast<int>(s));
    adj[segs[s][1]].push_back(static_cast<int>(s));
  }
  std::vector<char> used(segs.size(), 0);
  Contour out;
  auto walk = [&](int start_seg, int start_vertex) {
    std::vector<Vec<2>> line{verts[start_vertex]};
    int seg = start_seg, at = start_vertex;
    bool closed = false;
    while (seg >= 0) {
      used[seg] = 1;
      at = segs[seg][0] == at ? segs[seg][1] : segs[seg][0];
      if (at == start_vertex) {
        closed = true;
        break;
      }
      line.push_back(verts[at]);
      seg = -1;
      for (int s : adj[at])
        if (!used[s]) {
          seg = s;
          break;
        }
    }
    out.lines.push_back(std::move(line));
    out.closed.push_back(closed);
  };
  // Open lines first (ends have one segment), then loops.
  for (std::size_t v = 0; v < verts.size(); ++v)
    if (adj[v].size() == 1 && !used[adj[v][0]]) walk(adj[v][0], static_cast<int>(v));
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (!used[s]) walk(static_cast<int>(s), segs[s][0]);
  return out;
}

Mesh marching_cubes(const SampleGrid<3>& g) {
  Mesh mesh;
  std::unordered_map<std::uint64_t, int> index;
  for (int k = 0; k + 1 < g.n[2]; ++k) {
    for (int j = 0; j + 1 < g.n[1]; ++j) {
      for (int i = 0; i + 1 < g.n[0]; ++i) {
        int code = 0;
        for (int c = 0; c < 8; ++c) {
          const std::array<int, 3> p{i + mc::kCorner[c][0], j + mc::kCorner[c][1],
                                     k + mc::kCorner[c][2]};
          if (g.value[g.id(p)] < 0.0) code |= 1 << c;
        }
        if (mc::kEdgeTable[code] == 0) continue;
        int vid[12];
        for (int e = 0; e < 12; ++e) {
          if (!(mc::kEdgeTable[code] & (1 << e))) continue;
          const int* ca = mc::kCorner[mc::kEdgeCorners[e][0]];
          const int* cb = mc::kCorner[mc::kEdgeCorners[e][1]];
          std::array<int, 3> a{i + std::min(ca[0], cb[0]), j + std::min(ca[1], cb[1]),
                               k + std::min(ca[2], cb[2])};
          int axis = 0;
          while (ca[axis] == cb[axis]) ++axis;
          const std::uint64_t key = 3 * static_cast<std::uint64_t>(g.id(a)) + axis;
          auto [it, fresh] = index.try_emplace(key, static_cast<int>(mesh.vertices.size()));
          if (fresh) mesh.vertices.push_back(crossing<3>(g, a, axis));
          vid[e] = it->second;
        }
        for (int t = 0; mc::kTriTable[code][t] != -1; t += 3)
          mesh.triangles.push_back({vid[mc::kTriTable[code][t]], vid[mc::kTriTable[code][t + 1]],
                                    vid[mc::kTriTable[code][t + 2]]});
      }
    }
  }
  return mesh;
}

MeshCheck check_mesh(const Mesh& mesh) {
  MeshCheck out;
  std::unordered_map<std::uint64_t, int> count;
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const auto a = static_cast<std::uint64_t>(std::min(t[e], t[(e + 1) % 3]));
      const auto b = static_cast<std::uint64_t>(std::max(t[e], t[(e + 1) % 3]));
      ++count[(a << 32) | b];
      parent[find(t[e])] = find(t[(e + 1) % 3]);
    }
  }
  out.edges = count.size();
  for (const auto& [key, c] : count) {
    if (c == 1) ++out.boundary_edges;
    else if (c > 2) ++out.nonmanifold_edges;
  }
  std::vector<char> used(mesh.vertices.size(), 0);
  for (const auto& t : mesh.triangles)
    for (int v : t) used[v] = 1;
  std::vector<char> root(mesh.vertices.size(), 0);
  for (std::size_t v = 0; v < used.size(); ++v)
    if (used[v]) root[find(static_cast<int>(v))] = 1;
  out.components = static_cast<std::size_t>(std::count(root.begin(), root.end(), 1));
  return out;
}

void write_obj(const std::string& path, const Mesh& mesh, const CloudTransform<3>& transform) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(10);
  for (const auto& v : mesh.vertices) {
    const Vec<3> x = transform.to_original(v);
    out << "v " << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
  }
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw IoError("failed writing " + path);
}

void write_contour_csv(const std::string& path, const Contour& contour,
                       const CloudTransform<2>& transform) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(10) << "x,y\n";
  for (std::size_t l = 0; l < contour.lines.size(); ++l) {
    if (l > 0) out << '\n';
    for (const auto& p : contour.lines[l]) {
      const Vec<2> x = transform.to_original(p);
      out << x[0] << ',' << x[1] << '\n';
    }
    if (contour.closed[l] && !contour.lines[l].empty()) {
      const Vec<2> x = transform.to_original(contour.lines[l].front());
      out << x[0] << ',' << x[1] << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

template SampleGrid<2> resample<2>(const Forest<2>&, std::span<const double>, Reconstruction,
                                   double, int, int);
template SampleGrid<3> resample<3>(const Forest<3>&, std::span<const double>, Reconstruction,
                                   double, int, int);

}  // namespace lsrecon
