#include <doctest.h>

#include "lsrecon/forest.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace lsrecon;

namespace {

template <int Dim>
Forest<Dim> uniform(double M, int level, int max_level = 8) {
  Domain d;
  d.half_width = M;
  d.max_level = max_level;
  d.min_level = 0;
  return Forest<Dim>(d, level);
}

template <int Dim>
bool brute_force_balanced(const Forest<Dim>& f) {
  for (LeafIndex i = 0; i < f.size(); ++i)
    for (LeafIndex j = i + 1; j < f.size(); ++j)
      if (f.touches(i, j, Adjacency::Full) && std::abs(f.level(i) - f.level(j)) > 1) return false;
  return true;
}

template <int Dim>
double volume_sum(const Forest<Dim>& f) {
  double s = 0.0;
  for (LeafIndex i = 0; i < f.size(); ++i) s += f.volume(i);
  return s;
}

// Refine the leaf containing x repeatedly until it reaches `level`.
template <int Dim>
void deepen(Forest<Dim>& f, const Vec<Dim>& x, int level) {
  while (f.level(f.locate(x)) < level) {
    const LeafIndex id[] = {f.locate(x)};
    f.refine(id);
  }
}

}  // namespace

TEST_CASE("locate on a uniform grid") {
  auto f = uniform<2>(1.2, 2);
  const LeafIndex j = f.locate(Vec<2>(0.01, 0.01));
  CHECK(f.center(j).isApprox(Vec<2>(0.3, 0.3)));
  // x on the internal face x = 0 goes to the non-negative side.
  const LeafIndex k = f.locate(Vec<2>(0.0, 0.1));
  CHECK(f.center(k)[0] > 0.0);
  // Top faces of the domain are closed.
  const LeafIndex top = f.locate(Vec<2>(1.2, 1.2));
  CHECK(f.center(top).isApprox(Vec<2>(0.9, 0.9)));
  CHECK_THROWS_AS(f.locate(Vec<2>(2.4, 0.0)), DomainError);
  CHECK_THROWS_AS(f.locate(Vec<2>(-1.2000001, 0.0)), DomainError);
}

TEST_CASE("tiling: every random point found in exactly one leaf, volumes sum to the box") {
  Forest<2> f2 = uniform<2>(1.3, 2);
  Forest<3> f3 = uniform<3>(1.3, 1);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  for (int k = 0; k < 40; ++k) {
    deepen(f2, Vec<2>(u(rng), u(rng)), 6);
    deepen(f3, Vec<3>(u(rng), u(rng), u(rng)), 5);
  }
  balance_2to1(f2);
  balance_2to1(f3);
  CHECK(std::abs(volume_sum(f2) - std::pow(2.6, 2)) <= 1e-12 * std::pow(2.6, 2));
  CHECK(std::abs(volume_sum(f3) - std::pow(2.6, 3)) <= 1e-12 * std::pow(2.6, 3));
  int bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const Vec<2> x(u(rng), u(rng));
    int hits = 0;
    for (LeafIndex i = 0; i < f2.size(); ++i) {
      const Vec<2> c = f2.center(i);
      const double h = 0.5 * f2.edge(i);
      bool in = true;
      for (int d = 0; d < 2; ++d) in = in && x[d] >= c[d] - h && x[d] < c[d] + h;
      hits += in;
    }
    const LeafIndex j = f2.locate(x);
    const Vec<2> c = f2.center(j);
    const double h = 0.5 * f2.edge(j);
    const bool inside = (x - c).cwiseAbs().maxCoeff() <= h;
    if (hits != 1 || !inside) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("neighbour counts on uniform grids") {
  auto f = uniform<2>(1.2, 3);
  const LeafIndex interior = f.locate(Vec<2>(0.1, 0.1));
  CHECK(f.neighbors(interior).size() == 8);
  CHECK(f.neighbors(interior, Adjacency::Face).size() == 4);
  const LeafIndex corner = f.locate(Vec<2>(-1.19, -1.19));
  CHECK(f.neighbors(corner).size() == 3);
  auto g = uniform<3>(1.2, 2);
  CHECK(g.neighbors(g.locate(Vec<3>(0.1, 0.1, 0.1))).size() == 26);
  CHECK(g.neighbors(g.locate(Vec<3>(0.1, 0.1, 0.1)), Adjacency::Face).size() == 6);
}

TEST_CASE("graded neighbour lists include both half-size leaves across a face") {
  // Level 1 everywhere, then split the east quadrant of the lower row and one
  // of its children again to get three levels.
  auto f = uniform<2>(2.0, 1);
  const LeafIndex se[] = {f.locate(Vec<2>(1.0, -1.0))};
  f.refine(se);
  const LeafIndex west = f.locate(Vec<2>(-1.0, -1.0));
  std::set<LeafIndex> nb;
  for (auto k : f.neighbors(west, Adjacency::Face)) nb.insert(k);
  CHECK(nb.count(f.locate(Vec<2>(0.5, -1.5))) == 1);
  CHECK(nb.count(f.locate(Vec<2>(0.5, -0.5))) == 1);
  CHECK(nb.count(f.locate(Vec<2>(1.5, -1.5))) == 0);
  // The face-only list is a subset of the full list; the NW quadrant is a face neighbour.
  CHECK(nb.count(f.locate(Vec<2>(-1.0, 1.0))) == 1);
  for (LeafIndex i = 0; i < f.size(); ++i) {
    for (auto k : f.neighbors(i)) CHECK(f.touches(i, k, Adjacency::Full));
    // Full list equals brute force.
    std::vector<LeafIndex> brute;
    for (LeafIndex k = 0; k < f.size(); ++k)
      if (k != i && f.touches(i, k, Adjacency::Full)) brute.push_back(k);
    auto got = f.neighbors(i);
    CHECK(std::vector<LeafIndex>(got.begin(), got.end()) == brute);
  }
}

TEST_CASE("neighbour relation is symmetric in both modes") {
  auto f = uniform<3>(1.2, 1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int k = 0; k < 15; ++k) deepen(f, Vec<3>(u(rng), u(rng), u(rng)), 4);
  balance_2to1(f);
  for (auto mode : {Adjacency::Face, Adjacency::Full}) {
    for (LeafIndex i = 0; i < f.size(); ++i) {
      for (auto j : f.neighbors(i, mode)) {
        CHECK(j != i);
        const auto back = f.neighbors(j, mode);
        CHECK(std::find(back.begin(), back.end(), i) != back.end());
      }
    }
  }
}

TEST_CASE("balance: level-5 leaf next to a level-2 region") {
  auto f = uniform<2>(1.2, 2);
  CHECK(f.is_balanced());
  const auto unchanged = f.size();
  balance_2to1(f);
  CHECK(f.size() == unchanged);  // fixed point on a uniform grid

  deepen(f, Vec<2>(0.001, 0.001), 5);
  CHECK_FALSE(brute_force_balanced(f));
  balance_2to1(f);
  CHECK(brute_force_balanced(f));
  CHECK(f.is_balanced());
  const auto once = f.size();
  std::vector<std::uint64_t> keys;
  for (LeafIndex i = 0; i < f.size(); ++i) keys.push_back(f.key(i));
  balance_2to1(f);
  CHECK(f.size() == once);
  for (LeafIndex i = 0; i < f.size(); ++i) CHECK(f.key(i) == keys[i]);
}

TEST_CASE("balance also repairs coarse cells far below a fine cluster (3D)") {
  auto f = uniform<3>(1.2, 1);
  deepen(f, Vec<3>(-1.19, -1.19, -1.19), 6);
  deepen(f, Vec<3>(0.01, 0.6, -0.3), 6);
  balance_2to1(f);
  CHECK(f.is_balanced());
  CHECK(brute_force_balanced(f));
}

TEST_CASE("refine_leaf transfers values through the reconstruction") {
  auto f = uniform<2>(2.0, 2);  // edge 1
  std::vector<double> field(f.size(), 0.0);
  const LeafIndex j = f.locate(Vec<2>(0.5, 0.5));
  const Vec<2> xc = f.center(j);
  const double dx = f.edge(j);
  CHECK(dx == 1.0);
  auto recon = [&](const Vec<2>& x) { return 1.0 * (x[0] - xc[0]) / dx; };  // c = (0, 1, 0)
  auto result = refine_leaf<2>(f, j, field, recon);
  REQUIRE(result.children.size() == 4);
  std::vector<std::pair<double, double>> byx;
  for (auto c : result.children) byx.push_back({f.center(c)[0], field[c]});
  CHECK(field[result.children[0]] == doctest::Approx(-0.25));
  CHECK(field[result.children[1]] == doctest::Approx(0.25));
  CHECK(field[result.children[2]] == doctest::Approx(-0.25));
  CHECK(field[result.children[3]] == doctest::Approx(0.25));
  for (auto [x, v] : byx) CHECK(v == doctest::Approx(x - xc[0]));
  CHECK(field.size() == 16 + 3);

  // At max level the request is ignored.
  Domain d;
  d.half_width = 1.2;
  d.max_level = 2;
  d.min_level = 0;
  Forest<2> g(d, 2);
  std::vector<double> gf(g.size(), 1.0);
  auto r = refine_leaf<2>(g, 0, gf, recon);
  CHECK(r.at_max_level);
  CHECK(g.size() == 16);
}

TEST_CASE("coarsen_family averages children and rejects partial families") {
  auto f = uniform<2>(1.2, 2);
  const LeafIndex id[] = {f.locate(Vec<2>(0.1, 0.1))};
  f.refine(id);
  const LeafIndex first = f.locate(Vec<2>(0.01, 0.01));
  REQUIRE(f.is_family(first));
  std::vector<double> field(f.size(), 7.0);
  for (int c = 0; c < 4; ++c) field[first + c] = 1.0 + c;
  Vec<2> mean = Vec<2>::Zero();
  for (int c = 0; c < 4; ++c) mean += f.center(first + c) / 4.0;
  const LeafIndex parent = coarsen_family<2>(f, first, field);
  CHECK(field[parent] == 2.5);
  CHECK(f.center(parent).isApprox(mean));
  CHECK(f.size() == 16);
  CHECK(field.size() == 16);
  CHECK_THROWS_AS(coarsen_family<2>(f, parent + 1, field), ContractViolation);
  CHECK_THROWS_AS(coarsen_family<2>(f, f.locate(Vec<2>(0.7, 0.1)), field), ContractViolation);
}

TEST_CASE("refine/coarsen round trip is exact on linear fields") {
  auto f = uniform<3>(1.2, 2);
  auto lin = [](const Vec<3>& x) { return 0.3 * x[0] - 1.7 * x[1] + 0.25 * x[2] + 0.125; };
  std::vector<double> field(f.size());
  for (LeafIndex i = 0; i < f.size(); ++i) field[i] = lin(f.center(i));
  const LeafIndex j = f.locate(Vec<3>(0.2, -0.4, 0.7));
  const double before = field[j];
  auto r = refine_leaf<3>(f, j, field, lin);
  for (auto c : r.children) CHECK(field[c] == doctest::Approx(lin(f.center(c))).epsilon(1e-15));
  const LeafIndex p = coarsen_family<3>(f, r.children.front(), field);
  CHECK(std::abs(field[p] - before) <= 1e-15);
  // Constant field.
  std::vector<double> cst(f.size(), 0.45);
  auto rc = refine_leaf<3>(f, 5, cst, [](const Vec<3>&) { return 0.45; });
  for (auto c : rc.children) CHECK(cst[c] == 0.45);
  CHECK(cst[coarsen_family<3>(f, rc.children.front(), cst)] == 0.45);
}

TEST_CASE("leaf geometry invariants") {
  auto f = uniform<2>(1.2, 1);
  deepen(f, Vec<2>(0.3, -0.2), 4);
  for (LeafIndex i = 0; i < f.size(); ++i) {
    CHECK(f.edge(i) == doctest::Approx(2.4 / (1 << f.level(i))));
    CHECK(f.center(i).cwiseAbs().maxCoeff() < 1.2);
    CHECK(static_cast<int>(f.path(i).size()) == f.level(i));
  }
}
