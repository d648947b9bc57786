#include <doctest.h>

#include "lsrecon/propagation.hpp"

#include <random>

using namespace lsrecon;

namespace {

template <int Dim>
Forest<Dim> build(double M, int base, int fine, std::uint64_t seed) {
  Domain d;
  d.half_width = M;
  d.max_level = fine;
  d.min_level = 0;
  Forest<Dim> f(d, base);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-M, M);
  for (int k = 0; k < 5; ++k) {
    Vec<Dim> x;
    for (int a = 0; a < Dim; ++a) x[a] = u(rng);
    while (f.level(f.locate(x)) < fine) {
      const LeafIndex id[] = {f.locate(x)};
      f.refine(id);
    }
  }
  balance_2to1(f);
  return f;
}

template <int Dim>
PointCloud<Dim> cloud_of(std::vector<Vec<Dim>> pts) {
  PointCloud<Dim> c;
  c.points = std::move(pts);
  return c;
}

}  // namespace

TEST_CASE("exact initialisation") {
  Domain d;
  d.half_width = 1.2;
  d.max_level = 4;
  d.min_level = 0;
  Forest<2> f(d, 3);
  const LeafIndex j = f.locate(Vec<2>(0.1, 0.1));
  const Vec<2> c = f.center(j);
  auto cloud = cloud_of<2>({c, c + Vec<2>(0.1, 0.0), c + Vec<2>(0.0, -0.03)});
  auto s = init_distance_exact(f, bin_points(cloud, f), cloud);
  CHECK(s.value[j] == 0.0);
  CHECK(s.reference[j] == c);
  CHECK(s.frontier.size() == 1);
  CHECK(s.value[0] == kInf);

  auto two = cloud_of<2>({c + Vec<2>(0.1, 0.0), c + Vec<2>(0.0, 0.03)});
  auto t = init_distance_exact(f, bin_points(two, f), two);
  CHECK(t.value[j] == doctest::Approx(0.03));
  PointCloud<2> none;
  CHECK_THROWS_AS(init_distance_exact(f, bin_points(none, f), none), ContractViolation);
}

TEST_CASE("single point: exact distance everywhere; first sweep reaches only the closure") {
  auto f = build<2>(1.2, 3, 6, 1);
  auto cloud = cloud_of<2>({Vec<2>(0.31, -0.47)});
  auto s = init_distance_exact(f, bin_points(cloud, f), cloud);
  const LeafIndex seed = s.frontier[0];
  CHECK(propagate(s, f, 1, 1) == 1);
  const auto nb = f.neighbors(seed);
  for (LeafIndex i = 0; i < f.size(); ++i) {
    const bool near = i == seed || std::find(nb.begin(), nb.end(), i) != nb.end();
    CHECK(std::isfinite(s.value[i]) == near);
  }
  propagate(s, f);
  for (LeafIndex i = 0; i < f.size(); ++i) CHECK(s.value[i] == (f.center(i) - cloud.points[0]).norm());
}

TEST_CASE("random clouds against brute force") {
  int trial = 0;
  for (std::uint64_t seed : {2u, 3u, 5u}) {
    auto f = build<2>(1.2, 4, 7, seed);
    std::mt19937_64 rng(seed * 17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec<2>> pts;
    for (int k = 0; k < 40; ++k) pts.emplace_back(u(rng), u(rng));
    // Points sit in finest leaves, as they do once the band has reached the data.
    for (const auto& q : pts) {
      while (f.level(f.locate(q)) < 7) {
        const LeafIndex id[] = {f.locate(q)};
        f.refine(id);
      }
    }
    balance_2to1(f);
    auto cloud = cloud_of<2>(pts);
    auto s = init_distance_exact(f, bin_points(cloud, f), cloud);
    std::vector<double> previous = s.value;
    while (!s.frontier.empty()) {
      propagate(s, f, 1, 1);
      for (LeafIndex i = 0; i < f.size(); ++i) CHECK(s.value[i] <= previous[i]);  // monotone
      previous = s.value;
    }
    const double dxmin = f.domain().edge(f.finest_level());
    std::size_t exact = 0;
    for (LeafIndex i = 0; i < f.size(); ++i) {
      double best = kInf;
      for (const auto& q : pts) best = std::min(best, (f.center(i) - q).norm());
      CHECK(s.value[i] >= best);
      CHECK(s.value[i] - best <= dxmin);
      exact += s.value[i] == best;
    }
    CHECK(exact >= 0.99 * f.size());
    ++trial;
  }
  CHECK(trial == 3);
}

TEST_CASE("3D propagation and the sweep bound") {
  auto f = build<3>(1.2, 3, 5, 9);
  auto cloud = cloud_of<3>({Vec<3>(0.1, 0.2, 0.3), Vec<3>(-0.5, 0.4, -0.2)});
  auto s = init_distance_exact(f, bin_points(cloud, f), cloud);
  const int sweeps = propagate(s, f);
  CHECK(sweeps <= 2 * (1 << 5));
  for (LeafIndex i = 0; i < f.size(); ++i) {
    const double best = std::min((f.center(i) - cloud.points[0]).norm(), (f.center(i) - cloud.points[1]).norm());
    CHECK(std::isfinite(s.value[i]));
    CHECK(s.value[i] >= best);
  }
}

TEST_CASE("signed mode keeps frozen values bit-exact and signs intact") {
  auto f = build<2>(1.2, 4, 6, 4);
  const double r = 0.55;
  PropagationState<2> s;
  s.mode = PropagationMode::Signed;
  s.value.resize(f.size());
  s.reference.assign(f.size(), Vec<2>::Zero());
  s.frozen.assign(f.size(), 0);
  std::vector<double> sign_source(f.size());
  for (LeafIndex i = 0; i < f.size(); ++i) {
    const Vec<2> x = f.center(i);
    const double phi = x.norm() - r;
    sign_source[i] = phi;
    if (std::abs(phi) < f.edge(i)) {
      s.value[i] = phi + 1e-3;  // deliberately inexact seeds
      s.reference[i] = x * (r / x.norm());
      s.frozen[i] = 1;
      s.frontier.push_back(i);
    } else {
      s.value[i] = std::copysign(kInf, phi);
    }
  }
  const auto before = s.value;
  propagate(s, f);
  for (LeafIndex i = 0; i < f.size(); ++i) {
    if (s.frozen[i]) {
      CHECK(s.value[i] == before[i]);
    } else {
      CHECK(std::isfinite(s.value[i]));
      CHECK(std::signbit(s.value[i]) == std::signbit(sign_source[i]));
      CHECK(std::abs(std::abs(s.value[i]) - std::abs(sign_source[i])) < 0.05);
    }
  }
}

TEST_CASE("region mask limits the fill") {
  auto f = build<2>(1.2, 4, 4, 4);
  auto cloud = cloud_of<2>({Vec<2>(0.01, 0.01)});
  auto s = init_distance_exact(f, bin_points(cloud, f), cloud);
  s.region.assign(f.size(), 0);
  for (LeafIndex i = 0; i < f.size(); ++i) s.region[i] = f.center(i).norm() < 0.5;
  propagate(s, f);
  for (LeafIndex i = 0; i < f.size(); ++i) {
    if (f.center(i).norm() >= 0.5) CHECK(s.value[i] == kInf);
    else CHECK(std::isfinite(s.value[i]));
  }
}
