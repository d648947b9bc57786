#include <doctest.h>

#include "lsrecon/sl_solver.hpp"

#include <cmath>
#include <functional>

using namespace lsrecon;

namespace {

template <int Dim>
Forest<Dim> uniform(double M, int level) {
  Domain d;
  d.half_width = M;
  d.max_level = 10;
  d.min_level = 0;
  return Forest<Dim>(d, level);
}

template <int Dim>
std::vector<double> sample(const Forest<Dim>& f, const std::function<double(const Vec<Dim>&)>& g) {
  std::vector<double> v(f.size());
  for (LeafIndex i = 0; i < f.size(); ++i) v[i] = g(f.center(i));
  return v;
}

template <int Dim>
bool interior(const Forest<Dim>& f, LeafIndex i, double margin) {
  return f.center(i).cwiseAbs().maxCoeff() + margin < f.domain().half_width;
}

}  // namespace

TEST_CASE("band constants and cutoff") {
  const double dx = 0.1;
  const auto b = BandConstants::from(1.5 * dx, dx);
  CHECK(b.lambda == doctest::Approx(1.5));
  CHECK(b.beta == doctest::Approx(0.3));
  CHECK(b.gamma == doctest::Approx(0.6));
  CHECK(cutoff(0.0, b.beta, b.gamma) == 1.0);
  CHECK(cutoff(b.beta, b.beta, b.gamma) == 1.0);
  CHECK(cutoff(-b.beta, b.beta, b.gamma) == 1.0);
  CHECK(cutoff(b.gamma, b.beta, b.gamma) == doctest::Approx(0.0));
  CHECK(cutoff(2.0 * b.gamma, b.beta, b.gamma) == 0.0);
  CHECK(cutoff(0.5 * (b.beta + b.gamma), b.beta, b.gamma) == doctest::Approx(0.5));
  CHECK(cutoff(-0.5 * (b.beta + b.gamma), b.beta, b.gamma) == doctest::Approx(0.5));
  // Monotone and flat at both ends.
  double prev = 1.0;
  for (int k = 0; k <= 100; ++k) {
    const double a = b.beta + (b.gamma - b.beta) * k / 100.0;
    const double c = cutoff(a, b.beta, b.gamma);
    CHECK(c <= prev + 1e-15);
    prev = c;
  }
  const double e = 1e-6;
  CHECK((1.0 - cutoff(b.beta + e, b.beta, b.gamma)) / e < 1e-3);
  CHECK(cutoff(b.gamma - e, b.beta, b.gamma) / e < 1e-3);
}

TEST_CASE("cut clamps to the band") {
  std::vector<double> v{-5.0, -0.1, 0.0, 0.2, 7.0};
  cut(v, 0.5);
  CHECK(v == std::vector<double>{-0.5, -0.1, 0.0, 0.2, 0.5});
}

TEST_CASE("energy examples") {
  const std::vector<double> d{0.1, 0.3, 0.2};
  const std::vector<LeafIndex> one{0};
  CHECK(compute_energy<2>(one, d, 0.25, 2) == doctest::Approx(0.05));
  const std::vector<LeafIndex> all{0, 1, 2};
  CHECK(compute_energy<2>(all, d, 0.25, 1) == doctest::Approx(0.6 * 0.25));
  CHECK(compute_energy<3>(all, d, 0.5, 2) == doctest::Approx(std::sqrt(0.14 * 0.25)));
  CHECK_THROWS_AS(compute_energy<2>(std::vector<LeafIndex>{}, d, 0.25, 2), NumericalFailure);
}

TEST_CASE("tangent frames") {
  const Vec<2> g2(3.0, 4.0);
  const Vec<2> s = tangent_frame(g2);
  CHECK(s[0] == doctest::Approx(0.8));
  CHECK(s[1] == doctest::Approx(-0.6));
  CHECK_THROWS_AS(tangent_frame(Vec<2>(Vec<2>::Zero())), ContractViolation);

  const Vec<3> g(1.0, 1.0, 1.0);
  const auto [a, b] = tangent_frame(g);
  CHECK(a[0] == doctest::Approx(0.0));
  CHECK(a[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(a[2] == doctest::Approx(-1.0 / std::sqrt(2.0)));
  for (const Vec<3>& h : {Vec<3>(0.2, -3.0, 0.5), Vec<3>(1e-3, 2.0, -7.0), Vec<3>(0, 0, 1)}) {
    const auto [u, w] = tangent_frame(h);
    CHECK(u.norm() == doctest::Approx(1.0));
    CHECK(w.norm() == doctest::Approx(1.0));
    CHECK(std::abs(u.dot(w)) < 1e-14);
    CHECK(std::abs(u.dot(h)) < 1e-13);
    CHECK(std::abs(w.dot(h)) < 1e-13);
  }
}

TEST_CASE("effective velocity switches only in cavities") {
  SolverParams p;
  p.dt = 0.1;
  const double dx = 0.1;
  const Vec<2> gd(0.5, 0.0), gp(0.0, 1.0);
  bool sw = true;
  CHECK(effective_velocity<2>(0.5, gd, gp, p, dx, &sw) == gd);
  CHECK_FALSE(sw);
  p.cavity_mode = true;
  CHECK(effective_velocity<2>(0.5, gd, gp, p, dx, &sw) == gp);
  CHECK(sw);
  CHECK(effective_velocity<2>(0.3, gd, gp, p, dx, &sw) == gd);
  CHECK_FALSE(sw);
  CHECK(effective_velocity<2>(0.5, Vec<2>(0.95, 0.0), gp, p, dx, &sw) == Vec<2>(0.95, 0.0));
  CHECK_FALSE(sw);
}

TEST_CASE("band selection matches a brute-force dilation") {
  auto f = uniform<2>(1.6, 5);
  const double dx = f.edge(0);
  const auto bc = BandConstants::from(1.5 * dx, dx);
  const auto phi = sample<2>(f, [](const Vec<2>& x) { return x.norm() - 0.5; });
  const auto band = select_band<2>(f, phi, bc);
  for (LeafIndex i = 0; i < f.size(); ++i) {
    CHECK(bool(band.in_active[i]) == (std::abs(phi[i]) < bc.gamma));
    bool near = false;
    for (auto j : band.active)
      near = near || (f.center(i) - f.center(j)).cwiseAbs().maxCoeff() < 3.5 * dx;
    CHECK(bool(band.in_reinit[i]) == near);
  }
  CHECK(std::is_sorted(band.reinit.begin(), band.reinit.end()));
}

TEST_CASE("affine data is advected exactly") {
  auto f = uniform<2>(1.6, 5);
  const double dx = f.edge(0);
  const Vec<2> a(0.6, -0.8);
  const auto phi = sample<2>(f, [&](const Vec<2>& x) { return a.dot(x) - 0.1; });
  SolverParams p;
  p.dt = 1.5 * dx;
  p.mu = 0.05;
  const auto bc = BandConstants::from(p.dt, dx);
  const auto band = select_band<2>(f, phi, bc);
  const std::vector<double> d(f.size(), 0.2);
  const std::vector<Vec<2>> gd(f.size(), Vec<2>(0.3, 0.4));
  PolynomialField<2> recon(f, phi, Reconstruction::P1);
  StepStats st;
  const auto next = sl_step<2>(recon, d, gd, band, 0.0, p, &st);
  CHECK(st.updated == band.active.size());
  CHECK(st.fallback == 0);
  int checked = 0;
  for (auto j : band.active) {
    if (!interior(f, j, 4.0 * dx)) continue;
    const double expected = phi[j] + cutoff(phi[j], bc.beta, bc.gamma) * p.dt * a.dot(gd[j]);
    CHECK(next[j] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
    ++checked;
  }
  CHECK(checked > 20);
  for (LeafIndex i = 0; i < f.size(); ++i)
    if (!band.in_active[i]) CHECK(next[i] == phi[i]);
}

TEST_CASE("degenerate gradient falls back to the neighbour mean") {
  auto f = uniform<2>(1.6, 4);
  const LeafIndex j = f.locate(Vec<2>(0.01, 0.01));
  const Vec<2> c = f.center(j);
  const auto phi = sample<2>(f, [&](const Vec<2>& x) { return 1e-2 * (x - c).squaredNorm(); });
  SolverParams p;
  p.dt = 1.5 * f.edge(0);
  const auto bc = BandConstants::from(p.dt, f.edge(0));
  const auto band = select_band<2>(f, phi, bc);
  const std::vector<double> d(f.size(), 0.2);
  const std::vector<Vec<2>> gd(f.size(), Vec<2>(1.0, 0.0));
  PolynomialField<2> recon(f, phi, Reconstruction::P1);
  StepStats st;
  const auto next = sl_step<2>(recon, d, gd, band, 0.0, p, &st);
  CHECK(st.fallback >= 1);
  double mean = 0.0;
  for (auto i : f.neighbors(j)) mean += phi[i];
  mean /= static_cast<double>(f.neighbors(j).size());
  CHECK(next[j] == doctest::Approx(mean));
}

TEST_CASE("feet leaving the domain are clamped and counted") {
  auto f = uniform<2>(1.6, 4);
  const auto phi = sample<2>(f, [](const Vec<2>& x) { return 0.1 * x[0]; });
  SolverParams p;
  p.dt = 1.5 * f.edge(0);
  p.mu = 0.0;
  const auto bc = BandConstants::from(p.dt, f.edge(0));
  const auto band = select_band<2>(f, phi, bc);
  const std::vector<double> d(f.size(), 0.2);
  const std::vector<Vec<2>> gd(f.size(), Vec<2>(0.0, 1.0));
  PolynomialField<2> recon(f, phi, Reconstruction::P1);
  StepStats st;
  const auto next = sl_step<2>(recon, d, gd, band, 0.0, p, &st);
  CHECK(st.clamped_feet > 0);
  for (auto j : band.active) CHECK(next[j] == doctest::Approx(phi[j]));
}

TEST_CASE("energy is required for p > 1") {
  auto f = uniform<2>(1.6, 3);
  const auto phi = sample<2>(f, [](const Vec<2>& x) { return x[0]; });
  SolverParams p;
  p.dt = 0.1;
  p.p = 2;
  const auto band = select_band<2>(f, phi, BandConstants::from(0.1, f.edge(0)));
  const std::vector<double> d(f.size(), 0.2);
  const std::vector<Vec<2>> gd(f.size(), Vec<2>::Zero());
  PolynomialField<2> recon(f, phi, Reconstruction::P1);
  CHECK_THROWS_AS(sl_step<2>(recon, d, gd, band, -1.0, p), ContractViolation);
  SolverParams bad = p;
  bad.dt = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

// With zero velocity the step is a tangential average, which is curvature flow
// with normal speed mu*d*kappa: R^2 shrinks by 2 mu d dt per step in 2D and by
// 4 mu d dt in 3D.
TEST_CASE("tangential averaging shrinks circles and spheres") {
  const double R0 = 0.5, d0 = 0.1;
  SUBCASE("2D") {
    auto f = uniform<2>(1.6, 6);
    const double dx = f.edge(0);
    auto phi = sample<2>(f, [&](const Vec<2>& x) { return x.norm() - R0; });
    SolverParams p;
    p.dt = 1.5 * dx;
    p.mu = 1.0;
    p.op = Reconstruction::Cweno;
    const auto bc = BandConstants::from(p.dt, dx);
    const auto band = select_band<2>(f, phi, bc);
    const std::vector<double> d(f.size(), d0);
    const std::vector<Vec<2>> gd(f.size(), Vec<2>::Zero());
    PolynomialField<2> recon(f, phi, Reconstruction::Cweno);
    const auto next = sl_step<2>(recon, d, gd, band, 0.0, p);
    const double h2 = 2.0 * p.mu * d0 * p.dt;
    double worst = 0.0;
    for (auto j : band.active) {
      if (std::abs(phi[j]) > bc.beta) continue;
      worst = std::max(worst, std::abs(next[j] - (std::sqrt(f.center(j).squaredNorm() + h2) - R0)));
    }
    CHECK(worst < 2e-3 * dx);
  }
  SUBCASE("3D") {
    auto f = uniform<3>(1.6, 5);
    const double dx = f.edge(0);
    auto phi = sample<3>(f, [&](const Vec<3>& x) { return x.norm() - R0; });
    SolverParams p;
    p.dt = 1.5 * dx;
    p.mu = 1.0;
    p.op = Reconstruction::Cweno;
    const auto bc = BandConstants::from(p.dt, dx);
    const auto band = select_band<3>(f, phi, bc);
    const std::vector<double> d(f.size(), d0);
    const std::vector<Vec<3>> gd(f.size(), Vec<3>::Zero());
    PolynomialField<3> recon(f, phi, Reconstruction::Cweno);
    const auto next = sl_step<3>(recon, d, gd, band, 0.0, p);
    const double h2 = 2.0 * p.mu * d0 * p.dt;
    double worst = 0.0;
    for (auto j : band.active) {
      if (std::abs(phi[j]) > bc.beta) continue;
      const double expected = std::sqrt(f.center(j).squaredNorm() + 2.0 * h2) - R0;
      worst = std::max(worst, std::abs(next[j] - expected));
    }
    CHECK(worst < 2e-2 * dx);
  }
}
