#include <doctest.h>

#include "lsrecon/recon.hpp"

#include <cmath>
#include <functional>
#include <random>

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
Forest<Dim> graded(double M, int base, int fine, std::uint64_t seed) {
  auto f = uniform<Dim>(M, base);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.6 * M, 0.6 * M);
  for (int k = 0; k < 6; ++k) {
    Vec<Dim> x;
    for (int d = 0; d < Dim; ++d) x[d] = u(rng);
    while (f.level(f.locate(x)) < fine) {
      const LeafIndex id[] = {f.locate(x)};
      f.refine(id);
    }
  }
  balance_2to1(f);
  return f;
}

template <int Dim>
std::vector<double> sample(const Forest<Dim>& f, const std::function<double(const Vec<Dim>&)>& g) {
  std::vector<double> v(f.size());
  for (LeafIndex i = 0; i < f.size(); ++i) v[i] = g(f.center(i));
  return v;
}

// Leaves whose whole neighbourhood lies well inside the domain.
template <int Dim>
bool interior(const Forest<Dim>& f, LeafIndex i) {
  return f.center(i).cwiseAbs().maxCoeff() + 2.0 * f.edge(i) < f.domain().half_width;
}

template <int Dim>
double max_error_in_leaf(const Forest<Dim>& f, LeafIndex i, const LocalPolynomial<Dim>& p,
                         const std::function<double(const Vec<Dim>&)>& g) {
  double worst = 0.0;
  const int k = 5;
  const int total = Dim == 2 ? k * k : k * k * k;
  for (int t = 0; t < total; ++t) {
    Vec<Dim> x = f.center(i);
    int rest = t;
    for (int d = 0; d < Dim; ++d) {
      x[d] += f.edge(i) * (-0.5 + (rest % k) / static_cast<double>(k - 1));
      rest /= k;
    }
    worst = std::max(worst, std::abs(p.evaluate(x) - g(x)));
  }
  return worst;
}

}  // namespace

TEST_CASE("oscillation indicator entries") {
  Coeffs<2> c = Coeffs<2>::Zero();
  c[0] = 3.0;
  CHECK(oscillation_indicator<2>(c) == 0.0);
  c.setZero();
  c[1] = 1.0;
  CHECK(oscillation_indicator<2>(c) == 1.0);
  c.setZero();
  c[3] = 1.0;
  CHECK(oscillation_indicator<2>(c) == doctest::Approx(13.0 / 3.0));
  c.setZero();
  c[4] = 1.0;
  CHECK(oscillation_indicator<2>(c) == doctest::Approx(7.0 / 6.0));
  Coeffs<3> c3 = Coeffs<3>::Zero();
  c3[7] = 1.0;
  CHECK(oscillation_indicator<3>(c3) == doctest::Approx(13.0 / 3.0));
  c3.setZero();
  c3[9] = 2.0;
  CHECK(oscillation_indicator<3>(c3) == doctest::Approx(4.0 * 7.0 / 6.0));
  c3.setZero();
  c3[3] = 1.0;
  CHECK(oscillation_indicator<3>(c3) == 1.0);
}

TEST_CASE("evaluate and gradient") {
  LocalPolynomial<2> p;
  p.center = Vec<2>(0.3, -0.1);
  p.dx = 0.5;
  p.c[0] = 1.0;
  p.c[1] = 1.0;
  CHECK(p.evaluate(p.center) == 1.0);
  CHECK(p.evaluate(p.center + Vec<2>(0.5, 0.0)) == 2.0);

  LocalPolynomial<3> q;
  q.degree = 2;
  q.center = Vec<3>(0.1, 0.2, 0.3);
  q.dx = 0.25;
  q.c << 0.7, 0.1, -0.3, 0.2, 0.5, -0.4, 0.9, 0.3, -0.2, 0.6;
  CHECK(q.evaluate(q.center) == 0.7);
  const Vec<3> x(0.15, 0.12, 0.4);
  const double h = 1e-5;
  const Vec<3> g = q.gradient(x);
  for (int d = 0; d < 3; ++d) {
    Vec<3> e = Vec<3>::Zero();
    e[d] = h;
    const double fd = (q.evaluate(x + e) - q.evaluate(x - e)) / (2 * h);
    CHECK(g[d] == doctest::Approx(fd).epsilon(1e-8));
    const Vec<3> hd = (q.gradient(x + e) - q.gradient(x - e)) / (2 * h);
    for (int r = 0; r < 3; ++r) CHECK(q.hessian()(r, d) == doctest::Approx(hd[r]).epsilon(1e-8));
  }
}

TEST_CASE("P1 fits: constants, affine data, symmetric quadratic") {
  auto f = uniform<2>(2.0, 2);  // dx = 1
  const LeafIndex j = f.locate(Vec<2>(0.5, 0.5));
  const Vec<2> xj = f.center(j);
  auto cst = sample<2>(f, [](const Vec<2>&) { return 5.0; });
  auto p = fit_p1<2>(f, cst, j);
  CHECK(p.c[0] == 5.0);
  CHECK(std::abs(p.c[1]) < 1e-14);
  CHECK(std::abs(p.c[2]) < 1e-14);

  auto lin = sample<2>(f, [](const Vec<2>& x) { return 2.0 * x[0] - x[1]; });
  p = fit_p1<2>(f, lin, j);
  CHECK(p.c[0] == lin[j]);
  CHECK(p.c[1] == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(p.c[2] == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK_FALSE(p.degenerate);

  auto quad = sample<2>(f, [&](const Vec<2>& x) { return square(x[0] - xj[0]); });
  p = fit_p1<2>(f, quad, j);
  CHECK(p.c[0] == 0.0);
  CHECK(std::abs(p.c[1]) < 1e-14);
}

TEST_CASE("affine reproduction on graded stencils, 2D and 3D") {
  auto f2 = graded<2>(1.2, 3, 6, 4);
  auto a2 = [](const Vec<2>& x) { return 0.7 - 1.3 * x[0] + 2.1 * x[1]; };
  auto v2 = sample<2>(f2, a2);
  int checked = 0;
  for (LeafIndex i = 0; i < f2.size(); ++i) {
    if (!interior(f2, i)) continue;
    const double dx = f2.edge(i);
    CwenoWeights<2> w;
    auto fits = {fit_p1<2>(f2, v2, i), fit_lateral<2>(f2, v2, i, 0), fit_lateral<2>(f2, v2, i, 1),
                 fit_lateral<2>(f2, v2, i, 2), fit_lateral<2>(f2, v2, i, 3),
                 fit_cweno<2>(f2, v2, i, {}, &w)};
    for (const auto& p : fits) {
      CHECK(p.c[0] == v2[i]);
      CHECK(std::abs(p.c[1] + 1.3 * dx) <= 1e-12 * 1.3 * dx);
      CHECK(std::abs(p.c[2] - 2.1 * dx) <= 1e-12 * 2.1 * dx);
      for (int k = 3; k < 6; ++k) CHECK(std::abs(p.c[k]) <= 1e-12 * dx);
    }
    for (int k = 0; k < 5; ++k)
      CHECK(w.omega[k] == doctest::Approx(k == 0 ? 0.75 : 0.0625).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked > 100);

  auto f3 = graded<3>(1.2, 2, 4, 8);
  auto a3 = [](const Vec<3>& x) { return -0.2 + 0.5 * x[0] + 0.25 * x[1] - 1.5 * x[2]; };
  auto v3 = sample<3>(f3, a3);
  checked = 0;
  for (LeafIndex i = 0; i < f3.size(); ++i) {
    if (!interior(f3, i)) continue;
    const double dx = f3.edge(i);
    const Vec<3> g(0.5, 0.25, -1.5);
    std::vector<LocalPolynomial<3>> fits = {fit_p1<3>(f3, v3, i), fit_cweno<3>(f3, v3, i)};
    for (int o = 0; o < 8; ++o) fits.push_back(fit_lateral<3>(f3, v3, i, o));
    for (const auto& p : fits) {
      CHECK(p.c[0] == v3[i]);
      for (int d = 0; d < 3; ++d) CHECK(std::abs(p.c[1 + d] - g[d] * dx) <= 1e-12 * std::abs(g[d] * dx));
      for (int k = 4; k < 10; ++k) CHECK(std::abs(p.c[k]) <= 1e-12 * dx);
    }
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("lateral substencils: sw step example and corner fallback") {
  auto f = uniform<2>(2.0, 3);  // dx = 0.5
  const LeafIndex j = f.locate(Vec<2>(0.1, 0.1));
  const Vec<2> xj = f.center(j);
  auto step = sample<2>(f, [&](const Vec<2>& x) {
    return (x[0] <= xj[0] + 1e-12 && x[1] <= xj[1] + 1e-12) ? 0.0 : 1.0;
  });
  const auto sw = fit_lateral<2>(f, step, j, 0);
  CHECK(sw.c[0] == step[j]);
  CHECK(sw.c[1] == 0.0);
  CHECK(sw.c[2] == 0.0);
  CHECK_FALSE(sw.lateral_fallback);
  const auto ne = fit_lateral<2>(f, step, j, 3);
  CHECK(ne.c[1] > 0.0);

  const LeafIndex corner = f.locate(Vec<2>(-1.99, 1.99));
  const auto nw = fit_lateral<2>(f, step, corner, 2);
  CHECK(nw.lateral_fallback);
  const auto se = fit_lateral<2>(f, step, corner, 1);
  CHECK_FALSE(se.lateral_fallback);
}

TEST_CASE("CWENO suppresses a lateral polluted by a step") {
  for (int level : {7, 8}) {
    auto f = uniform<2>(2.0, level);  // dx = 1/32, 1/64
    const double dx = f.edge(0);
    const LeafIndex j = f.locate(Vec<2>(0.01, 0.01));
    const Vec<2> xj = f.center(j);
    auto step = sample<2>(f, [&](const Vec<2>& x) {
      return (x[0] > xj[0] + 0.5 * dx && x[1] > xj[1] + 0.5 * dx) ? 1.0 : 0.0;
    });
    CwenoWeights<2> w;
    const auto p = fit_cweno<2>(f, step, j, {}, &w);
    double sum = 0.0, top = 0.0;
    for (double o : w.omega) {
      CHECK(o >= 0.0);
      sum += o;
      top = std::max(top, o);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    if (dx <= 1.0 / 64) CHECK(w.omega[1 + 3] / top < 1e-2);
    CHECK(p.c[0] == step[j]);
    for (int k = 0; k < 5; ++k) CHECK(w.indicator[k] >= 0.0);

    // Scaling the data scales every coefficient; the dominant weight stays put.
    std::vector<double> scaled(step.size());
    for (std::size_t i = 0; i < step.size(); ++i) scaled[i] = 3.0 * step[i];
    CwenoWeights<2> ws;
    const auto q = fit_cweno<2>(f, scaled, j, {}, &ws);
    const auto lq = fit_lateral<2>(f, scaled, j, 3), lp = fit_lateral<2>(f, step, j, 3);
    for (int k = 0; k < 3; ++k) CHECK(lq.c[k] == doctest::Approx(3.0 * lp.c[k]));
    const auto argmax = [](const auto& a) { return std::max_element(a.begin(), a.end()) - a.begin(); };
    CHECK(argmax(ws.omega) == argmax(w.omega));
    CHECK(q.c[0] == 0.0);
  }
}

TEST_CASE("convergence order on smooth data") {
  auto g2 = [](const Vec<2>& x) { return std::sin(1.3 * x[0]) * std::cos(0.9 * x[1]) + 0.4 * x[0] * x[1]; };
  std::vector<double> e1, ecw, eopt;
  const Vec<2> probe(0.23, -0.17);
  for (int level : {5, 6, 7}) {
    auto f = uniform<2>(1.2, level);
    auto v = sample<2>(f, g2);
    double m1 = 0, mc = 0, mo = 0;
    // Leaves in a fixed physical box around the probe.
    for (LeafIndex i = 0; i < f.size(); ++i) {
      if ((f.center(i) - probe).cwiseAbs().maxCoeff() > 0.12) continue;
      m1 = std::max(m1, max_error_in_leaf<2>(f, i, fit_p1<2>(f, v, i), g2));
      const auto cw = fit_cweno<2>(f, v, i);
      mc = std::max(mc, max_error_in_leaf<2>(f, i, cw, g2));
      const auto opt = fit_quadratic<2>(f, v, i);
      double diff = 0;
      for (int k = 0; k < 6; ++k) diff = std::max(diff, std::abs(cw.c[k] - opt.c[k]));
      mo = std::max(mo, diff);
    }
    e1.push_back(m1);
    ecw.push_back(mc);
    eopt.push_back(mo);
  }
  for (int k = 0; k + 1 < 3; ++k) {
    CHECK(std::log2(e1[k] / e1[k + 1]) >= 1.7);
    CHECK(std::log2(ecw[k] / ecw[k + 1]) >= 2.5);
    CHECK(std::log2(eopt[k] / eopt[k + 1]) >= 2.0);
  }

  auto g3 = [](const Vec<3>& x) { return std::sin(x[0] + 0.5 * x[1]) + std::cos(0.7 * x[2]) * x[1]; };
  std::vector<double> f1, fcw;
  const Vec<3> probe3(0.1, 0.2, -0.15);
  for (int level : {4, 5, 6}) {
    auto f = uniform<3>(1.2, level);
    auto v = sample<3>(f, g3);
    double m1 = 0, mc = 0;
    for (LeafIndex i = 0; i < f.size(); ++i) {
      if ((f.center(i) - probe3).cwiseAbs().maxCoeff() > 0.08) continue;
      m1 = std::max(m1, max_error_in_leaf<3>(f, i, fit_p1<3>(f, v, i), g3));
      mc = std::max(mc, max_error_in_leaf<3>(f, i, fit_cweno<3>(f, v, i), g3));
    }
    f1.push_back(m1);
    fcw.push_back(mc);
  }
  for (int k = 0; k + 1 < 3; ++k) {
    CHECK(std::log2(f1[k] / f1[k + 1]) >= 1.7);
    CHECK(std::log2(fcw[k] / fcw[k + 1]) >= 2.5);
  }
}

TEST_CASE("interpolation constraint holds for every operator") {
  auto f = graded<2>(1.2, 3, 6, 13);
  auto v = sample<2>(f, [](const Vec<2>& x) { return std::exp(x[0]) - x[1] * x[1]; });
  for (LeafIndex i = 0; i < f.size(); ++i) {
    CHECK(fit_p1<2>(f, v, i).evaluate(f.center(i)) == v[i]);
    CHECK(fit_cweno<2>(f, v, i).evaluate(f.center(i)) == v[i]);
  }
  CHECK(stencil_pattern_count() > 0);
}
