#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qfluid/basis.hpp"
#include "qfluid/domain.hpp"
#include "qfluid/field.hpp"
#include "qfluid/operators.hpp"

using namespace qfluid;

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

Domain per1(int n, double L = 2.0 * kPi) {
  return make_domain(1, {L}, {n}, Bc::periodic);
}
Domain per2(int n0, int n1, double L0, double L1) {
  return make_domain(2, {L0, L1}, {n0, n1}, Bc::periodic);
}
Domain wall1(int n, double L = 1.0) {
  return make_domain(1, {L}, {n}, Bc::wall);
}

double max_err(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("domain validation rejects bad setups") {
  REQUIRE_THROWS_AS(make_domain(3, {1.0, 1.0, 1.0}, {16, 16, 16}, Bc::periodic),
                    Exception);
  REQUIRE_THROWS_AS(make_domain(1, {0.0}, {16}, Bc::periodic), Exception);
  REQUIRE_THROWS_AS(make_domain(1, {1.0}, {12}, Bc::periodic), Exception);
  REQUIRE_THROWS_AS(make_domain(1, {1.0}, {4}, Bc::periodic), Exception);
  try {
    make_domain(1, {1.0}, {12}, Bc::periodic);
    FAIL("expected BadResolution");
  } catch (const Exception& e) {
    REQUIRE(e.code() == Err::bad_resolution);
  }
}

TEST_CASE("domain grid layout and measures") {
  Domain d = per2(8, 16, 2.0, 4.0);
  REQUIRE(d.points(0) == 8);
  REQUIRE(d.points(1) == 16);
  REQUIRE(d.npoints() == 128);
  REQUIRE(d.h(0) == Catch::Approx(0.25));
  REQUIRE(d.h(1) == Catch::Approx(0.25));
  REQUIRE(d.volume() == Catch::Approx(8.0));
  REQUIRE(d.index(2, 3) == 2 * 16 + 3);

  Domain w = wall1(8, 1.0);
  REQUIRE(w.points(0) == 9);         // walls carry nodes
  REQUIRE(w.transform_size(0) == 16);  // even/odd extension length
}

TEST_CASE("spectral roundtrip reproduces nodal values") {
  Domain d = per1(32);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarField f(d);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  auto buf = detail::to_spectrum(d, f.comp(0), f.parity(0));
  ScalarField g(d);
  detail::from_spectrum(d, buf, g.comp(0));
  REQUIRE(max_err(f, g) < 1e-13);
}

TEST_CASE("derivatives are exact on trigonometric eigenfunctions") {
  Domain d = per1(32, 2.0 * kPi);
  for (int k : {1, 3, 7}) {
    auto f = ScalarField::from_function(
        d, [k](double x, double) { return std::sin(k * x); });
    auto fx = ScalarField::from_function(
        d, [k](double x, double) { return k * std::cos(k * x); });
    VectorField g = gradient(f);
    ScalarField gx(d);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = g.comp(0)[i];
    REQUIRE(max_err(gx, fx) < 1e-12 * k * k);

    ScalarField lf = laplacian(f);
    ScalarField expect(d);
    for (std::size_t i = 0; i < lf.size(); ++i)
      expect[i] = -double(k) * k * f[i];
    REQUIRE(max_err(lf, expect) < 1e-11 * k * k);
  }
}

TEST_CASE("gradient and hessian match analytics on a 2d eigenfunction") {
  double L0 = 2.0, L1 = 3.0;
  Domain d = per2(32, 32, L0, L1);
  double a = 2.0 * kPi * 2 / L0, b = 2.0 * kPi * 1 / L1;
  auto f = ScalarField::from_function(
      d, [=](double x, double y) { return std::sin(a * x) * std::cos(b * y); });
  VectorField g = gradient(f);
  TensorField h = hessian(f);
  auto fx = ScalarField::from_function(d, [=](double x, double y) {
    return a * std::cos(a * x) * std::cos(b * y);
  });
  auto fy = ScalarField::from_function(d, [=](double x, double y) {
    return -b * std::sin(a * x) * std::sin(b * y);
  });
  auto fxy = ScalarField::from_function(d, [=](double x, double y) {
    return -a * b * std::cos(a * x) * std::sin(b * y);
  });
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    e = std::max(e, std::abs(g.comp(0)[i] - fx[i]));
    e = std::max(e, std::abs(g.comp(1)[i] - fy[i]));
    e = std::max(e, std::abs(h.entry(0, 1)[i] - fxy[i]));
    e = std::max(e, std::abs(h.entry(0, 1)[i] - h.entry(1, 0)[i]));
    e = std::max(e, std::abs(h.entry(0, 0)[i] + a * a * f[i]));
    e = std::max(e, std::abs(h.entry(1, 1)[i] + b * b * f[i]));
  }
  REQUIRE(e < 1e-10);
}

TEST_CASE("smooth non-polynomial derivatives converge spectrally") {
  auto exact = [](double x) { return std::cos(x) * std::exp(std::sin(x)); };
  double prev = 1.0;
  for (int n : {8, 16, 32}) {
    Domain d = per1(n);
    auto f = ScalarField::from_function(
        d, [](double x, double) { return std::exp(std::sin(x)); });
    VectorField g = gradient(f);
    double e = 0.0;
    for (int i = 0; i < d.points(0); ++i)
      e = std::max(e, std::abs(g.comp(0)[i] - exact(d.coord(0, i))));
    if (n > 8) REQUIRE(e < prev / 50.0);
    prev = e;
  }
  REQUIRE(prev < 1e-12);
}

TEST_CASE("divergence contracts the first tensor index") {
  double L0 = 2.0 * kPi, L1 = 2.0 * kPi;
  Domain d = per2(32, 32, L0, L1);
  // T(a,b) = u_a v_b with u = (sin x, cos y), v = (cos y, sin x):
  // (div T)_b = sum_a d_a (u_a v_b).
  TensorField T(d);
  auto set = [&](int a, int b, auto fn) {
    auto e = T.entry(a, b);
    for (int i = 0; i < d.points(0); ++i)
      for (int j = 0; j < d.points(1); ++j)
        e[d.index(i, j)] = fn(d.coord(0, i), d.coord(1, j));
  };
  set(0, 0, [](double x, double y) { return std::sin(x) * std::cos(y); });
  set(0, 1, [](double x, double y) { return std::sin(x) * std::sin(x); });
  set(1, 0, [](double x, double y) { return std::cos(y) * std::cos(y); });
  set(1, 1, [](double x, double y) { return std::cos(y) * std::sin(x); });
  VectorField dv = divergence(T);
  auto d0 = ScalarField::from_function(d, [](double x, double y) {
    return std::cos(x) * std::cos(y) - 2.0 * std::sin(y) * std::cos(y);
  });
  auto d1 = ScalarField::from_function(d, [](double x, double y) {
    return 2.0 * std::sin(x) * std::cos(x) - std::sin(y) * std::sin(x);
  });
  double e = 0.0;
  for (std::size_t i = 0; i < d0.size(); ++i) {
    e = std::max(e, std::abs(dv.comp(0)[i] - d0[i]));
    e = std::max(e, std::abs(dv.comp(1)[i] - d1[i]));
  }
  REQUIRE(e < 1e-10);
}

TEST_CASE("quadrature integrates trigonometric polynomials exactly") {
  Domain d = per1(16, 2.0 * kPi);
  auto one = ScalarField::from_function(d, [](double, double) { return 1.0; });
  REQUIRE(integrate(one) == Catch::Approx(2.0 * kPi).margin(1e-13));
  auto s2 = ScalarField::from_function(
      d, [](double x, double) { return std::sin(3 * x) * std::sin(3 * x); });
  REQUIRE(integrate(s2) == Catch::Approx(kPi).margin(1e-13));

  Domain w = wall1(16, 1.0);
  auto c = ScalarField::from_function(
      w, [](double x, double) { return std::cos(2 * kPi * x); });
  c.set_parity(0, parity_even_all);
  ScalarField c2(w);
  for (std::size_t i = 0; i < c.size(); ++i) c2[i] = c[i] * c[i];
  REQUIRE(integrate(c2) == Catch::Approx(0.5).margin(1e-13));
}

TEST_CASE("integration by parts holds to rounding") {
  Domain d = per1(64);
  auto f = ScalarField::from_function(
      d, [](double x, double) { return std::exp(std::sin(x)); });
  auto g = ScalarField::from_function(
      d, [](double x, double) { return std::cos(2.0 * x); });
  VectorField df = gradient(f);
  VectorField dg = gradient(g);
  double lhs = quadrature(d, [&](std::size_t i) { return f[i] * dg.comp(0)[i]; });
  double rhs = -quadrature(d, [&](std::size_t i) { return df.comp(0)[i] * g[i]; });
  REQUIRE(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("integration by parts on a wall domain with matched parity") {
  Domain w = wall1(32, 1.0);
  // odd f vanishes at the walls, even g has vanishing normal derivative
  auto f = ScalarField::from_function(
      w, [](double x, double) { return std::sin(kPi * x); });
  f.set_parity(0, parity_odd_all(1));
  auto g = ScalarField::from_function(
      w, [](double x, double) { return std::cos(2.0 * kPi * x); });
  g.set_parity(0, parity_even_all);
  VectorField df = gradient(f);
  VectorField dg = gradient(g);
  double lhs = quadrature(w, [&](std::size_t i) { return f[i] * dg.comp(0)[i]; });
  double rhs = -quadrature(w, [&](std::size_t i) { return df.comp(0)[i] * g[i]; });
  REQUIRE(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("wall gradient respects the reflection parities") {
  Domain w = wall1(32, 1.0);
  auto f = ScalarField::from_function(
      w, [](double x, double) { return std::sin(3.0 * kPi * x); });
  f.set_parity(0, parity_odd_all(1));
  VectorField g = gradient(f);
  auto gx = ScalarField::from_function(
      w, [](double x, double) { return 3.0 * kPi * std::cos(3.0 * kPi * x); });
  ScalarField got(w);
  for (std::size_t i = 0; i < got.size(); ++i) got[i] = g.comp(0)[i];
  REQUIRE(max_err(got, gx) < 1e-10);
  // second derivative of the odd extension stays odd
  ScalarField lf = laplacian(f);
  REQUIRE(std::abs(lf[0]) < 1e-10);
  REQUIRE(std::abs(lf[w.points(0) - 1]) < 1e-10);
}

TEST_CASE("dealias removes exactly the modes beyond the two-thirds cutoff") {
  Domain d = per1(32);  // cutoff floor(32/3) = 10
  auto f = ScalarField::from_function(d, [](double x, double) {
    return 1.0 + std::sin(9.0 * x) + std::cos(10.0 * x) + std::sin(11.0 * x) +
           std::cos(14.0 * x);
  });
  ScalarField fd = dealias(f);
  auto keep = ScalarField::from_function(d, [](double x, double) {
    return 1.0 + std::sin(9.0 * x) + std::cos(10.0 * x);
  });
  REQUIRE(max_err(fd, keep) < 1e-13);
  ScalarField fdd = dealias(fd);
  REQUIRE(max_err(fdd, fd) < 1e-14);  // projection is idempotent
}

TEST_CASE("spectral tail fraction flags an under-resolved field") {
  Domain d = per1(32);
  auto smooth = ScalarField::from_function(
      d, [](double x, double) { return 1.0 + 0.3 * std::sin(2.0 * x); });
  REQUIRE(spectral_tail_fraction(smooth) < 1e-14);
  REQUIRE_NOTHROW(require_resolved(smooth, 1e-8, "test"));

  auto sharp = ScalarField::from_function(d, [](double x, double) {
    return 1.0 + 0.9 * std::exp(-40.0 * (x - kPi) * (x - kPi));
  });
  REQUIRE(spectral_tail_fraction(sharp) > 1e-8);
  try {
    require_resolved(sharp, 1e-8, "test");
    FAIL("expected UnresolvedField");
  } catch (const Exception& e) {
    REQUIRE(e.code() == Err::unresolved_field);
  }
}

TEST_CASE("negative Sobolev norm matches Parseval on closed forms") {
  Domain d = per1(64);
  auto one = ScalarField::from_function(d, [](double, double) { return 1.0; });
  for (int k : {1, 2, 3})
    REQUIRE(negative_sobolev_norm(one, k) ==
            Catch::Approx(std::sqrt(2.0 * kPi)).margin(1e-12));

  for (int m : {1, 4}) {
    auto s = ScalarField::from_function(
        d, [m](double x, double) { return std::sin(m * x); });
    for (int k : {1, 2}) {
      double expect = std::sqrt(kPi) * std::pow(1.0 + m * m, -0.5 * k);
      REQUIRE(negative_sobolev_norm(s, k) == Catch::Approx(expect).margin(1e-12));
    }
  }
  // lower k dominates: ||f||_{-1} >= ||f||_{-2}
  auto f = ScalarField::from_function(
      d, [](double x, double) { return std::sin(x) + 0.5 * std::cos(5 * x); });
  REQUIRE(negative_sobolev_norm(f, 1) >= negative_sobolev_norm(f, 2));
}

TEST_CASE("basis profiles are orthonormal and span-reproducing") {
  Domain d = per1(64);
  GalerkinBasis basis(d, 8);
  for (int i = 0; i < basis.size(); ++i)
    for (int j = i; j < basis.size(); ++j) {
      double ip = 0.0;
      if (basis.mode(i).comp == basis.mode(j).comp) {
        auto pi = basis.mode(i).profile.comp(0);
        auto pj = basis.mode(j).profile.comp(0);
        ip = quadrature(d, [&](std::size_t k) { return pi[k] * pj[k]; });
      }
      REQUIRE(std::abs(ip - (i == j ? 1.0 : 0.0)) < 1e-12);
    }

  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(basis.size());
  for (auto& x : c) x = u(rng);
  VectorField v = reconstruct(c, basis);
  std::vector<double> c2 = project(v, basis);
  for (int i = 0; i < basis.size(); ++i) REQUIRE(std::abs(c2[i] - c[i]) < 1e-12);
}

TEST_CASE("wall basis vanishes on the boundary and stays orthonormal") {
  Domain w = wall1(32, 1.0);
  GalerkinBasis basis(w, 6);
  for (int i = 0; i < basis.size(); ++i) {
    auto p = basis.mode(i).profile.comp(0);
    REQUIRE(p[0] == 0.0);
    REQUIRE(p[w.points(0) - 1] == 0.0);
    for (int j = i; j < basis.size(); ++j) {
      auto q = basis.mode(j).profile.comp(0);
      double ip = quadrature(w, [&](std::size_t k) { return p[k] * q[k]; });
      REQUIRE(std::abs(ip - (i == j ? 1.0 : 0.0)) < 1e-12);
    }
  }
}

TEST_CASE("basis size is capped by the grid") {
  Domain d = per1(16);
  REQUIRE_NOTHROW(GalerkinBasis(d, 8));
  try {
    GalerkinBasis(d, 9);
    FAIL("expected TooManyModes");
  } catch (const Exception& e) {
    REQUIRE(e.code() == Err::too_many_modes);
  }
}

TEST_CASE("two dimensional basis keeps component bookkeeping straight") {
  Domain d = per2(16, 16, 2.0 * kPi, 2.0 * kPi);
  GalerkinBasis basis(d, 8);
  REQUIRE(basis.size() == 8);
  for (int i = 0; i < basis.size(); ++i) {
    REQUIRE((basis.mode(i).comp == 0 || basis.mode(i).comp == 1));
    auto pi = basis.mode(i).profile.comp(0);
    double nrm = quadrature(d, [&](std::size_t k) { return pi[k] * pi[k]; });
    REQUIRE(nrm == Catch::Approx(1.0).margin(1e-12));
  }
}
