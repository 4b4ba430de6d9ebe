#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qfluid/operators.hpp"
#include "qfluid/physics.hpp"

using namespace qfluid;

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

Domain per1(int n, double L = 2.0 * kPi) {
  return make_domain(1, {L}, {n}, Bc::periodic);
}

// Periodic bump exp(c (cos(x - pi) - 1)); sharpness c tunes the spectral
// decay so refinement studies have room between O(1) error and rounding.
ScalarField bump_density(const Domain& d, double c, double amp = 0.5) {
  return ScalarField::from_function(d, [=](double x, double) {
    return 1.0 + amp * std::exp(c * (std::cos(x - kPi) - 1.0));
  });
}

double linf(const ScalarField& f) { return f.max_abs(); }

}  // namespace

TEST_CASE("parameter validation") {
  FluidParams p;
  REQUIRE_NOTHROW(validate_params(p));
  auto bad = [](auto mod) {
    FluidParams q;
    mod(q);
    REQUIRE_THROWS_AS(validate_params(q), Exception);
  };
  bad([](FluidParams& q) { q.a = 0.0; });
  bad([](FluidParams& q) { q.gamma = 1.0; });
  bad([](FluidParams& q) { q.gamma = 0.5; });
  bad([](FluidParams& q) { q.mu = -1.0; });
  bad([](FluidParams& q) { q.lambda_bulk = -0.1; });
  bad([](FluidParams& q) { q.hbar = 0.0; });
  bad([](FluidParams& q) { q.dim = 0; });
}

TEST_CASE("pressure law and potential close the Gibbs-Duhem identity") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (double gamma : {1.4, 5.0 / 3.0, 2.0, 3.0}) {
    FluidParams p;
    p.a = 0.7;
    p.gamma = gamma;
    for (int i = 0; i < 200; ++i) {
      double r = u(rng);
      double pr = pressure_value(r, p);
      REQUIRE(pr == Catch::Approx(0.7 * std::pow(r, gamma)).epsilon(1e-14));
      // rho P'(rho) - P(rho) = p(rho)
      double lhs = r * pressure_potential_prime(r, p) -
                   pressure_potential_value(r, p);
      REQUIRE(std::abs(lhs - pr) <= 1e-12 * std::max(1.0, pr));
      // P'' = a gamma rho^(gamma-2)
      REQUIRE(pressure_potential_dd(r, p) ==
              Catch::Approx(0.7 * gamma * std::pow(r, gamma - 2.0))
                  .epsilon(1e-13));
    }
  }
}

TEST_CASE("Bregman bracket of the pressure potential at the textbook point") {
  FluidParams p;  // a = 1, gamma = 2
  double b = pressure_potential_value(2.0, p) -
             pressure_potential_prime(1.0, p) * (2.0 - 1.0) -
             pressure_potential_value(1.0, p);
  REQUIRE(b == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("pressure potential rejects the isothermal exponent") {
  Domain d = per1(16);
  auto rho = ScalarField::from_function(d, [](double, double) { return 1.0; });
  FluidParams p;
  p.gamma = 1.0;
  REQUIRE_THROWS_AS(pressure_potential(rho, p), Exception);
  try {
    pressure_potential(rho, p);
  } catch (const Exception& e) {
    REQUIRE(e.code() == Err::gamma_one);
  }
}

TEST_CASE("nonpositive density is rejected") {
  Domain d = per1(16);
  auto rho = ScalarField::from_function(
      d, [](double x, double) { return std::cos(x); });  // dips negative
  FluidParams p;
  try {
    pressure(rho, p);
    FAIL("expected NonPositiveDensity");
  } catch (const Exception& e) {
    REQUIRE(e.code() == Err::non_positive_density);
  }
}

TEST_CASE("Bohm potential matches the closed form for a log-cosine density") {
  // rho = exp(b cos x): sqrt(rho) = exp(g), g = (b/2) cos x, and
  // lap sqrt(rho) / sqrt(rho) = g'' + g'^2.
  const double b = 0.5;
  Domain d = per1(64);
  auto rho = ScalarField::from_function(
      d, [=](double x, double) { return std::exp(b * std::cos(x)); });
  FluidParams p;
  p.hbar = 1.7;
  ScalarField q = bohm_potential(rho, p);
  auto expect = ScalarField::from_function(d, [=](double x, double) {
    const double half = 0.5 * b;
    return 0.5 * 1.7 *
           (-half * std::cos(x) + half * half * std::sin(x) * std::sin(x));
  });
  double e = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    e = std::max(e, std::abs(q[i] - expect[i]));
  REQUIRE(e < 1e-11);
}

TEST_CASE("Bohm potential refuses an under-resolved density") {
  Domain d = per1(16);
  ScalarField rho = bump_density(d, 400.0);
  try {
    bohm_potential(rho, FluidParams{});
    FAIL("expected UnresolvedField");
  } catch (const Exception& e) {
    REQUIRE(e.code() == Err::unresolved_field);
  }
}

TEST_CASE("drift velocity forms agree on smooth data") {
  Domain d = per1(64);
  auto rho = ScalarField::from_function(
      d, [](double x, double) { return std::exp(0.4 * std::sin(x)); });
  VectorField v = drift_velocity(rho);
  auto expect = ScalarField::from_function(
      d, [](double x, double) { return 0.2 * std::cos(x); });
  double e = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    e = std::max(e, std::abs(v.comp(0)[i] - expect[i]));
  REQUIRE(e < 1e-12);
}

TEST_CASE("Korteweg tensor divergence equals density times Bohm gradient") {
  // Identity div K = rho grad Q, checked as a two-sided discrete residual
  // that must fall at least 10x per grid doubling.
  FluidParams p;
  p.hbar = 0.9;
  double prev = -1.0;
  for (int n : {64, 128, 256}) {
    Domain d = per1(n);
    ScalarField rho = bump_density(d, 100.0);
    TensorField K = korteweg_tensor(rho, p);
    VectorField divK = divergence(K);
    ScalarField q = bohm_potential(rho, p, 1.0);  // tail gate off here
    VectorField gq = gradient(q);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      double r = rho[i] * gq.comp(0)[i];
      err = std::max(err, std::abs(divK.comp(0)[i] - r));
      scale = std::max(scale, std::abs(r));
    }
    double rel = err / scale;
    if (prev >= 0.0) REQUIRE(rel < prev / 10.0);
    prev = rel;
  }
  REQUIRE(prev < 1e-5);
}

TEST_CASE("both Korteweg forms coincide on smooth data") {
  FluidParams p;
  p.hbar = 1.3;
  Domain d = per1(64);
  auto rho = ScalarField::from_function(
      d, [](double x, double) { return std::exp(0.5 * std::cos(x)); });
  TensorField K1 = korteweg_tensor(rho, p);
  TensorField K2 = korteweg_tensor_drift_form(rho, p);
  // 4 d_a sqrt(rho) d_b sqrt(rho) = d_a rho d_b rho / rho, so the two
  // routes agree pointwise up to discretization error.
  double e = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    e = std::max(e, std::abs(K1.entry(0, 0)[i] - K2.entry(0, 0)[i]));
  REQUIRE(e < 1e-10);
}

TEST_CASE("viscous stress in one dimension is the longitudinal form") {
  Domain d = per1(32);
  FluidParams p;
  p.mu = 0.3;
  p.lambda_bulk = 0.2;
  VectorField u(d);
  auto ux = ScalarField::from_function(
      d, [](double x, double) { return std::sin(2.0 * x); });
  for (std::size_t i = 0; i < ux.size(); ++i) u.comp(0)[i] = ux[i];
  TensorField S = viscous_stress(grad_vec(u), p);
  auto expect = ScalarField::from_function(d, [&](double x, double) {
    return (2.0 * 0.3 + 0.2) * 2.0 * std::cos(2.0 * x);
  });
  double e = 0.0;
  for (std::size_t i = 0; i < ux.size(); ++i)
    e = std::max(e, std::abs(S.entry(0, 0)[i] - expect[i]));
  REQUIRE(e < 1e-12);
}

TEST_CASE("viscous stress splits into traceless shear plus bulk trace") {
  Domain d = make_domain(2, {2.0 * kPi, 2.0 * kPi}, {32, 32}, Bc::periodic);
  FluidParams p2;
  p2.dim = 2;
  VectorField u(d);
  for (int i = 0; i < d.points(0); ++i)
    for (int j = 0; j < d.points(1); ++j) {
      double x = d.coord(0, i), y = d.coord(1, j);
      u.comp(0)[d.index(i, j)] = std::sin(x) * std::cos(y);
      u.comp(1)[d.index(i, j)] = std::cos(2.0 * x) * std::sin(y);
    }
  TensorField G = grad_vec(u);

  FluidParams shear = p2;
  shear.mu = 0.8;
  TensorField Ss = viscous_stress(G, shear);
  FluidParams bulk = p2;
  bulk.lambda_bulk = 0.6;
  TensorField Sb = viscous_stress(G, bulk);
  FluidParams both = p2;
  both.mu = 0.8;
  both.lambda_bulk = 0.6;
  TensorField S = viscous_stress(G, both);

  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    // shear part is traceless, bulk trace carries the full divergence
    double trs = Ss.entry(0, 0)[i] + Ss.entry(1, 1)[i];
    double div = G.entry(0, 0)[i] + G.entry(1, 1)[i];
    double trb = Sb.entry(0, 0)[i] + Sb.entry(1, 1)[i];
    e = std::max(e, std::abs(trs));
    e = std::max(e, std::abs(trb - 2.0 * 0.6 * div));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        // symmetry and additivity in the coefficients
        e = std::max(e, std::abs(S.entry(a, b)[i] - Ss.entry(a, b)[i] -
                                 Sb.entry(a, b)[i]));
        e = std::max(e, std::abs(Ss.entry(a, b)[i] - Ss.entry(b, a)[i]));
      }
  }
  REQUIRE(e < 1e-12);
}

TEST_CASE("viscous stress scales linearly in the shear viscosity") {
  Domain d = per1(32);
  VectorField u(d);
  for (int i = 0; i < d.points(0); ++i)
    u.comp(0)[i] = std::sin(d.coord(0, i));
  TensorField G = grad_vec(u);
  FluidParams p1;
  p1.mu = 1.0;
  FluidParams p2;
  p2.mu = 2.0;
  TensorField S1 = viscous_stress(G, p1);
  TensorField S2 = viscous_stress(G, p2);
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    e = std::max(e, std::abs(S2.entry(0, 0)[i] - 2.0 * S1.entry(0, 0)[i]));
  REQUIRE(e < 1e-14);
}
