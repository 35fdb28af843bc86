#include <doctest.h>

#include <cmath>
#include <random>

#include "lbstab/error.hpp"
#include "lbstab/policy.hpp"
#include "oracles/oracles.hpp"

using namespace lbstab;

namespace {

const ActivationMode kActive = ActivationMode::active();

// Random polynomial of degree d with p(1) = 0.
Polynomial random_equilibrium_poly(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> c(d + 1);
  double tail = 0.0;
  for (std::size_t k = 1; k <= d; ++k) tail += (c[k] = u(rng));
  c[0] = -tail;
  return Polynomial(c);
}

Polynomial random_poly(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> c(d + 1);
  for (auto& v : c) v = u(rng);
  return Polynomial(c);
}

double central_diff(auto&& f, double x, double h = 1e-6) { return (f(x + h) - f(x - h)) / (2 * h); }

}  // namespace

TEST_CASE("eval_local examples") {
  const auto f = LocalPolicy::quadratic_restoring(1.0);
  CHECK(eval_local(f, 1.0) == 0.0);
  CHECK(eval_local(f, 0.5) == doctest::Approx(0.75).epsilon(1e-15));
  const auto f2 = LocalPolicy::sleep_quadratic(1.0, 0.3);
  CHECK(eval_local(f2, 0.2) == doctest::Approx(-0.08).epsilon(1e-12));
  CHECK_THROWS_AS(eval_local(f, -0.1), DomainError);
  CHECK_THROWS_AS(eval_local(f, std::nan("")), DomainError);
}

TEST_CASE("sleep branch selection is strict") {
  const Polynomial awake({-1.0, 1.0});
  const Polynomial asleep({-5.0});
  const LocalPolicy p(ActivationMode::sleep_capable(0.4), awake, asleep);
  CHECK(eval_local(p, 0.39) == -5.0);
  CHECK(eval_local(p, 0.4) == doctest::Approx(-0.6));
  CHECK(eval_local(p, 0.8) == doctest::Approx(-0.2));
}

TEST_CASE("local_derivative examples") {
  CHECK(local_derivative(LocalPolicy::quadratic_restoring(1.0), 1.0) == -2.0);
  CHECK(local_derivative(LocalPolicy::linear_restoring(2.0), 1.0) == -2.0);
  const LocalPolicy zero(kActive, Polynomial({0.0}));
  CHECK(local_derivative(zero, 0.3) == 0.0);
  CHECK(local_derivative(zero, 1.7) == 0.0);
  const auto sleepy = LocalPolicy::sleep_quadratic(1.0, 0.3);
  CHECK_THROWS_AS(local_derivative(sleepy, 0.3), AmbiguityError);
}

TEST_CASE("policy construction enforces its invariants") {
  CHECK_THROWS_AS(ActivationMode::sleep_capable(0.0), PolicyError);
  CHECK_THROWS_AS(ActivationMode::sleep_capable(1.0), PolicyError);
  CHECK_THROWS_AS(ActivationMode::sleep_capable(std::nan("")), PolicyError);
  CHECK_THROWS_AS(LocalPolicy(kActive, Polynomial({1.0, 1.0})), PolicyError);
  CHECK_THROWS_AS(LocalPolicy(kActive, Polynomial({-1.0, 0, 0, 0, 0, 0, 0, 1.0})), PolicyError);
  CHECK_THROWS_AS(LocalPolicy(kActive, Polynomial({-1.0, 1.0}), Polynomial({0.0})), PolicyError);
  CHECK_NOTHROW(LocalPolicy(kActive, Polynomial({-1.0, 0, 0, 0, 0, 0, 1.0})));
}

TEST_CASE("eval_coupling examples") {
  const auto g = CouplingPolicy::linear_diffusive(-1.0);
  CHECK(eval_coupling(g, kActive, kActive, 0.4, 0.6) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(eval_coupling(g, kActive, kActive, 0.7, 0.7) == 0.0);

  CouplingPolicy drain;
  drain.c = 1.0;
  drain.sleep_drain = Polynomial({0.0, -1.0});
  const auto sleepy = ActivationMode::sleep_capable(0.3);
  for (double lj : {0.0, 0.2, 0.9, 1.6})
    CHECK(eval_coupling(drain, sleepy, kActive, 0.1, lj) == doctest::Approx(-0.1).epsilon(1e-15));
  // The awake partner receives nothing from a sleeping cell.
  CHECK(eval_coupling(drain, kActive, sleepy, 0.9, 0.1) == 0.0);
  // Awake sleep-capable cells couple normally.
  CHECK(eval_coupling(drain, sleepy, kActive, 0.5, 0.7) == doctest::Approx(0.2));
}

TEST_CASE("a positive drain polynomial never adds load to a sleeping cell") {
  CouplingPolicy g;
  g.sleep_drain = Polynomial({0.5});
  const auto sleepy = ActivationMode::sleep_capable(0.3);
  CHECK(eval_coupling(g, sleepy, kActive, 0.1, 1.0) <= 0.0);
}

TEST_CASE("coupling_slope_h examples") {
  CouplingPolicy g;
  g.c = 1.0;
  CHECK(coupling_slope_h(g, 1.0) == -1.0);
  CHECK(coupling_slope_h(CouplingPolicy::linear_diffusive(-1.0), 1.0) == -1.0);

  CouplingPolicy pq;
  pq.p = Polynomial({0.0, 1.0});
  pq.q = Polynomial({0.0, 1.0});
  CHECK(coupling_slope_h(pq, 1.0) == -2.0);
  const double fd = central_diff([&](double li) { return eval_coupling(pq, kActive, kActive, li, 1.0); }, 1.0);
  CHECK(std::abs(fd - (-2.0)) < 1e-8);
}

TEST_CASE("analytic slopes match central differences on random policies") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> s_dist(0.2, 1.8);
  std::uniform_int_distribution<std::size_t> deg(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const LocalPolicy f(kActive, random_equilibrium_poly(rng, deg(rng)));
    const double s = s_dist(rng);
    const double fd = central_diff([&](double l) { return eval_local(f, l); }, s);
    const double an = local_derivative(f, s);
    CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));

    CouplingPolicy g;
    g.p = random_poly(rng, deg(rng));
    g.q = random_poly(rng, deg(rng));
    g.c = std::uniform_real_distribution<double>(-2, 2)(rng);
    const double h = coupling_slope_h(g, s);
    const double gi = central_diff([&](double li) { return eval_coupling(g, kActive, kActive, li, s); }, s);
    const double gj = central_diff([&](double lj) { return eval_coupling(g, kActive, kActive, s, lj); }, s);
    CHECK(std::abs(gi - h) <= 1e-6 * std::max(1.0, std::abs(h)));
    // d g / d l_j = -h
    CHECK(std::abs(gj + h) <= 1e-6 * std::max(1.0, std::abs(h)));
    CHECK(eval_coupling(g, kActive, kActive, s, s) == 0.0);
  }
}

TEST_CASE("fit_policy reproduces exact polynomial data") {
  std::vector<LoadRateSample> samples;
  for (int k = 0; k <= 20; ++k) {
    const double l = 0.1 * k;
    samples.push_back({l, 1.0 - l * l});
  }
  const auto fit = fit_policy(samples, 2);
  const auto& c = fit.policy.active_branch().coeffs();
  REQUIRE(c.size() == 3);
  CHECK(std::abs(c[0] - 1.0) < 1e-6);
  CHECK(std::abs(c[1]) < 1e-6);
  CHECK(std::abs(c[2] + 1.0) < 1e-6);
  CHECK(std::abs(fit.constant_adjustment) < 1e-9);
  CHECK(fit.residual_rms < 1e-9);
  CHECK(std::abs(fit.policy.active_branch()(1.0)) <= kEquilibriumTolerance);
}

TEST_CASE("fit_policy on random noiseless polynomials") {
  std::mt19937_64 rng(77);
  for (std::size_t degree = 1; degree <= 5; ++degree) {
    const Polynomial truth = random_equilibrium_poly(rng, degree);
    std::vector<LoadRateSample> samples;
    for (int k = 0; k < 40; ++k) {
      const double l = 0.05 * k;
      samples.push_back({l, truth(l)});
    }
    const auto fit = fit_policy(samples, degree);
    const auto& c = fit.policy.active_branch().coeffs();
    REQUIRE(c.size() == truth.coeffs().size());
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(std::abs(c[k] - truth.coeffs()[k]) < 1e-6);
  }
}

TEST_CASE("fit_policy on noisy linear data matches the closed-form line") {
  std::mt19937_64 rng(31337);
  std::normal_distribution<double> noise(0.0, 1e-3);
  std::vector<LoadRateSample> samples;
  std::vector<double> xs, ys;
  for (int k = 0; k < 100; ++k) {
    const double l = 2.0 * k / 99.0;
    const double r = 2.0 * (1.0 - l) + noise(rng);
    samples.push_back({l, r});
    xs.push_back(l);
    ys.push_back(r);
  }
  const auto [a, b] = oracle::least_squares_line(xs, ys);
  const auto fit = fit_policy(samples, 1);
  const auto& c = fit.policy.active_branch().coeffs();
  CHECK(std::abs(c[1] - b) < 1e-10);
  CHECK(std::abs(c[1] + 2.0) < 0.01);
  // Projection shifts only the constant term.
  CHECK(std::abs(fit.constant_adjustment - (-(a + b))) < 1e-10);
  CHECK(fit.residual_rms > 0.0);
}

TEST_CASE("fit_policy rejects underdetermined and degenerate designs") {
  std::vector<LoadRateSample> two{{0.1, 0.5}, {0.9, 0.1}};
  CHECK_THROWS_AS(fit_policy(two, 3), FitError);
  CHECK_THROWS_AS(fit_policy(two, 0), FitError);
  CHECK_THROWS_AS(fit_policy(two, 7), FitError);
  std::vector<LoadRateSample> repeated(10, LoadRateSample{0.5, 0.2});
  try {
    fit_policy(repeated, 2);
    FAIL("expected a rank error");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()).find("rank") != std::string::npos);
  }
}

TEST_CASE("validate_policy diagnostics") {
  const auto lin = validate_policy(LocalPolicy::linear_restoring(1.0));
  CHECK(lin.all_ok());
  CHECK(lin.slope_at_one == -1.0);
  CHECK_FALSE(lin.sign_pattern_checked);

  const auto sleepy = validate_policy(LocalPolicy::sleep_quadratic(1.0, 0.3));
  CHECK(sleepy.sign_pattern_checked);
  CHECK(sleepy.sign_pattern_ok);
  CHECK(sleepy.equilibrium_ok);

  const auto bad = validate_policy(LocalPolicy(kActive, Polynomial({-1.0, 1.0})));
  CHECK(bad.equilibrium_ok);
  CHECK(bad.slope_at_one == 1.0);
  CHECK(bad.destabilizing);
  bool named = false;
  for (const auto& m : bad.messages) named |= m.find("destabilizing local dynamics") != std::string::npos;
  CHECK(named);

  // Sleep-capable but positive below the threshold.
  const LocalPolicy wrong(ActivationMode::sleep_capable(0.3), Polynomial({1.0, 0.0, -1.0}));
  const auto d = validate_policy(wrong);
  CHECK_FALSE(d.sign_pattern_ok);
  REQUIRE(d.first_sign_violation.has_value());
  CHECK(*d.first_sign_violation < 0.3);
}

TEST_CASE("assignment homogeneity and restriction") {
  const auto f = LocalPolicy::quadratic_restoring(1.0);
  PolicyAssignment a(std::vector<LocalPolicy>(4, f), CouplingPolicy::linear_diffusive(-1.0));
  CHECK(a.homogeneous());
  a.set_pair_coupling(0, 1, CouplingPolicy::linear_diffusive(-1.0));
  CHECK(a.homogeneous());
  a.set_pair_coupling(0, 1, CouplingPolicy::linear_diffusive(-2.0));
  CHECK_FALSE(a.homogeneous());
  CHECK(a.coupling(0, 1).c == 2.0);
  CHECK(a.coupling(1, 0).c == 1.0);

  PolicyAssignment b(std::vector<LocalPolicy>(3, f), CouplingPolicy::linear_diffusive(-1.0));
  b.set_local(2, LocalPolicy::sleep_quadratic(1.0, 0.05));
  CHECK_FALSE(b.homogeneous());
  const std::vector<std::size_t> keep{2, 0};
  const auto r = b.restrict_to(keep);
  CHECK(r.size() == 2);
  CHECK(r.local(0).mode().is_sleep_capable());
  CHECK_FALSE(r.local(1).mode().is_sleep_capable());
}
