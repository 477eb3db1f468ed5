#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "levypide/oracle.hpp"
#include "levypide/pide.hpp"

using namespace levypide;

namespace {

constexpr double kPi = std::numbers::pi;

TerminalFn terminal(std::function<double(double)> f) {
  return [f](std::span<const double> x, std::span<double> out) { out[0] = f(x[0]); };
}

std::vector<TestFunctionSpec> bumps() {
  return {bump_test_function({0.0}, 1.0), bump_test_function({-1.0}, 0.75), bump_test_function({0.8}, 1.2)};
}

// Transform-oracle solution of the drift-free linear equation on every time node.
SpaceTimeField convolution_field(const LevyTriple& triple, const oracle::PeriodicSpectralGrid& pg, const TimeGrid& tg,
                                 const std::function<double(double)>& phi) {
  SpaceTimeField f(pg.space_grid(), tg);
  std::vector<double> values;
  for (double x : pg.nodes()) values.push_back(phi(x));
  for (int i = 0; i < tg.nodes(); ++i) {
    const auto u = oracle::linear_convolution_solve(triple, pg, values, tg.time(i));
    for (int j = 0; j < pg.modes(); ++j) f.at(i, j) = u[j];
    f.at(i, pg.modes()) = u[0];
  }
  return f;
}

PideProblem heat_problem() {
  PideProblem pb;
  pb.mode = PideMode::linear_fk;
  pb.triple = LevyTriple::brownian(1);
  pb.G = [](double, std::span<const double> x, std::span<const double>, std::span<double> out) {
    out[0] = 0.5 * std::sin(x[0]);
  };
  pb.F = [](double, std::span<const double> x, std::span<const double>, std::span<double> out) {
    out[0] = 0.2 * std::cos(x[0]);
  };
  pb.G_depends_on_u = pb.F_depends_on_u = false;
  pb.H = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  pb.phi = terminal([](double x) { return std::exp(-x * x); });
  return pb;
}

}  // namespace

TEST(WeakResidual, ZeroFieldIsExact) {
  PideProblem pb;
  pb.triple = LevyTriple::alpha_stable(1, 1.5, 1.0);
  pb.phi = terminal([](double) { return 0.0; });
  const SpaceTimeField zero(SpaceGrid(-3.0, 3.0, 61), TimeGrid(-0.5, 1.0 / 16));
  const auto tests = bumps();
  const auto r = weak_residual(zero, pb, tests, -0.5);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(WeakResidual, SolverOutputAndCorruptedControl) {
  const auto pb = heat_problem();
  SolverConfig cfg;
  cfg.space = SpaceGrid(-3.0, 3.0, 121);
  cfg.horizon = -0.5;
  cfg.dt = 1.0 / 32;
  cfg.substeps = 2;
  cfg.particles = 20000;
  cfg.seed = 21;
  const auto sol = solve_linear_fk(pb, cfg);
  const auto tests = bumps();
  const auto ok = weak_residual(sol.field, pb, tests, -0.5, sol.report.std_errors);
  EXPECT_LE(ok.residual, ok.tolerance);
  EXPECT_GT(ok.tolerance, 0.0);

  SpaceTimeField bad = sol.field;
  const auto bump = bump_test_function({0.0}, 1.0);
  for (int i = 0; i < bad.time().nodes(); ++i) {
    for (std::size_t n = 0; n < bad.space().size(); ++n) bad.at(i, n) += 0.1 * bump.psi(bad.space().node(n));
  }
  const auto broken = weak_residual(bad, pb, tests, -0.5, sol.report.std_errors);
  EXPECT_GT(broken.residual, broken.tolerance);
}

TEST(WeakResidual, TransformOracleField) {
  PideProblem pb;
  pb.triple = LevyTriple::alpha_stable_with_multiplier(1, 1.5, 0.5);
  pb.phi = terminal([](double x) { return std::cos(x) + std::sin(2 * x); });
  const oracle::PeriodicSpectralGrid pg(128);
  const auto f = convolution_field(pb.triple, pg, TimeGrid(-0.5, 1.0 / 64),
                                   [](double x) { return std::cos(x) + std::sin(2 * x); });
  const auto tests = bumps();
  const auto r = weak_residual(f, pb, tests, -0.5);
  EXPECT_LE(r.residual, r.tolerance);
  EXPECT_LT(r.tolerance, 1e-2);
}

TEST(StrongResidual, ConstantField) {
  PideProblem pb;
  pb.triple = LevyTriple::alpha_stable(1, 1.5, 1.0);
  pb.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) { out[0] = -u[0]; };
  pb.phi = terminal([](double) { return 1.0; });
  const SpaceTimeField c(SpaceGrid(-2.0, 2.0, 41), TimeGrid(-0.5, 1.0 / 16), 1, 1.0);
  const double x = 0.0;
  const auto r = strong_residual(c, pb, -0.25, {&x, 1});
  EXPECT_NEAR(r.residual[0], 0.0, 1e-6);
  EXPECT_LE(std::abs(r.residual[0]), r.tolerance);
}

TEST(StrongResidual, TransformOracleField) {
  for (double alpha : {2.0, 1.5, 0.8}) {
    PideProblem pb;
    pb.triple = alpha == 2.0 ? LevyTriple::brownian(1) : LevyTriple::alpha_stable_with_multiplier(1, alpha, 0.5);
    pb.phi = terminal([](double x) { return std::cos(x) + 0.5 * std::sin(2 * x); });
    const oracle::PeriodicSpectralGrid pg(128);
    const auto f = convolution_field(pb.triple, pg, TimeGrid(-0.5, 1.0 / 256),
                                     [](double x) { return std::cos(x) + 0.5 * std::sin(2 * x); });
    for (double x : {-1.0 * kPi / 4, 0.0, kPi / 2}) {
      const auto r = strong_residual(f, pb, -0.25, {&x, 1});
      EXPECT_LE(std::abs(r.residual[0]), r.tolerance) << "alpha " << alpha << " x " << x;
      EXPECT_LT(r.tolerance, 0.05);
    }
  }
}

TEST(StrongResidual, BurgersSolverOutput) {
  PideProblem pb;
  pb.triple = LevyTriple::brownian(1, 1.0);
  pb.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) { out[0] = -u[0]; };
  pb.F_depends_on_u = false;
  pb.phi = terminal([](double x) { return std::sin(x); });
  SolverConfig cfg;
  cfg.space = SpaceGrid(-kPi, kPi, 65, true);
  cfg.horizon = -0.5;
  cfg.dt = 1.0 / 64;
  cfg.substeps = 2;
  cfg.particles = 20000;
  cfg.seed = 31;
  const auto sol = solve_semilinear(pb, cfg);
  const double t = -0.25, x = 0.0;
  const int i = sol.field.time().index_of(t);
  const auto r = strong_residual(sol.field, pb, t, {&x, 1}, sol.report.std_errors[i]);
  EXPECT_LE(std::abs(r.residual[0]), r.tolerance);
}

TEST(StrongResidual, DetectsWrongEquation) {
  // The heat solution checked against an equation with an extra source term.
  PideProblem pb;
  pb.triple = LevyTriple::brownian(1);
  pb.phi = terminal([](double x) { return std::cos(x); });
  const oracle::PeriodicSpectralGrid pg(64);
  const auto f = convolution_field(pb.triple, pg, TimeGrid(-0.5, 1.0 / 256), [](double x) { return std::cos(x); });
  pb.F = [](double, std::span<const double>, std::span<const double>, std::span<double> out) { out[0] = 0.2; };
  const double x = 0.0;
  const auto r = strong_residual(f, pb, -0.25, {&x, 1});
  EXPECT_GT(std::abs(r.residual[0]), r.tolerance);
  EXPECT_NEAR(r.residual[0], 0.2, r.tolerance);
}
