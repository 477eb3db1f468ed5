#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <omp.h>

#include "levypide/errors.hpp"
#include "levypide/oracle.hpp"
#include "levypide/pide.hpp"

using namespace levypide;

namespace {

constexpr double kPi = std::numbers::pi;

FieldCoefficientFn constant_coefficient(double c) {
  return [c](double, std::span<const double>, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), c);
  };
}

TerminalFn terminal(std::function<double(double)> f) {
  return [f](std::span<const double> x, std::span<double> out) { out[0] = f(x[0]); };
}

SolverConfig small_config(SpaceGrid space, double horizon, double dt, std::size_t particles, std::uint64_t seed) {
  SolverConfig c;
  c.space = std::move(space);
  c.horizon = horizon;
  c.dt = dt;
  c.particles = particles;
  c.seed = seed;
  c.substeps = 2;
  return c;
}

PideProblem burgers(double nu) {
  PideProblem pb;
  pb.triple = LevyTriple::brownian(1, 2 * nu);
  pb.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) { out[0] = -u[0]; };
  pb.F_depends_on_u = false;
  pb.phi = terminal([](double x) { return std::sin(x); });
  return pb;
}

double max_abs_diff(const SpaceTimeField& a, const SpaceTimeField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST(BlowupDetector, Examples) {
  const std::vector<double> flat{1.0, 1.0, 1.0, 1.0};
  EXPECT_FALSE(blow_up_detector(flat, 0.5).blow_up);
  const std::vector<double> zero{0.0, 0.0, 0.0};
  EXPECT_FALSE(blow_up_detector(zero, 0.0).blow_up);
  // Doubling across two windows above the threshold.
  const std::vector<double> growing{8.0, 10.0, 14.0, 30.0};
  const auto d = blow_up_detector(growing, 24.0);
  EXPECT_TRUE(d.blow_up);
  EXPECT_EQ(d.lipschitz, 30.0);
  EXPECT_EQ(d.previous, 10.0);
  // Above the threshold but growing slowly.
  const std::vector<double> slow{20.0, 26.0, 30.0};
  EXPECT_FALSE(blow_up_detector(slow, 24.0).blow_up);
  // Fast growth below the threshold.
  const std::vector<double> small{1.0, 3.0, 9.0};
  EXPECT_FALSE(blow_up_detector(small, 24.0).blow_up);
  const std::vector<double> single{5.0};
  EXPECT_FALSE(blow_up_detector(single, 0.0).blow_up);
}

TEST(Semilinear, ConstantTerminalIsPreserved) {
  PideProblem pb;
  pb.triple = LevyTriple::alpha_stable(1, 1.5, 1.0);
  pb.phi = terminal([](double) { return 2.5; });
  const auto r = solve_semilinear(pb, small_config(SpaceGrid(-2.0, 2.0, 21), -0.5, 1.0 / 16, 500, 1));
  for (double v : r.field.values()) EXPECT_EQ(v, 2.5);
  for (const auto& w : r.report.windows) {
    ASSERT_FALSE(w.residuals.empty());
    EXPECT_EQ(w.residuals.front(), 0.0);
    EXPECT_TRUE(w.converged);
  }
  EXPECT_FALSE(r.report.blow_up);
}

TEST(Semilinear, UnitSourceGivesElapsedTime) {
  PideProblem pb;
  pb.triple = LevyTriple::brownian(1);
  pb.phi = terminal([](double) { return 0.0; });
  pb.F = constant_coefficient(1.0);
  pb.F_depends_on_u = false;
  const auto r = solve_semilinear(pb, small_config(SpaceGrid(-2.0, 2.0, 21), -0.75, 1.0 / 16, 200, 2));
  for (int i = 0; i < r.field.time().nodes(); ++i) {
    for (std::size_t n = 0; n < r.field.space().size(); ++n) {
      EXPECT_NEAR(r.field.at(i, n), -r.field.time().time(i), 1e-12);
    }
  }
}

// u-independent G and F: the second iterate repeats the first under shared noise.
TEST(Semilinear, ModeReductionStopsAfterTwoIterations) {
  PideProblem pb;
  pb.triple = LevyTriple::alpha_stable(1, 1.5, 0.5);
  pb.G = [](double, std::span<const double> x, std::span<const double>, std::span<double> out) {
    out[0] = std::sin(x[0]);
  };
  pb.F = [](double, std::span<const double> x, std::span<const double>, std::span<double> out) {
    out[0] = 0.1 * std::cos(x[0]);
  };
  pb.G_depends_on_u = pb.F_depends_on_u = false;
  pb.phi = terminal([](double x) { return std::exp(-x * x); });
  auto cfg = small_config(SpaceGrid(-3.0, 3.0, 31), -0.5, 1.0 / 16, 2000, 3);
  cfg.tolerance = 1e-14;
  const auto r = solve_semilinear(pb, cfg);
  ASSERT_FALSE(r.report.windows.empty());
  for (const auto& w : r.report.windows) {
    ASSERT_EQ(w.residuals.size(), 2u);
    EXPECT_EQ(w.residuals[1], 0.0);
  }
}

TEST(Semilinear, BurgersContractsGeometrically) {
  auto cfg = small_config(SpaceGrid(-kPi, kPi, 33, true), -0.5, 1.0 / 32, 2000, 4);
  cfg.tolerance = 1e-6;
  const auto r = solve_semilinear(burgers(0.5), cfg);
  EXPECT_TRUE(r.report.rejected_windows.empty());
  for (const auto& w : r.report.windows) {
    EXPECT_TRUE(w.converged);
    EXPECT_LT(w.contraction_ratio, 1.0);
    for (std::size_t n = 2; n < w.residuals.size(); ++n) EXPECT_LT(w.residuals[n], w.residuals[n - 1]);
  }
  EXPECT_EQ(r.report.apriori_violations, 0u);
  EXPECT_GT(r.report.apriori_checks, 0u);
  EXPECT_EQ(r.report.completed_time, -0.5);
}

TEST(Semilinear, BurgersNearColeHopf) {
  auto cfg = small_config(SpaceGrid(-kPi, kPi, 65, true), -0.25, 1.0 / 64, 20000, 5);
  cfg.tolerance = 1e-3;
  const auto r = solve_semilinear(burgers(0.5), cfg);
  double gap = 0.0;
  const int last = r.field.time().steps();
  for (std::size_t n = 0; n < r.field.space().size(); ++n) {
    const double x = r.field.space().coordinate(0, static_cast<int>(n));
    const auto ref = oracle::cole_hopf_burgers([](double y) { return std::sin(y); }, 0.5, -0.25, x);
    gap = std::max(gap, std::abs(r.field.at(last, n) - ref.value));
  }
  // MC error at 2e4 particles plus the O(dt) Euler bias.
  EXPECT_LT(gap, 4 * r.report.std_errors.back() + 0.02);
}

TEST(Semilinear, CommonRandomNumbersAreReproducible) {
  auto cfg = small_config(SpaceGrid(-kPi, kPi, 17, true), -0.25, 1.0 / 16, 1000, 6);
  const auto a = solve_semilinear(burgers(0.5), cfg);
  const auto b = solve_semilinear(burgers(0.5), cfg);
  EXPECT_EQ(a.field.values(), b.field.values());
  ASSERT_EQ(a.report.windows.size(), b.report.windows.size());
  for (std::size_t w = 0; w < a.report.windows.size(); ++w) {
    EXPECT_EQ(a.report.windows[w].residuals, b.report.windows[w].residuals);
  }
}

TEST(Semilinear, SerialMatchesParallel) {
  auto cfg = small_config(SpaceGrid(-kPi, kPi, 17, true), -0.25, 1.0 / 16, 1000, 7);
  cfg.parallel = true;
  omp_set_num_threads(4);
  const auto a = solve_semilinear(burgers(0.5), cfg);
  cfg.parallel = false;
  const auto b = solve_semilinear(burgers(0.5), cfg);
  EXPECT_EQ(a.field.values(), b.field.values());
}

TEST(Semilinear, NonnegativeDataStayNonnegative) {
  PideProblem pb;
  pb.triple = LevyTriple::alpha_stable_with_multiplier(1, 1.5, 0.5);
  pb.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) { out[0] = -u[0]; };
  pb.F = [](double, std::span<const double> x, std::span<const double> u, std::span<double> out) {
    out[0] = 0.25 * u[0] * u[0] + 0.1 * (1 + std::sin(x[0]));
  };
  pb.phi = terminal([](double x) { return std::exp(-2 * x * x); });
  const auto r = solve_semilinear(pb, small_config(SpaceGrid(-3.0, 3.0, 31), -0.5, 1.0 / 16, 2000, 8));
  for (int i = 0; i < r.field.time().nodes(); ++i) {
    EXPECT_GE(r.field.min_value(i), -(3 * r.report.std_errors[i] + r.report.interpolation_bounds[i]));
  }
  EXPECT_EQ(r.report.apriori_violations, 0u);
}

TEST(Semilinear, NonContractionCarriesReport) {
  auto cfg = small_config(SpaceGrid(-kPi, kPi, 17, true), -0.5, 1.0 / 16, 500, 9);
  cfg.max_iterations = 1;
  cfg.tolerance = 1e-12;
  try {
    solve_semilinear(burgers(0.5), cfg);
    FAIL() << "expected NonContraction";
  } catch (const NonContraction& e) {
    // The initial window already equals the 4 dt floor, so one rejection ends the solve.
    EXPECT_EQ(e.report().rejected_windows.size(), 1u);
    EXPECT_FALSE(e.report().rejected_windows.empty());
    EXPECT_EQ(e.report().completed_time, 0.0);
  }
}

TEST(Semilinear, BudgetEnforced) {
  auto cfg = small_config(SpaceGrid(-kPi, kPi, 17, true), -0.5, 1.0 / 16, 1000, 9);
  cfg.max_particle_steps = 1e4;
  EXPECT_THROW(solve_semilinear(burgers(0.5), cfg), BudgetExceeded);
}

TEST(LinearFk, ScalarOdeWithoutNoise) {
  const double lambda = 0.8;
  PideProblem pb;
  pb.mode = PideMode::linear_fk;
  pb.triple = LevyTriple::zero(1);
  pb.G_depends_on_u = pb.F_depends_on_u = false;
  pb.H = [lambda](double, std::span<const double>, std::span<double> out) { out[0] = lambda; };
  pb.phi = terminal([](double) { return 1.0; });
  std::vector<double> errors;
  for (double dt : {1.0 / 16, 1.0 / 32}) {
    const auto r = solve_linear_fk(pb, small_config(SpaceGrid(-1.0, 1.0, 5), -1.0, dt, 10, 1));
    double err = 0.0;
    for (int i = 0; i < r.field.time().nodes(); ++i) {
      err = std::max(err, std::abs(r.field.at(i, 2) - std::exp(-lambda * r.field.time().time(i))));
    }
    errors.push_back(err);
    EXPECT_LT(err, lambda * lambda * std::exp(lambda) * dt);
  }
  EXPECT_NEAR(errors[0] / errors[1], 2.0, 0.2);
}

TEST(LinearFk, CosineAgainstConvolution) {
  const double lambda = 0.5, t = -0.5;
  PideProblem pb;
  pb.mode = PideMode::linear_fk;
  pb.triple = LevyTriple::brownian(1);
  pb.G_depends_on_u = pb.F_depends_on_u = false;
  pb.H = [lambda](double, std::span<const double>, std::span<double> out) { out[0] = lambda; };
  pb.phi = terminal([](double x) { return std::cos(x); });
  const oracle::PeriodicSpectralGrid pg(64);
  auto cfg = small_config(pg.space_grid(), t, 1.0 / 32, 20000, 10);
  cfg.substeps = 4;
  const auto r = solve_linear_fk(pb, cfg);
  std::vector<double> phi;
  for (double x : pg.nodes()) phi.push_back(std::cos(x));
  const auto ref = oracle::linear_convolution_solve(pb.triple, pg, phi, t);
  const int last = r.field.time().steps();
  double gap = 0.0;
  for (int j = 0; j < pg.modes(); ++j) gap = std::max(gap, std::abs(r.field.at(last, j) - std::exp(lambda * 0.5) * ref[j]));
  // Euler error of the multiplicative weight, lambda^2 |t| e^{lambda |t|} dt / (2 E).
  const double euler = lambda * lambda * 0.5 * std::exp(lambda * 0.5) * cfg.dt / (2 * cfg.substeps);
  EXPECT_LE(gap, 3 * r.report.std_errors.back() + r.report.interpolation_bounds.back() + euler);
}

TEST(LinearFk, ZeroPotentialMatchesSemilinear) {
  PideProblem pb;
  pb.mode = PideMode::linear_fk;
  pb.triple = LevyTriple::alpha_stable(1, 1.5, 0.5);
  pb.G = [](double, std::span<const double> x, std::span<const double>, std::span<double> out) {
    out[0] = 0.5 * std::cos(x[0]);
  };
  pb.F = [](double, std::span<const double> x, std::span<const double>, std::span<double> out) {
    out[0] = std::sin(x[0]);
  };
  pb.G_depends_on_u = pb.F_depends_on_u = false;
  pb.H = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  pb.phi = terminal([](double x) { return std::exp(-x * x); });
  const auto cfg = small_config(SpaceGrid(-3.0, 3.0, 31), -0.5, 1.0 / 16, 2000, 11);
  const auto a = solve_linear_fk(pb, cfg);
  pb.mode = PideMode::semilinear;
  pb.H = {};
  const auto b = solve_semilinear(pb, cfg);
  EXPECT_LE(max_abs_diff(a.field, b.field), 1e-12);
}

TEST(Quasilinear, HeavyTailsRejectedForGeneralCoupling) {
  PideProblem pb;
  pb.mode = PideMode::quasilinear_general;
  pb.triple = LevyTriple::alpha_stable(1, 0.8, 1.0);
  pb.G = constant_coefficient(1.0);
  pb.phi = terminal([](double x) { return std::exp(-x * x); });
  EXPECT_THROW(solve(pb, small_config(SpaceGrid(-2.0, 2.0, 9), -0.25, 1.0 / 16, 100, 1)), ModeError);
}

TEST(Quasilinear, ZeroCouplingFreezesTerminalData) {
  PideProblem pb;
  pb.mode = PideMode::quasilinear_general;
  pb.triple = LevyTriple::alpha_stable(1, 1.5, 1.0);
  pb.G = constant_coefficient(0.0);
  pb.phi = terminal([](double x) { return std::exp(-x * x); });
  const auto r = solve(pb, small_config(SpaceGrid(-2.0, 2.0, 21), -0.5, 1.0 / 16, 500, 2));
  for (int i = 0; i < r.field.time().nodes(); ++i) {
    for (std::size_t n = 0; n < r.field.space().size(); ++n) EXPECT_EQ(r.field.at(i, n), r.field.at(0, n));
  }
  EXPECT_FALSE(r.report.notes.empty());
}

TEST(Quasilinear, IdentityCouplingIsLinear) {
  PideProblem pb;
  pb.mode = PideMode::quasilinear_general;
  pb.triple = LevyTriple::alpha_stable_with_multiplier(1, 1.5, 0.5);
  pb.G = constant_coefficient(1.0);
  pb.G_depends_on_u = false;
  pb.F = constant_coefficient(0.2);
  pb.F_depends_on_u = false;
  pb.phi = terminal([](double x) { return std::cos(x) + 0.5 * std::sin(2 * x); });
  const oracle::PeriodicSpectralGrid pg(64);
  const double t = -0.5;
  const auto r = solve(pb, small_config(pg.space_grid(), t, 1.0 / 16, 20000, 12));
  std::vector<double> phi;
  for (double x : pg.nodes()) phi.push_back(std::cos(x) + 0.5 * std::sin(2 * x));
  const auto ref = oracle::linear_convolution_solve(pb.triple, pg, phi, t);
  const int last = r.field.time().steps();
  double gap = 0.0;
  for (int j = 0; j < pg.modes(); ++j) gap = std::max(gap, std::abs(r.field.at(last, j) - (ref[j] + 0.2 * 0.5)));
  EXPECT_LE(gap, 3 * r.report.std_errors.back() + r.report.interpolation_bounds.back());
}

TEST(Quasilinear, ConstantBigJumpFixedPoint) {
  PideProblem pb;
  pb.mode = PideMode::quasilinear_constant_big_jump;
  pb.triple = LevyTriple::alpha_stable(1, 0.8, 0.5);
  pb.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) {
    out[0] = 1 + 0.5 * std::tanh(u[0]);
  };
  pb.phi = terminal([](double x) { return std::exp(-x * x); });
  auto cfg = small_config(SpaceGrid(-4.0, 4.0, 65), -0.25, 1.0 / 32, 20000, 13);
  cfg.tolerance = 1e-5;
  const auto r = solve(pb, cfg);
  EXPECT_TRUE(r.report.rejected_windows.empty());
  for (const auto& w : r.report.windows) {
    EXPECT_TRUE(w.converged);
    EXPECT_LT(w.contraction_ratio, 1.0);
  }
  const double t = -0.125;
  const int i = r.field.time().index_of(t);
  int checked = 0;
  for (int j = 24; j <= 40; j += 2) {
    const double x = r.field.space().coordinate(0, j);
    const auto s = strong_residual(r.field, pb, t, {&x, 1}, r.report.std_errors[i]);
    EXPECT_LE(std::abs(s.residual[0]), s.tolerance) << "x = " << x;
    ++checked;
  }
  EXPECT_EQ(checked, 9);
}
