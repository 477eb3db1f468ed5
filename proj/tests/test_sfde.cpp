#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "levypide/errors.hpp"
#include "levypide/pide.hpp"
#include "levypide/sfde.hpp"
#include "levypide/stats.hpp"

using namespace levypide;

namespace {

CoefficientFn constant(double c) {
  return [c](double, std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), c); };
}

std::vector<double> finals(CouplingMode mode, const CoefficientFn& c, const LevyTriple& triple, double t, double x,
                           const TimeGrid& grid, std::size_t n, std::uint64_t seed, std::uint64_t offset = 0) {
  std::vector<double> out(n);
  PathOptions opt;
  opt.record_states = false;
  for (std::size_t p = 0; p < n; ++p) {
    out[p] = simulate_path(mode, c, triple, t, {&x, 1}, grid, seed, offset + p, opt).final_state()[0];
  }
  return out;
}

}  // namespace

TEST(SimulatePath, ZeroCoefficientFreezesGeneralCoupling) {
  const TimeGrid grid(-1.0, 1.0 / 32);
  const auto triple = LevyTriple::alpha_stable(1, 1.5, 1.0);
  const double x = 0.7;
  const auto path = simulate_path(CouplingMode::general, constant(0.0), triple, -1.0, {&x, 1}, grid, 1, 0);
  ASSERT_EQ(path.times.size(), 33u);
  for (std::size_t i = 0; i < path.times.size(); ++i) EXPECT_EQ(path.state(i)[0], x);
}

TEST(SimulatePath, DeterministicDrift) {
  const TimeGrid grid(-1.0, 1.0 / 16);
  const LevyTriple triple(Eigen::VectorXd::Constant(1, 0.25), Eigen::MatrixXd::Zero(1, 1));
  const double x = -0.3, g = 1.5;
  const auto path = simulate_path(CouplingMode::drift_only, constant(g), triple, -1.0, {&x, 1}, grid, 1, 0);
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    EXPECT_NEAR(path.state(i)[0], x + (g + 0.25) * (path.times[i] + 1.0), 1e-13);
  }
}

TEST(SimulatePath, TimesRunForwardToEnd) {
  const TimeGrid grid(-1.0, 0.25);
  const double x = 0.0;
  PathOptions opt;
  opt.end_time = -0.25;
  const auto path =
      simulate_path(CouplingMode::drift_only, constant(0.0), LevyTriple::brownian(1), -1.0, {&x, 1}, grid, 1, 0, opt);
  EXPECT_EQ(path.times, (std::vector<double>{-1.0, -0.75, -0.5, -0.25}));
}

// E X_{t,0} = x e^t for dX = -X ds + dB.
TEST(SimulatePath, OrnsteinUhlenbeckMean) {
  const double dt = 1.0 / 64, t = -1.0, x = 1.5;
  const TimeGrid grid(t, dt);
  const auto drift = [](double, std::span<const double> y, std::span<double> out) { out[0] = -y[0]; };
  const auto v = finals(CouplingMode::drift_only, drift, LevyTriple::brownian(1), t, x, grid, 100000, 11);
  const auto s = summarize(v);
  // Euler mean is x (1 - dt)^{|t|/dt}; the bias against x e^t is O(dt).
  const double bias = std::abs(x * std::pow(1 - dt, -t / dt) - x * std::exp(t));
  EXPECT_NEAR(s.mean, x * std::exp(t), 3 * s.std_error + bias);
  EXPECT_NEAR(s.mean, x * std::pow(1 - dt, -t / dt), 3 * s.std_error);
}

TEST(SimulatePath, Reproducible) {
  const TimeGrid grid(-0.5, 1.0 / 32);
  const auto triple = LevyTriple::alpha_stable(1, 1.2, 1.0);
  const double x = 0.0;
  const auto sin_c = [](double, std::span<const double> y, std::span<double> out) { out[0] = std::sin(y[0]); };
  const auto a = simulate_path(CouplingMode::drift_only, sin_c, triple, -0.5, {&x, 1}, grid, 5, 3);
  const auto b = simulate_path(CouplingMode::drift_only, sin_c, triple, -0.5, {&x, 1}, grid, 5, 3);
  const auto c = simulate_path(CouplingMode::drift_only, sin_c, triple, -0.5, {&x, 1}, grid, 5, 4);
  EXPECT_EQ(a.states, b.states);
  EXPECT_NE(a.states, c.states);
  EXPECT_EQ(a.big_jumps.size(), b.big_jumps.size());
}

// The noise of a step depends only on the interval it covers, not on where the path started.
TEST(SimulatePath, NoiseKeyedByInterval) {
  const TimeGrid grid(-1.0, 1.0 / 8);
  const auto triple = LevyTriple::brownian(1);
  const double x = 0.0;
  const auto whole = simulate_path(CouplingMode::general, constant(1.0), triple, -1.0, {&x, 1}, grid, 2, 0);
  const auto late = simulate_path(CouplingMode::general, constant(1.0), triple, -0.5, {&x, 1}, grid, 2, 0);
  const double mid = whole.state(4)[0];
  for (std::size_t i = 0; i < late.times.size(); ++i) {
    EXPECT_NEAR(late.state(i)[0], whole.state(i + 4)[0] - mid, 1e-14);
  }
  EXPECT_EQ(interval_index(-0.5, 1.0 / 8), 4u);
}

TEST(SimulatePath, MonotoneInStartingPoint) {
  const double dt = 1.0 / 32;
  const TimeGrid grid(-1.0, dt);
  const auto triple = LevyTriple::alpha_stable(1, 1.5, 1.0);
  // Lipschitz constant 3, 3 dt < 1.
  const auto drift = [](double, std::span<const double> y, std::span<double> out) { out[0] = 3 * std::sin(y[0]); };
  for (std::uint64_t stream = 0; stream < 200; ++stream) {
    double prev = -INFINITY;
    for (double x = -2.0; x <= 2.0; x += 0.1) {
      const auto path = simulate_path(CouplingMode::drift_only, drift, triple, -1.0, {&x, 1}, grid, 8, stream);
      const double end = path.final_state()[0];
      ASSERT_GE(end, prev);
      prev = end;
    }
  }
}

TEST(SimulatePath, ConstantBigJumpSeparatesLargeJumps) {
  const TimeGrid grid(-1.0, 1.0 / 16);
  const auto triple = LevyTriple::alpha_stable(1, 0.8, 1.0);
  const double x = 0.0;
  const int paths = 200;
  std::size_t jumps = 0;
  for (int p = 0; p < paths; ++p) {
    // Zero coupling leaves only the uncoupled big jumps.
    const auto path = simulate_path(CouplingMode::constant_big_jump, constant(0.0), triple, -1.0, {&x, 1}, grid, 4, p);
    double sum = 0.0;
    for (const auto& j : path.big_jumps) sum += j.size[0];
    EXPECT_NEAR(path.final_state()[0], sum, 1e-9 * (1 + std::abs(sum)));
    jumps += path.big_jumps.size();
  }
  // Steps carrying at least one jump of size >= 1; nu(|z| >= 1) = 2 / alpha at unit scale.
  const double q = 1 - std::exp(-2.0 / 0.8 * grid.dt());
  const double n = paths * 16.0;
  EXPECT_NEAR(static_cast<double>(jumps), n * q, 4 * std::sqrt(n * q * (1 - q)));
}

TEST(SimulatePath, WritesCsv) {
  const TimeGrid grid(-0.25, 1.0 / 8);
  const double x = 1.0;
  const auto path =
      simulate_path(CouplingMode::drift_only, constant(0.0), LevyTriple::zero(1), -0.25, {&x, 1}, grid, 1, 0);
  const auto file = std::filesystem::temp_directory_path() / "levypide_test_path.csv";
  write_path_csv(path, file.string());
  std::ifstream in(file);
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "s,x0,jump");
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  EXPECT_EQ(rows, 3);
  std::filesystem::remove(file);
}

TEST(CouplingGate, RejectsHeavyTailsForGeneralCoupling) {
  EXPECT_THROW(require_coupling_allowed(CouplingMode::general, LevyTriple::alpha_stable(1, 0.8, 1.0)), ModeError);
  EXPECT_NO_THROW(require_coupling_allowed(CouplingMode::general, LevyTriple::alpha_stable(1, 1.5, 1.0)));
  EXPECT_NO_THROW(require_coupling_allowed(CouplingMode::constant_big_jump, LevyTriple::alpha_stable(1, 0.8, 1.0)));
  EXPECT_NO_THROW(require_coupling_allowed(CouplingMode::general, LevyTriple::brownian(2)));
}

TEST(FlowTest, ZeroCoefficient) {
  const TimeGrid grid(-1.0, 1.0 / 32);
  const double x = 0.2;
  const auto r = flow_test(CouplingMode::general, constant(0.0), LevyTriple::alpha_stable(1, 1.5, 1.0), -1.0, -0.5,
                           0.0, {&x, 1}, 500, grid, 3);
  EXPECT_EQ(r.pathwise_gap, 0.0);
}

TEST(FlowTest, DeterministicDrift) {
  const TimeGrid grid(-1.0, 1.0 / 32);
  const double x = 0.2;
  const auto drift = [](double, std::span<const double> y, std::span<double> out) { out[0] = 1 - y[0] * y[0]; };
  const auto r = flow_test(CouplingMode::drift_only, drift, LevyTriple::zero(1), -1.0, -0.25, 0.0, {&x, 1}, 10, grid, 3);
  EXPECT_EQ(r.pathwise_gap, 0.0);
}

TEST(FlowTest, SineDriftBrownian) {
  const TimeGrid grid(-1.0, 1.0 / 64);
  const double x = 0.4;
  const auto drift = [](double, std::span<const double> y, std::span<double> out) { out[0] = std::sin(y[0]); };
  const auto r =
      flow_test(CouplingMode::drift_only, drift, LevyTriple::brownian(1), -1.0, -0.5, 0.0, {&x, 1}, 10000, grid, 17);
  EXPECT_LE(r.pathwise_gap, 1e-12);
  EXPECT_LT(r.ks_statistic, r.ks_critical);
  EXPECT_EQ(r.paths, 10000u);
}

TEST(FlowTest, GeneralCouplingStable) {
  const TimeGrid grid(-1.0, 1.0 / 32);
  const double x = 0.0;
  const auto c = [](double, std::span<const double> y, std::span<double> out) { out[0] = 1 + 0.5 * std::cos(y[0]); };
  const auto r = flow_test(CouplingMode::general, c, LevyTriple::alpha_stable(1, 1.5, 0.5), -1.0, -0.375, 0.0, {&x, 1},
                           5000, grid, 23);
  EXPECT_LE(r.pathwise_gap, 1e-12);
  EXPECT_LT(r.ks_statistic, r.ks_critical);
}

namespace {

PideProblem scalar_problem(LevyTriple triple, FieldCoefficientFn G, double c) {
  PideProblem pb;
  pb.triple = std::move(triple);
  pb.G = std::move(G);
  pb.phi = [c](std::span<const double>, std::span<double> out) { out[0] = c; };
  return pb;
}

}  // namespace

TEST(Nested, ConstantFrozenFieldIsExact) {
  const TimeGrid grid(-0.5, 1.0 / 16);
  const SpaceTimeField frozen(SpaceGrid(-3.0, 3.0, 31), grid, 1, 0.75);
  const auto pb = scalar_problem(
      LevyTriple::brownian(1),
      [](double, std::span<const double>, std::span<const double> u, std::span<double> out) { out[0] = -u[0]; }, 0.75);
  const double x = 0.1;
  const auto r = nested_conditional_simulate(pb, frozen, -0.5, {&x, 1}, 20, 10, grid, 4);
  EXPECT_EQ(r.max_gap, 0.0);
  EXPECT_EQ(r.inner_std_error, 0.0);
  EXPECT_EQ(r.paths.size(), 20u);
}

TEST(Nested, UIndependentDriftMatchesSimulatePath) {
  const TimeGrid grid(-0.5, 1.0 / 8);
  const SpaceTimeField frozen(SpaceGrid(-3.0, 3.0, 31), grid);
  const auto drift = [](double, std::span<const double> y, std::span<double> out) { out[0] = std::sin(y[0]); };
  auto pb = scalar_problem(
      LevyTriple::brownian(1),
      [drift](double s, std::span<const double> y, std::span<const double>, std::span<double> out) {
        drift(s, y, out);
      },
      0.0);
  pb.G_depends_on_u = false;
  const double x = 0.3;
  const std::size_t n = 2000;
  const auto r = nested_conditional_simulate(pb, frozen, -0.5, {&x, 1}, n, 2, grid, 6);
  std::vector<double> nested(n);
  for (std::size_t p = 0; p < n; ++p) nested[p] = r.paths[p].final_state()[0];
  const auto direct = finals(CouplingMode::drift_only, drift, pb.triple, -0.5, x, grid, n, 99);
  EXPECT_LT(ks_statistic(nested, direct), ks_critical_value(n, n, 0.01));
}

TEST(Nested, BudgetEnforced) {
  const TimeGrid grid(-1.0, 1.0 / 64);
  const SpaceTimeField frozen(SpaceGrid(-3.0, 3.0, 31), grid);
  const auto pb = scalar_problem(LevyTriple::brownian(1), {}, 0.0);
  const double x = 0.0;
  // 100 * 100 * 64^2 > 1e6
  EXPECT_THROW(nested_conditional_simulate(pb, frozen, -1.0, {&x, 1}, 100, 100, grid, 1), BudgetExceeded);
}
