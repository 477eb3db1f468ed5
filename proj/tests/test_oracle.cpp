#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "levypide/levy.hpp"
#include "levypide/oracle.hpp"
#include "levypide/random.hpp"
#include "levypide/stats.hpp"

using namespace levypide;
using namespace levypide::oracle;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sample(const PeriodicSpectralGrid& g, double (*f)(double)) {
  std::vector<double> v;
  for (double x : g.nodes()) v.push_back(f(x));
  return v;
}

double slice_mean(const SpaceTimeField& f, int i) {
  // Drop the duplicated periodic endpoint.
  const std::size_t n = f.space().size() - 1;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += f.at(i, j);
  return s / static_cast<double>(n);
}

}  // namespace

TEST(ColeHopf, ZeroAndConstantData) {
  for (double x : {-1.0, 0.0, 2.5}) {
    EXPECT_NEAR(cole_hopf_burgers([](double) { return 0.0; }, 0.5, -0.7, x).value, 0.0, 1e-12);
    EXPECT_NEAR(cole_hopf_burgers([](double) { return 1.3; }, 0.5, -0.7, x).value, 1.3, 1e-10);
  }
}

TEST(ColeHopf, TerminalTimeReturnsData) {
  EXPECT_EQ(cole_hopf_burgers([](double x) { return std::sin(x); }, 0.5, 0.0, 0.3).value, std::sin(0.3));
}

TEST(ColeHopf, RejectsBadArguments) {
  const auto phi = [](double x) { return std::sin(x); };
  EXPECT_THROW(cole_hopf_burgers(phi, 0.5, -0.5, 0.0, 76), std::invalid_argument);
  EXPECT_THROW(cole_hopf_burgers(phi, 0.0, -0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(cole_hopf_burgers(phi, 0.5, 0.5, 0.0), std::invalid_argument);
}

TEST(ColeHopf, AgreesWithSpectralBurgers) {
  const PeriodicSpectralGrid g(128);
  SpectralProblem p;
  p.nu = 0.5;
  p.alpha = 2.0;
  p.phi = [](double x) { return std::sin(x); };
  SpectralOptions o;
  o.dt = 1.0 / 1024;
  o.output_dt = 1.0 / 16;
  const auto f = spectral_fractal_solve(p, g, -0.5, o);
  const int last = f.time().steps();
  for (int j : {5, 40, 64, 90, 127}) {
    const double x = g.node(j);
    const auto ch = cole_hopf_burgers(p.phi, 0.5, -0.5, x, 64, 1e-9, [](double y) { return 1.0 - std::cos(y); });
    EXPECT_NEAR(f.at(last, j), ch.value, 1e-6) << "x " << x;
  }
}

TEST(Spectral, LinearCosineIsExact) {
  const PeriodicSpectralGrid g(64);
  SpectralProblem p;
  p.nu = 0.5;
  p.alpha = 1.5;
  p.advection = 0.0;
  p.phi = [](double x) { return std::cos(x) + std::cos(2 * x); };
  SpectralOptions o;
  o.dt = 1.0 / 64;
  const auto f = spectral_fractal_solve(p, g, -0.5, o);
  const int last = f.time().steps();
  const double decay1 = std::exp(-0.5 * 0.5), decay2 = std::exp(-0.5 * std::pow(2.0, 1.5) * 0.5);
  for (std::size_t j = 0; j < f.space().size(); ++j) {
    const double x = f.space().node(j)[0];
    EXPECT_NEAR(f.at(last, j), decay1 * std::cos(x) + decay2 * std::cos(2 * x), 1e-13);
  }
}

TEST(Spectral, BurgersConservesMean) {
  const PeriodicSpectralGrid g(128);
  SpectralProblem p;
  p.nu = 0.3;
  p.alpha = 1.2;
  p.phi = [](double x) { return 0.5 + std::sin(x) + 0.3 * std::cos(3 * x); };
  SpectralOptions o;
  o.dt = 1.0 / 512;
  o.output_dt = 1.0 / 8;
  const auto f = spectral_fractal_solve(p, g, -0.5, o);
  for (int i = 0; i < f.time().nodes(); ++i) EXPECT_NEAR(slice_mean(f, i), 0.5, 1e-10);
}

TEST(Spectral, RejectsBadSteps) {
  const PeriodicSpectralGrid g(32);
  SpectralProblem p;
  p.phi = [](double x) { return std::sin(x); };
  SpectralOptions o;
  o.dt = 0.3;
  EXPECT_THROW(spectral_fractal_solve(p, g, -0.5, o), std::invalid_argument);
  EXPECT_THROW(spectral_fractal_solve(p, g, 0.5), std::invalid_argument);
  EXPECT_THROW(PeriodicSpectralGrid(48), std::invalid_argument);
}

TEST(Convolution, ZeroTimeReturnsData) {
  const PeriodicSpectralGrid g(64);
  const auto phi = sample(g, [](double x) { return std::exp(std::cos(x)); });
  const auto u = linear_convolution_solve(LevyTriple::alpha_stable(1, 1.3, 1.0), g, phi, 0.0);
  for (std::size_t j = 0; j < phi.size(); ++j) EXPECT_NEAR(u[j], phi[j], 1e-13);
}

TEST(Convolution, BrownianCosineDecay) {
  const PeriodicSpectralGrid g(32);
  const auto phi = sample(g, [](double x) { return std::cos(x); });
  const auto u = linear_convolution_solve(LevyTriple::brownian(1), g, phi, -0.8);
  for (int j = 0; j < g.modes(); ++j) EXPECT_NEAR(u[j], std::exp(-0.4) * std::cos(g.node(j)), 1e-14);
}

TEST(Convolution, Semigroup) {
  const PeriodicSpectralGrid g(128);
  const auto triple = LevyTriple::alpha_stable(1, 0.8, 1.0);
  const auto phi = sample(g, [](double x) { return std::exp(std::cos(x)) + std::sin(3 * x); });
  const auto once = linear_convolution_solve(triple, g, phi, -0.7);
  const auto twice = linear_convolution_solve(triple, g, linear_convolution_solve(triple, g, phi, -0.3), -0.4);
  for (std::size_t j = 0; j < once.size(); ++j) EXPECT_NEAR(once[j], twice[j], 1e-10);
}

TEST(Convolution, StableAgreesWithMonteCarlo) {
  const PeriodicSpectralGrid g(256);
  const auto triple = LevyTriple::alpha_stable(1, 1.2, 1.0);
  const auto f = [](double x) { return std::exp(std::cos(x)); };
  const auto u = linear_convolution_solve(triple, g, sample(g, f), -0.5);
  const int j0 = g.modes() / 2;  // x = 0
  ASSERT_NEAR(g.node(j0), 0.0, 1e-15);

  const NoiseStream noise(17, 0);
  std::vector<double> draws;
  for (std::uint64_t k = 0; k < 100000; ++k) draws.push_back(f(sample_increment(triple, 0.5, noise, k)[0]));
  const auto s = summarize(draws);
  EXPECT_NEAR(s.mean, u[j0], 3.0 * s.std_error + 1e-8);
}
