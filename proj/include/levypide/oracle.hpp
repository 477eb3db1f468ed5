#pragma once

#include <functional>
#include <vector>

#include "levypide/field.hpp"
#include "levypide/levy.hpp"

namespace levypide::oracle {

struct ColeHopfValue {
  double value = 0.0;
  double error = 0.0;  ///< |Q_n - Q_2n| between Gauss-Hermite orders n and 2n.
};

/// u_t(x) for du/dt + nu u_xx - u u_x = 0 on t <= 0 with u_0 = phi, by the
/// Cole-Hopf transform and Gauss-Hermite quadrature. The antiderivative of
/// phi is computed by adaptive quadrature unless `antiderivative` is given.
/// Orders above 75 are rejected. Throws QuadratureError if the error estimate exceeds `tolerance`.
ColeHopfValue cole_hopf_burgers(const std::function<double(double)>& phi, double nu, double t, double x,
                                int order = 64, double tolerance = 1e-9,
                                const std::function<double(double)>& antiderivative = {});

/// Collocation grid x_j = -pi L + 2 pi L j / n on the torus of period 2 pi L.
class PeriodicSpectralGrid {
 public:
  explicit PeriodicSpectralGrid(int modes, double period_scale = 1.0);

  int modes() const { return n_; }
  double period_scale() const { return scale_; }
  double period() const;
  double node(int j) const;
  std::vector<double> nodes() const;
  /// Wavenumber of FFT bin j (0..n/2) in units of 1/length.
  double wavenumber(int j) const { return j / scale_; }
  /// Same box as a SpaceGrid with n + 1 periodic nodes (last = first).
  SpaceGrid space_grid() const;

 private:
  int n_;
  double scale_;
};

/// du/dt + nu D^{alpha/2} u - c u u_x + F(x, u) = 0 on t <= 0, with D^{alpha/2}
/// the Fourier multiplier -|xi|^alpha and c = `advection` (1 for Burgers, 0
/// for the linear equation). The advection term is evaluated in divergence
/// form (u^2 / 2)_x, so with F = 0 the spatial mean is conserved.
struct SpectralProblem {
  double nu = 0.5;
  double alpha = 2.0;
  double advection = 1.0;
  std::function<double(double)> phi;
  std::function<double(double, double)> source;  ///< F(x, u); empty means zero.
};

struct SpectralOptions {
  double dt = 1e-3;          ///< ETDRK4 step.
  double output_dt = 0.0;    ///< Spacing of stored slices; 0 stores every step.
  double tail_fraction = 1e-6;  ///< BlowupSuspected once the tail holds this share of the energy.
};

/// Pseudo-spectral ETDRK4 with 2/3 dealiasing, resampled onto
/// grid.space_grid() and a time grid from 0 to t_end.
SpaceTimeField spectral_fractal_solve(const SpectralProblem& problem, const PeriodicSpectralGrid& grid, double t_end,
                                      const SpectralOptions& options = {});

/// E phi(x + L_{|t|}) for a one-dimensional triple, as the inverse transform of
/// phi_hat(xi) exp(|t| Psi(xi)). `phi` holds values at grid.nodes().
std::vector<double> linear_convolution_solve(const LevyTriple& triple, const PeriodicSpectralGrid& grid,
                                             const std::vector<double>& phi, double t);

}  // namespace levypide::oracle
