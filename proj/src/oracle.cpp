#include "levypide/oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "levypide/errors.hpp"
#include "levypide/quadrature.hpp"

namespace levypide::oracle {

namespace {

constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    real_ = fftw_alloc_real(n);
    spec_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(backward_);
    }
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void forward(const std::vector<double>& in, std::vector<cplx>& out) {
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(forward_);
    out.resize(n_ / 2 + 1);
    for (int j = 0; j <= n_ / 2; ++j) out[j] = {spec_[j][0], spec_[j][1]};
  }
  // Unnormalized by FFTW; divided by n here.
  void backward(const std::vector<cplx>& in, std::vector<double>& out) {
    for (int j = 0; j <= n_ / 2; ++j) {
      spec_[j][0] = in[j].real();
      spec_[j][1] = in[j].imag();
    }
    fftw_execute(backward_);
    out.resize(n_);
    for (int j = 0; j < n_; ++j) out[j] = real_[j] / n_;
  }

 private:
  int n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan forward_, backward_;
};

double cole_hopf_at_order(const std::function<double(double)>& Phi, double nu, double tau, double x, int order) {
  const auto gh = quad::gauss_hermite(order);
  const double scale = 2.0 * std::sqrt(nu * tau);
  std::vector<double> expo(order);
  double lowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < order; ++i) {
    expo[i] = Phi(x - scale * gh.nodes[i]) / (2.0 * nu);
    lowest = std::min(lowest, expo[i]);
  }
  double num = 0.0, den = 0.0;
  for (int i = 0; i < order; ++i) {
    const double w = gh.weights[i] * std::exp(lowest - expo[i]);
    num += w * gh.nodes[i];
    den += w;
  }
  return scale / tau * num / den;
}

}  // namespace

ColeHopfValue cole_hopf_burgers(const std::function<double(double)>& phi, double nu, double t, double x, int order,
                                double tolerance, const std::function<double(double)>& antiderivative) {
  if (!(nu > 0.0)) throw std::invalid_argument("cole_hopf_burgers: nu must be positive");
  if (t > 0.0) throw std::invalid_argument("cole_hopf_burgers: t must be <= 0");
  if (order < 2) throw std::invalid_argument("cole_hopf_burgers: order must be at least 2");
  if (t == 0.0) return {phi(x), 0.0};
  const double tau = -t;
  std::function<double(double)> Phi = antiderivative;
  if (!Phi) {
    Phi = [&phi](double y) {
      if (y == 0.0) return 0.0;
      return quad::integrate(phi, 0.0, y, 1e-13 * std::max(1.0, std::fabs(y))).value;
    };
  }
  const double coarse = cole_hopf_at_order(Phi, nu, tau, x, order);
  const double fine = cole_hopf_at_order(Phi, nu, tau, x, 2 * order);
  const double error = std::fabs(fine - coarse);
  if (!std::isfinite(fine) || error > tolerance) {
    throw QuadratureError("cole_hopf_burgers: Gauss-Hermite orders " + std::to_string(order) + " and " +
                              std::to_string(2 * order) + " disagree",
                          error);
  }
  return {fine, error};
}

PeriodicSpectralGrid::PeriodicSpectralGrid(int modes, double period_scale) : n_(modes), scale_(period_scale) {
  if (modes < 16 || (modes & (modes - 1)) != 0) {
    throw std::invalid_argument("PeriodicSpectralGrid: modes must be a power of two >= 16");
  }
  if (!(period_scale > 0.0)) throw std::invalid_argument("PeriodicSpectralGrid: period scale must be positive");
}

double PeriodicSpectralGrid::period() const { return 2.0 * kPi * scale_; }

double PeriodicSpectralGrid::node(int j) const { return -kPi * scale_ + period() * j / n_; }

std::vector<double> PeriodicSpectralGrid::nodes() const {
  std::vector<double> x(n_);
  for (int j = 0; j < n_; ++j) x[j] = node(j);
  return x;
}

SpaceGrid PeriodicSpectralGrid::space_grid() const { return SpaceGrid(-kPi * scale_, kPi * scale_, n_ + 1, true); }

SpaceTimeField spectral_fractal_solve(const SpectralProblem& problem, const PeriodicSpectralGrid& grid, double t_end,
                                      const SpectralOptions& options) {
  if (!problem.phi) throw std::invalid_argument("spectral_fractal_solve: phi is required");
  if (!(problem.nu >= 0.0) || !(problem.alpha > 0.0 && problem.alpha <= 2.0)) {
    throw std::invalid_argument("spectral_fractal_solve: need nu >= 0 and alpha in (0, 2]");
  }
  if (!(t_end < 0.0) || !(options.dt > 0.0)) throw std::invalid_argument("spectral_fractal_solve: need t_end < 0, dt > 0");
  const int n = grid.modes();
  const int half = n / 2;
  const double h = options.dt;
  const long steps = std::lround(-t_end / h);
  if (std::fabs(steps * h + t_end) > 1e-9 * std::fabs(t_end)) {
    throw std::invalid_argument("spectral_fractal_solve: |t_end| must be a multiple of dt");
  }
  const double out_dt = options.output_dt > 0.0 ? options.output_dt : h;
  const long stride = std::lround(out_dt / h);
  if (stride < 1 || std::fabs(stride * h - out_dt) > 1e-9 * out_dt || steps % stride != 0) {
    throw std::invalid_argument("spectral_fractal_solve: output_dt must be a multiple of dt dividing |t_end|");
  }

  // Linear multiplier and ETDRK4 coefficients by contour averaging.
  std::vector<double> L(half + 1), E(half + 1), E2(half + 1), Q(half + 1), f1(half + 1), f2(half + 1), f3(half + 1);
  std::vector<double> k(half + 1);
  const int contour = 32;
  for (int j = 0; j <= half; ++j) {
    k[j] = grid.wavenumber(j);
    L[j] = -problem.nu * std::pow(std::fabs(k[j]), problem.alpha);
    E[j] = std::exp(h * L[j]);
    E2[j] = std::exp(0.5 * h * L[j]);
    cplx q = 0.0, a = 0.0, b = 0.0, c = 0.0;
    for (int r = 0; r < contour; ++r) {
      const cplx z = h * L[j] + std::exp(cplx(0.0, kPi * (r + 0.5) / contour));
      const cplx ez = std::exp(z);
      q += (std::exp(0.5 * z) - 1.0) / z;
      a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / (z * z * z);
      b += (2.0 + z + ez * (z - 2.0)) / (z * z * z);
      c += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / (z * z * z);
    }
    Q[j] = h * (q / double(contour)).real();
    f1[j] = h * (a / double(contour)).real();
    f2[j] = h * (b / double(contour)).real();
    f3[j] = h * (c / double(contour)).real();
  }
  const int cutoff = n / 3;

  RealFft fft(n);
  const auto x = grid.nodes();
  std::vector<double> w(n), work(n);
  for (int j = 0; j < n; ++j) w[j] = problem.phi(x[j]);
  std::vector<cplx> v, nv, na, nb, nc, a(half + 1), b(half + 1), c(half + 1), tmp;
  fft.forward(w, v);

  const bool nonlinear = problem.advection != 0.0 || static_cast<bool>(problem.source);
  auto N = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
    out.assign(half + 1, 0.0);
    if (!nonlinear) return;
    fft.backward(in, work);
    if (problem.advection != 0.0) {
      std::vector<double> sq(n);
      for (int j = 0; j < n; ++j) sq[j] = 0.5 * work[j] * work[j];
      fft.forward(sq, tmp);
      // Backward in time the equation reads dw/dtau = L w - c (w^2/2)_x + F.
      for (int j = 0; j <= half; ++j) out[j] -= problem.advection * cplx(0.0, k[j]) * tmp[j];
    }
    if (problem.source) {
      std::vector<double> f(n);
      for (int j = 0; j < n; ++j) f[j] = problem.source(x[j], work[j]);
      fft.forward(f, tmp);
      for (int j = 0; j <= half; ++j) out[j] += tmp[j];
    }
    for (int j = cutoff + 1; j <= half; ++j) out[j] = 0.0;
  };

  auto tail_check = [&](double time) {
    double total = 0.0, tail = 0.0;
    for (int j = 1; j <= half; ++j) {
      const double e = std::norm(v[j]);
      total += e;
      if (j > n / 4) tail += e;
    }
    if (!std::isfinite(total) || (total > 0.0 && tail > options.tail_fraction * total)) {
      throw BlowupSuspected("spectral_fractal_solve: spectral tail exceeds the smoothness threshold at t = " +
                                std::to_string(time),
                            time);
    }
  };

  const SpaceGrid space = grid.space_grid();
  SpaceTimeField field(space, TimeGrid(t_end, out_dt), 1);
  auto store = [&](int slice) {
    fft.backward(v, work);
    for (int j = 0; j < n; ++j) field.at(slice, j) = work[j];
    field.at(slice, n) = work[0];
  };
  tail_check(0.0);
  store(0);
  for (long s = 1; s <= steps; ++s) {
    N(v, nv);
    for (int j = 0; j <= half; ++j) a[j] = E2[j] * v[j] + Q[j] * nv[j];
    N(a, na);
    for (int j = 0; j <= half; ++j) b[j] = E2[j] * v[j] + Q[j] * na[j];
    N(b, nb);
    for (int j = 0; j <= half; ++j) c[j] = E2[j] * a[j] + Q[j] * (2.0 * nb[j] - nv[j]);
    N(c, nc);
    for (int j = 0; j <= half; ++j) {
      v[j] = E[j] * v[j] + nv[j] * f1[j] + 2.0 * (na[j] + nb[j]) * f2[j] + nc[j] * f3[j];
    }
    // A real field has a real Nyquist coefficient.
    v[half] = v[half].real();
    tail_check(-s * h);
    if (s % stride == 0) store(static_cast<int>(s / stride));
  }
  return field;
}

std::vector<double> linear_convolution_solve(const LevyTriple& triple, const PeriodicSpectralGrid& grid,
                                             const std::vector<double>& phi, double t) {
  if (triple.dim() != 1) throw std::invalid_argument("linear_convolution_solve: one-dimensional triples only");
  const int n = grid.modes();
  if (static_cast<int>(phi.size()) != n) throw std::invalid_argument("linear_convolution_solve: phi has wrong size");
  if (t > 0.0) throw std::invalid_argument("linear_convolution_solve: t must be <= 0");
  if (t == 0.0) return phi;
  RealFft fft(n);
  std::vector<cplx> spec;
  fft.forward(phi, spec);
  const int half = n / 2;
  for (int j = 0; j <= half; ++j) {
    const double xi = grid.wavenumber(j);
    cplx multiplier = std::exp(-t * symbol(triple, {&xi, 1}));
    if (j == half) multiplier = multiplier.real();
    spec[j] *= multiplier;
  }
  std::vector<double> out;
  fft.backward(spec, out);
  return out;
}

}  // namespace levypide::oracle
