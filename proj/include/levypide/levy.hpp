#pragma once

#include <complex>
#include <functional>
#include <span>
#include <variant>

#include <Eigen/Dense>

#include "levypide/random.hpp"

namespace levypide {

/// No jump part; the process is Brownian motion with drift.
struct NoJumps {};

/// Symmetric isotropic alpha-stable jumps, nu(dz) = scale * dz / |z|^{m+alpha}.
struct AlphaStable {
  double alpha = 1.5;
  double scale = 1.0;
};

/// Same Levy measure as AlphaStable, simulated by compound Poisson above
/// `cutoff` plus a variance-matched Gaussian for the jumps below it.
struct TruncatedStable {
  double alpha = 1.5;
  double scale = 1.0;
  double cutoff = 0.0;  ///< 0 selects `default_truncation_cutoff(alpha)`.
};

/// Isotropic Gaussian jump sizes N(mean, stddev^2 I).
struct GaussianJumpLaw {
  Eigen::VectorXd mean;
  double stddev = 1.0;
};

/// User-supplied one-dimensional jump law.
struct CustomJumpLaw {
  std::function<double(NoiseStream::Step&)> sample;
  std::function<double(double)> density;
};

struct CompoundPoisson {
  double rate = 1.0;
  std::variant<GaussianJumpLaw, CustomJumpLaw> law;
};

using JumpSpec = std::variant<NoJumps, AlphaStable, CompoundPoisson, TruncatedStable>;

/// Characteristic triple (b, A, nu) of an R^m-valued Levy process.
///
/// The symbol convention is Psi(xi) = i b.xi - (1/2) xi^T A xi + jump integral,
/// i.e. A is the covariance of the Brownian part per unit time and the
/// generator carries (1/2) a_ij d_i d_j.
class LevyTriple {
 public:
  LevyTriple(Eigen::VectorXd drift, Eigen::MatrixXd covariance, JumpSpec jumps = NoJumps{});

  static LevyTriple brownian(int dim, double variance = 1.0);
  static LevyTriple alpha_stable(int dim, double alpha, double scale);
  /// Stable triple whose symbol is exactly -multiplier * |xi|^alpha.
  static LevyTriple alpha_stable_with_multiplier(int dim, double alpha, double multiplier);
  static LevyTriple zero(int dim);

  int dim() const { return static_cast<int>(drift_.size()); }
  const Eigen::VectorXd& drift() const { return drift_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  /// S with S S^T = A.
  const Eigen::MatrixXd& covariance_sqrt() const { return covariance_sqrt_; }
  const JumpSpec& jumps() const { return jumps_; }

  bool has_jumps() const { return !std::holds_alternative<NoJumps>(jumps_); }
  bool has_gaussian_part() const { return covariance_.norm() > 0.0; }
  /// Stability index when the jump part is (truncated) stable, 2 for pure Brownian, 0 otherwise.
  double stable_index() const;

  /// Triple of -L: drift and jumps reflected, covariance unchanged.
  LevyTriple reflected() const;

  /// E[J 1_{|J|<=1}] * rate for compound Poisson jumps (zero for symmetric laws).
  const Eigen::VectorXd& small_jump_compensator() const { return compensator_; }

 private:
  Eigen::VectorXd drift_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd covariance_sqrt_;
  JumpSpec jumps_;
  Eigen::VectorXd compensator_;
};

/// Constant K_{m,alpha} with int (1 - cos(xi.z)) |z|^{-m-alpha} dz = K |xi|^alpha.
double stable_symbol_constant(int dim, double alpha);

/// Surface area of the unit sphere in R^m.
double unit_sphere_area(int dim);

/// Cutoff eps for which the Gaussian-replaced small-jump variance is below
/// 1e-6 of the retained variance of jumps in (eps, 1], raised where needed so
/// that at unit scale at most 1e4 jumps per unit time are simulated.
double default_truncation_cutoff(double alpha);

struct QuadratureOptions {
  double tolerance = 1e-9;
};

/// Levy symbol Psi(xi), with E exp(i xi.L_t) = exp(t Psi(xi)).
std::complex<double> symbol(const LevyTriple& triple, std::span<const double> xi,
                            const QuadratureOptions& options = {});

/// One draw of L_{t+dt} - L_t written into `out` (size m).
void sample_increment(const LevyTriple& triple, double dt, NoiseStream::Step& draws,
                      std::span<double> out);
Eigen::VectorXd sample_increment(const LevyTriple& triple, double dt, const NoiseStream& noise,
                                 std::uint64_t step_index);

/// Increment split at |z| = 1: `big` holds the uncompensated jumps with
/// |z| >= 1, `small` the drift, Brownian part and compensated small jumps.
/// Stable small jumps are simulated by compound Poisson down to
/// `small_jump_cutoff` plus a variance-matched Gaussian.
void sample_split_increment(const LevyTriple& triple, double dt, NoiseStream::Step& draws,
                            std::span<double> small, std::span<double> big,
                            double small_jump_cutoff = 1e-3);

enum class MomentStatus { finite, infinite };

/// Whether int_{|z|>=1} |z|^beta nu(dz) < infinity. Throws MomentUndecidable
/// for user-supplied densities whose tail does not settle.
MomentStatus check_moment(const LevyTriple& triple, double beta);

using ScalarFn = std::function<double(std::span<const double>)>;

struct GeneratorOptions {
  double tolerance = 1e-6;
  /// Below this radius the jump integrand is replaced by its Taylor term.
  double taylor_radius = 1e-3;
  /// Finite-difference step for derivatives of `u`.
  double fd_step = 1e-3;
};

/// L_0 u(x) for the generator of the triple (dimension m <= 3 when jumps are present).
double apply_generator(const LevyTriple& triple, const ScalarFn& u, std::span<const double> x,
                       const GeneratorOptions& options = {});

/// Jump part of L_0 alone, with the small jumps mapped through `coupling`
/// (z -> coupling z, d x m) and the big jumps mapped through `big_coupling`.
/// Used by the strong residual of the quasi-linear equations.
double apply_jump_operator(const LevyTriple& triple, const ScalarFn& u, std::span<const double> x,
                           const Eigen::MatrixXd& coupling, const Eigen::MatrixXd& big_coupling,
                           const Eigen::VectorXd& gradient, const Eigen::MatrixXd& hessian,
                           const GeneratorOptions& options = {});

/// Central-difference gradient and Hessian of u at x (Richardson-extrapolated).
void finite_difference_derivatives(const ScalarFn& u, std::span<const double> x, double h,
                                   Eigen::VectorXd& gradient, Eigen::MatrixXd& hessian);

}  // namespace levypide
