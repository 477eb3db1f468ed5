#include "levypide/levy.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "levypide/errors.hpp"
#include "levypide/quadrature.hpp"

namespace levypide {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

void validate_stable(double alpha, double scale) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw std::invalid_argument("stable jumps require alpha strictly inside (0, 2)");
  }
  if (!(scale > 0.0)) throw std::invalid_argument("stable jumps require a positive scale");
}

// Splits the custom-law integrals at |z| = 1 so the compensator indicator is resolved.
double integrate_split_at_unit(const std::function<double(double)>& g,
                               const std::function<double(double)>& density, double tol) {
  auto inner = [&](double z) { return g(z) * density(z); };
  double total = quad::integrate(inner, -1.0, 1.0, tol / 3.0).value;
  // |z| > 1 via z = +-1/s, s in (0, 1].
  for (double sign : {-1.0, 1.0}) {
    auto outer = [&](double s) {
      if (s <= 0.0) return 0.0;
      const double z = sign / s;
      const double p = density(z);
      if (p == 0.0) return 0.0;
      return g(z) * p / (s * s);
    };
    total += quad::integrate(outer, 0.0, 1.0, tol / 3.0).value;
  }
  return total;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol) throw std::invalid_argument("covariance must be positive semidefinite");
    ev[i] = std::sqrt(std::max(0.0, ev[i]));
  }
  return es.eigenvectors() * ev.asDiagonal();
}

// Uniform direction on the unit sphere of R^m.
void random_direction(NoiseStream::Step& draws, std::span<double> out) {
  if (out.size() == 1) {
    out[0] = draws.uniform() < 0.5 ? -1.0 : 1.0;
    return;
  }
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& v : out) {
      v = draws.normal();
      norm2 += v * v;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : out) v *= inv;
}

// Standard symmetric stable variate with E exp(i xi S) = exp(-|xi|^alpha)
// (Chambers-Mallows-Stuck).
double standard_symmetric_stable(double alpha, NoiseStream::Step& draws) {
  const double v = kPi * (draws.uniform() - 0.5);
  const double w = draws.exponential();
  if (alpha == 1.0) return std::tan(v);
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

// Positive stable variate with E exp(-s A) = exp(-s^a), a in (0, 1) (Kanter).
double positive_stable(double a, NoiseStream::Step& draws) {
  const double u = kPi * draws.uniform();
  const double w = draws.exponential();
  return std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) *
         std::pow(std::sin((1.0 - a) * u) / w, (1.0 - a) / a);
}

void add_gaussian_and_drift(const LevyTriple& triple, double dt, NoiseStream::Step& draws,
                            std::span<double> out) {
  const int m = triple.dim();
  for (int i = 0; i < m; ++i) out[i] += triple.drift()[i] * dt;
  if (!triple.has_gaussian_part()) return;
  const double sdt = std::sqrt(dt);
  Eigen::VectorXd zv(m);
  for (int j = 0; j < m; ++j) zv[j] = draws.normal();
  const Eigen::VectorXd g = triple.covariance_sqrt() * zv;
  for (int i = 0; i < m; ++i) out[i] += sdt * g[i];
}

// Adds radially symmetric stable jumps with radius in [lo, hi) (hi may be inf).
void add_stable_jumps_in_shell(double alpha, double scale, int m, double lo, double hi, double dt,
                               NoiseStream::Step& draws, std::span<double> out) {
  const double area = unit_sphere_area(m);
  const double lo_pow = std::pow(lo, -alpha);
  const double hi_pow = std::isinf(hi) ? 0.0 : std::pow(hi, -alpha);
  const double rate = scale * area * (lo_pow - hi_pow) / alpha;
  const std::uint64_t count = draws.poisson(rate * dt);
  double dir[8];
  for (std::uint64_t k = 0; k < count; ++k) {
    const double u = draws.uniform();
    const double r = std::pow(lo_pow - u * (lo_pow - hi_pow), -1.0 / alpha);
    random_direction(draws, std::span<double>(dir, m));
    for (int i = 0; i < m; ++i) out[i] += r * dir[i];
  }
}

void add_small_jump_gaussian(double alpha, double scale, int m, double cutoff, double dt,
                             NoiseStream::Step& draws, std::span<double> out) {
  const double var = scale * unit_sphere_area(m) * std::pow(cutoff, 2.0 - alpha) / ((2.0 - alpha) * m);
  const double sd = std::sqrt(var * dt);
  for (int i = 0; i < m; ++i) out[i] += sd * draws.normal();
}

void sample_jump(const CompoundPoisson& cp, int m, NoiseStream::Step& draws, std::span<double> jump) {
  std::visit(overloaded{[&](const GaussianJumpLaw& g) {
                          for (int i = 0; i < m; ++i) jump[i] = g.mean[i] + g.stddev * draws.normal();
                        },
                        [&](const CustomJumpLaw& c) { jump[0] = c.sample(draws); }},
             cp.law);
}

}  // namespace

double unit_sphere_area(int dim) {
  return 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

double stable_symbol_constant(int dim, double alpha) {
  return std::pow(kPi, 0.5 * dim) * std::fabs(std::tgamma(-0.5 * alpha)) /
         (std::pow(2.0, alpha) * std::tgamma(0.5 * (dim + alpha)));
}

double default_truncation_cutoff(double alpha) {
  const double ratio = 1e-6;
  const double by_variance = std::pow(ratio / (1.0 + ratio), 1.0 / (2.0 - alpha));
  // For alpha near 2 the variance rule asks for ~1e18 jumps per unit time;
  // cap the expected count at kMaxRate (unit scale, m = 1).
  constexpr double kMaxRate = 1e4;
  const double by_rate = std::pow(2.0 / (alpha * kMaxRate), 1.0 / alpha);
  return std::max(by_variance, by_rate);
}

LevyTriple::LevyTriple(Eigen::VectorXd drift, Eigen::MatrixXd covariance, JumpSpec jumps)
    : drift_(std::move(drift)), covariance_(std::move(covariance)), jumps_(std::move(jumps)) {
  const int m = static_cast<int>(drift_.size());
  if (m < 1) throw std::invalid_argument("LevyTriple: dimension must be at least 1");
  if (m > 8) throw std::invalid_argument("LevyTriple: dimension above 8 is not supported");
  if (covariance_.rows() != m || covariance_.cols() != m) {
    throw std::invalid_argument("LevyTriple: covariance must be m x m");
  }
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, covariance_.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("LevyTriple: covariance must be symmetric");
  }
  covariance_sqrt_ = psd_sqrt(covariance_);
  compensator_ = Eigen::VectorXd::Zero(m);
  std::visit(overloaded{
                 [](const NoJumps&) {},
                 [&](const AlphaStable& s) { validate_stable(s.alpha, s.scale); },
                 [&](TruncatedStable& s) {
                   validate_stable(s.alpha, s.scale);
                   if (s.cutoff == 0.0) s.cutoff = default_truncation_cutoff(s.alpha);
                   if (!(s.cutoff > 0.0 && s.cutoff <= 1.0)) {
                     throw std::invalid_argument("TruncatedStable: cutoff must lie in (0, 1]");
                   }
                 },
                 [&](const CompoundPoisson& cp) {
                   if (!(cp.rate >= 0.0) || !std::isfinite(cp.rate)) {
                     throw std::invalid_argument("CompoundPoisson: rate must be finite and nonnegative");
                   }
                   std::visit(overloaded{
                                  [&](const GaussianJumpLaw& g) {
                                    if (g.mean.size() != m) {
                                      throw std::invalid_argument("GaussianJumpLaw: mean must have dimension m");
                                    }
                                    if (!(g.stddev > 0.0)) {
                                      throw std::invalid_argument("GaussianJumpLaw: stddev must be positive");
                                    }
                                    if (g.mean.norm() == 0.0) return;
                                    if (m != 1) {
                                      throw std::invalid_argument(
                                          "GaussianJumpLaw: nonzero mean supported only for m = 1");
                                    }
                                    const double mu = g.mean[0], s = g.stddev;
                                    const double a = (-1.0 - mu) / s, b = (1.0 - mu) / s;
                                    const double trunc = mu * (normal_cdf(b) - normal_cdf(a)) +
                                                         s * (normal_pdf(a) - normal_pdf(b));
                                    compensator_[0] = cp.rate * trunc;
                                  },
                                  [&](const CustomJumpLaw& c) {
                                    if (m != 1) throw std::invalid_argument("CustomJumpLaw requires m = 1");
                                    if (!c.sample || !c.density) {
                                      throw std::invalid_argument("CustomJumpLaw: sampler and density required");
                                    }
                                    auto zp = [&](double z) { return z * c.density(z); };
                                    compensator_[0] = cp.rate * quad::integrate(zp, -1.0, 1.0, 1e-12).value;
                                  }},
                              cp.law);
                 }},
             jumps_);
}

LevyTriple LevyTriple::brownian(int dim, double variance) {
  return LevyTriple(Eigen::VectorXd::Zero(dim), variance * Eigen::MatrixXd::Identity(dim, dim));
}

LevyTriple LevyTriple::alpha_stable(int dim, double alpha, double scale) {
  return LevyTriple(Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim),
                    AlphaStable{alpha, scale});
}

LevyTriple LevyTriple::alpha_stable_with_multiplier(int dim, double alpha, double multiplier) {
  return alpha_stable(dim, alpha, multiplier / stable_symbol_constant(dim, alpha));
}

LevyTriple LevyTriple::zero(int dim) {
  return LevyTriple(Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim));
}

double LevyTriple::stable_index() const {
  if (const auto* s = std::get_if<AlphaStable>(&jumps_)) return s->alpha;
  if (const auto* s = std::get_if<TruncatedStable>(&jumps_)) return s->alpha;
  if (std::holds_alternative<NoJumps>(jumps_) && has_gaussian_part()) return 2.0;
  return 0.0;
}

LevyTriple LevyTriple::reflected() const {
  JumpSpec jumps = jumps_;
  if (auto* cp = std::get_if<CompoundPoisson>(&jumps)) {
    if (auto* g = std::get_if<GaussianJumpLaw>(&cp->law)) {
      g->mean = -g->mean;
    } else if (auto* c = std::get_if<CustomJumpLaw>(&cp->law)) {
      auto sample = c->sample;
      auto density = c->density;
      c->sample = [sample](NoiseStream::Step& d) { return -sample(d); };
      c->density = [density](double z) { return density(-z); };
    }
  }
  return LevyTriple(-drift_, covariance_, std::move(jumps));
}

std::complex<double> symbol(const LevyTriple& triple, std::span<const double> xi,
                            const QuadratureOptions& options) {
  const int m = triple.dim();
  if (static_cast<int>(xi.size()) != m) throw std::invalid_argument("symbol: xi has wrong dimension");
  Eigen::Map<const Eigen::VectorXd> x(xi.data(), m);
  if (!x.allFinite()) throw std::invalid_argument("symbol: xi must be finite");
  std::complex<double> psi(-0.5 * x.dot(triple.covariance() * x), triple.drift().dot(x));
  const double norm = x.norm();
  std::visit(overloaded{
                 [](const NoJumps&) {},
                 [&](const AlphaStable& s) {
                   psi -= s.scale * stable_symbol_constant(m, s.alpha) * std::pow(norm, s.alpha);
                 },
                 [&](const TruncatedStable& s) {
                   psi -= s.scale * stable_symbol_constant(m, s.alpha) * std::pow(norm, s.alpha);
                 },
                 [&](const CompoundPoisson& cp) {
                   std::visit(overloaded{
                                  [&](const GaussianJumpLaw& g) {
                                    const std::complex<double> cf =
                                        std::exp(std::complex<double>(-0.5 * g.stddev * g.stddev * norm * norm,
                                                                      g.mean.dot(x)));
                                    psi += cp.rate * (cf - 1.0);
                                  },
                                  [&](const CustomJumpLaw& c) {
                                    const double k = x[0];
                                    auto re = [&](double z) { return std::cos(k * z) - 1.0; };
                                    auto im = [&](double z) { return std::sin(k * z); };
                                    psi += cp.rate * std::complex<double>(
                                                         integrate_split_at_unit(re, c.density, options.tolerance),
                                                         integrate_split_at_unit(im, c.density, options.tolerance));
                                  }},
                              cp.law);
                   psi -= std::complex<double>(0.0, triple.small_jump_compensator().dot(x));
                 }},
             triple.jumps());
  return psi;
}

void sample_increment(const LevyTriple& triple, double dt, NoiseStream::Step& draws,
                      std::span<double> out) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be positive");
  const int m = triple.dim();
  for (int i = 0; i < m; ++i) out[i] = 0.0;
  add_gaussian_and_drift(triple, dt, draws, out);
  std::visit(overloaded{
                 [](const NoJumps&) {},
                 [&](const AlphaStable& s) {
                   const double gamma =
                       std::pow(dt * s.scale * stable_symbol_constant(m, s.alpha), 1.0 / s.alpha);
                   if (m == 1) {
                     out[0] += gamma * standard_symmetric_stable(s.alpha, draws);
                     return;
                   }
                   // Sub-Gaussian representation: sqrt(2 A) G has symbol -|xi|^alpha.
                   const double a = positive_stable(0.5 * s.alpha, draws);
                   const double r = gamma * std::sqrt(2.0 * a);
                   for (int i = 0; i < m; ++i) out[i] += r * draws.normal();
                 },
                 [&](const TruncatedStable& s) {
                   add_stable_jumps_in_shell(s.alpha, s.scale, m, s.cutoff,
                                             std::numeric_limits<double>::infinity(), dt, draws, out);
                   add_small_jump_gaussian(s.alpha, s.scale, m, s.cutoff, dt, draws, out);
                 },
                 [&](const CompoundPoisson& cp) {
                   const std::uint64_t count = draws.poisson(cp.rate * dt);
                   double jump[8];
                   for (std::uint64_t k = 0; k < count; ++k) {
                     sample_jump(cp, m, draws, std::span<double>(jump, m));
                     for (int i = 0; i < m; ++i) out[i] += jump[i];
                   }
                   for (int i = 0; i < m; ++i) out[i] -= triple.small_jump_compensator()[i] * dt;
                 }},
             triple.jumps());
}

Eigen::VectorXd sample_increment(const LevyTriple& triple, double dt, const NoiseStream& noise,
                                 std::uint64_t step_index) {
  Eigen::VectorXd out(triple.dim());
  auto draws = noise.step(step_index);
  sample_increment(triple, dt, draws, std::span<double>(out.data(), out.size()));
  return out;
}

void sample_split_increment(const LevyTriple& triple, double dt, NoiseStream::Step& draws,
                            std::span<double> small, std::span<double> big,
                            double small_jump_cutoff) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_split_increment: dt must be positive");
  const int m = triple.dim();
  for (int i = 0; i < m; ++i) small[i] = big[i] = 0.0;
  add_gaussian_and_drift(triple, dt, draws, small);
  auto stable_split = [&](double alpha, double scale, double cutoff) {
    add_stable_jumps_in_shell(alpha, scale, m, 1.0, std::numeric_limits<double>::infinity(), dt,
                              draws, big);
    if (cutoff < 1.0) add_stable_jumps_in_shell(alpha, scale, m, cutoff, 1.0, dt, draws, small);
    add_small_jump_gaussian(alpha, scale, m, cutoff, dt, draws, small);
  };
  std::visit(overloaded{[](const NoJumps&) {},
                        [&](const AlphaStable& s) { stable_split(s.alpha, s.scale, small_jump_cutoff); },
                        [&](const TruncatedStable& s) { stable_split(s.alpha, s.scale, s.cutoff); },
                        [&](const CompoundPoisson& cp) {
                          const std::uint64_t count = draws.poisson(cp.rate * dt);
                          double jump[8];
                          for (std::uint64_t k = 0; k < count; ++k) {
                            sample_jump(cp, m, draws, std::span<double>(jump, m));
                            double n2 = 0.0;
                            for (int i = 0; i < m; ++i) n2 += jump[i] * jump[i];
                            auto target = n2 > 1.0 ? big : small;
                            for (int i = 0; i < m; ++i) target[i] += jump[i];
                          }
                          for (int i = 0; i < m; ++i) small[i] -= triple.small_jump_compensator()[i] * dt;
                        }},
             triple.jumps());
}

MomentStatus check_moment(const LevyTriple& triple, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("check_moment: beta must be positive");
  MomentStatus status = MomentStatus::finite;
  std::visit(overloaded{
                 [](const NoJumps&) {},
                 [&](const AlphaStable& s) { status = beta < s.alpha ? MomentStatus::finite : MomentStatus::infinite; },
                 [&](const TruncatedStable& s) {
                   status = beta < s.alpha ? MomentStatus::finite : MomentStatus::infinite;
                 },
                 [&](const CompoundPoisson& cp) {
                   if (std::holds_alternative<GaussianJumpLaw>(cp.law) || cp.rate == 0.0) return;
                   const auto& density = std::get<CustomJumpLaw>(cp.law).density;
                   // Partial integrals of |z|^beta p(z) over 1 <= |z| <= 10^k, in log coordinates.
                   auto shell = [&](double lo, double hi) {
                     auto f = [&](double s) {
                       const double z = std::exp(s);
                       return std::pow(z, beta) * (density(z) + density(-z)) * z;
                     };
                     return quad::integrate_unchecked(f, std::log(lo), std::log(hi), 1e-12).value;
                   };
                   std::vector<double> increments;
                   double total = 0.0;
                   for (int k = 0; k < 8; ++k) {
                     const double inc = shell(std::pow(10.0, k), std::pow(10.0, k + 1));
                     increments.push_back(inc);
                     total += inc;
                   }
                   const double last = increments.back();
                   if (last <= 1e-8 * std::max(total, 1e-300) || last == 0.0) return;
                   const std::size_t n = increments.size();
                   if (increments[n - 1] >= increments[n - 2] && increments[n - 2] >= increments[n - 3]) {
                     status = MomentStatus::infinite;
                     return;
                   }
                   // A power-law tail gives a steady ratio between decades; below
                   // one the remaining decades sum geometrically.
                   const double r1 = increments[n - 2] / increments[n - 3];
                   const double r2 = increments[n - 1] / increments[n - 2];
                   if (r1 > 0.0 && std::fabs(r1 - r2) <= 0.05 * std::max(r1, r2)) {
                     status = r2 < 0.999 ? MomentStatus::finite : MomentStatus::infinite;
                     return;
                   }
                   throw MomentUndecidable("check_moment: tail of the user-supplied jump density is undecidable");
                 }},
             triple.jumps());
  return status;
}

void finite_difference_derivatives(const ScalarFn& u, std::span<const double> x, double h,
                                   Eigen::VectorXd& gradient, Eigen::MatrixXd& hessian) {
  const int d = static_cast<int>(x.size());
  gradient = Eigen::VectorXd::Zero(d);
  hessian = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> p(x.begin(), x.end());
  auto at = [&](int i, double di, int j, double dj) {
    p.assign(x.begin(), x.end());
    p[i] += di;
    if (j >= 0) p[j] += dj;
    return u(p);
  };
  const double u0 = u(x);
  for (int i = 0; i < d; ++i) {
    auto grad = [&](double s) { return (at(i, s, -1, 0) - at(i, -s, -1, 0)) / (2.0 * s); };
    auto second = [&](double s) { return (at(i, s, -1, 0) - 2.0 * u0 + at(i, -s, -1, 0)) / (s * s); };
    gradient[i] = (4.0 * grad(0.5 * h) - grad(h)) / 3.0;
    hessian(i, i) = (4.0 * second(0.5 * h) - second(h)) / 3.0;
    for (int j = 0; j < i; ++j) {
      auto mixed = [&](double s) {
        return (at(i, s, j, s) - at(i, s, j, -s) - at(i, -s, j, s) + at(i, -s, j, -s)) / (4.0 * s * s);
      };
      hessian(i, j) = hessian(j, i) = (4.0 * mixed(0.5 * h) - mixed(h)) / 3.0;
    }
  }
}

namespace {

// int_0^inf D(r) r^{-1-alpha} dr with D(r) = u(x + r v) + u(x - r v) - 2 u(x),
// v = v_small for r < 1 and v = v_big for r >= 1.
double stable_radial_integral(double alpha, const ScalarFn& u, std::span<const double> x, double u0,
                              const Eigen::VectorXd& v_small, const Eigen::VectorXd& v_big,
                              const Eigen::MatrixXd& hessian, const GeneratorOptions& options,
                              double tol) {
  const int d = static_cast<int>(x.size());
  std::vector<double> p(d);
  auto second_difference = [&](double r, const Eigen::VectorXd& v) {
    for (int i = 0; i < d; ++i) p[i] = x[i] + r * v[i];
    double s = u(p);
    for (int i = 0; i < d; ++i) p[i] = x[i] - r * v[i];
    s += u(p);
    return s - 2.0 * u0;
  };
  const double r0 = std::min(options.taylor_radius, 1.0);
  const double e = 2.0 - alpha;
  double total = v_small.dot(hessian * v_small) * std::pow(r0, e) / e;
  auto small = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double r = std::pow(s, 1.0 / e);
    return second_difference(r, v_small) * std::pow(s, -2.0 / e) / e;
  };
  total += quad::integrate(small, std::pow(r0, e), 1.0, tol / 2.0).value;
  // Tail over dyadic panels [R, 2R]. Once u(x + r v) + u(x - r v) settles to a constant the
  // panels form a geometric series with ratio 2^{-alpha}, summed exactly. Panels on which u
  // vanishes identically prove nothing (its support may lie further out), so they are skipped.
  // The -2u(x) part of D integrates in closed form.
  total -= 2.0 * u0 / alpha;
  auto large = [&](double r) { return (second_difference(r, v_big) + 2.0 * u0) * std::pow(r, -1.0 - alpha); };
  const double q = std::pow(2.0, -alpha);
  double previous = 0.0;
  double error = 0.0;
  double lo = 1.0;
  bool vanished = false;
  for (int k = 0; k < 200; ++k, lo *= 2.0) {
    const auto panel = quad::integrate_unchecked(large, lo, 2.0 * lo, tol / 64.0, 40);
    if (!std::isfinite(panel.value)) break;
    vanished = panel.value == 0.0 && panel.error == 0.0;
    if (vanished) {
      previous = 0.0;
      continue;
    }
    total += panel.value;
    error += panel.error;
    const double tail = panel.value * q / (1.0 - q);
    const bool geometric = k > 0 && std::fabs(panel.value - q * previous) < tol / 64.0;
    if (geometric || std::fabs(tail) < tol / 4.0) {
      if (error > tol / 2.0) throw QuadratureError("jump integral tail did not converge", error);
      return total + tail;
    }
    previous = panel.value;
  }
  if (vanished && error <= tol / 2.0) return total;
  throw QuadratureError("jump integral tail did not settle", std::fabs(previous) + error);
  return total;
}

}  // namespace

double apply_jump_operator(const LevyTriple& triple, const ScalarFn& u, std::span<const double> x,
                           const Eigen::MatrixXd& coupling, const Eigen::MatrixXd& big_coupling,
                           const Eigen::VectorXd& gradient, const Eigen::MatrixXd& hessian,
                           const GeneratorOptions& options) {
  const int m = triple.dim();
  const int d = static_cast<int>(x.size());
  if (coupling.rows() != d || coupling.cols() != m || big_coupling.rows() != d || big_coupling.cols() != m) {
    throw std::invalid_argument("apply_jump_operator: coupling must be d x m");
  }
  const double u0 = u(x);
  double result = 0.0;
  auto stable_part = [&](double alpha, double scale) {
    if (m > 3) throw std::invalid_argument("apply_jump_operator: stable jumps supported for m <= 3");
    if (m == 1) {
      Eigen::VectorXd e = Eigen::VectorXd::Ones(1);
      result += scale * stable_radial_integral(alpha, u, x, u0, coupling * e, big_coupling * e, hessian,
                                               options, options.tolerance / std::max(scale, 1e-300));
      return;
    }
    if (m == 2) {
      // The angular integrand is typically only C^alpha (e.g. |xi.theta|^alpha),
      // so the half circle is integrated adaptively to place panels at the kinks.
      const double tol = options.tolerance / std::max(scale, 1e-300);
      Eigen::VectorXd v(2);
      auto radial = [&](double th) {
        v << std::cos(th), std::sin(th);
        return stable_radial_integral(alpha, u, x, u0, coupling * v, big_coupling * v, hessian, options,
                                      0.1 * tol / kPi);
      };
      result += scale * quad::integrate(radial, 0.0, kPi, 0.5 * tol).value;
      return;
    }
    // Nested adaptive rules in (cos polar angle, azimuth); each direction and
    // its opposite are both visited, hence the factor 1/2. The error estimates
    // of nested GK15 are pessimistic, so the panels run at 5-10x the target
    // tolerance; requesting it exactly costs ~5x the time for no visible gain.
    const double tol = options.tolerance / std::max(scale, 1e-300);
    Eigen::VectorXd v(3);
    auto over_azimuth = [&](double mu) {
      const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      auto radial = [&](double ph) {
        v << s * std::cos(ph), s * std::sin(ph), mu;
        return stable_radial_integral(alpha, u, x, u0, coupling * v, big_coupling * v, hessian, options,
                                      10.0 * tol);
      };
      return quad::integrate(radial, 0.0, 2.0 * kPi, 5.0 * tol).value;
    };
    result += 0.5 * scale * quad::integrate(over_azimuth, -1.0, 1.0, 10.0 * tol).value;
  };
  std::visit(overloaded{
                 [](const NoJumps&) {},
                 [&](const AlphaStable& s) { stable_part(s.alpha, s.scale); },
                 [&](const TruncatedStable& s) { stable_part(s.alpha, s.scale); },
                 [&](const CompoundPoisson& cp) {
                   std::vector<double> p(d);
                   auto shifted = [&](const Eigen::VectorXd& z) {
                     const Eigen::VectorXd dz = z.norm() < 1.0 ? Eigen::VectorXd(coupling * z)
                                                               : Eigen::VectorXd(big_coupling * z);
                     for (int i = 0; i < d; ++i) p[i] = x[i] + dz[i];
                     return u(p) - u0;
                   };
                   double expectation = 0.0;
                   if (const auto* g = std::get_if<GaussianJumpLaw>(&cp.law)) {
                     if (m > 3) throw std::invalid_argument("apply_jump_operator: Gaussian jumps supported for m <= 3");
                     const int order = m == 1 ? 80 : (m == 2 ? 40 : 24);
                     const auto gh = quad::gauss_hermite(order);
                     std::vector<int> idx(m, 0);
                     const double norm = std::pow(kPi, -0.5 * m);
                     Eigen::VectorXd z(m);
                     for (;;) {
                       double w = norm;
                       for (int i = 0; i < m; ++i) {
                         z[i] = g->mean[i] + std::sqrt(2.0) * g->stddev * gh.nodes[idx[i]];
                         w *= gh.weights[idx[i]];
                       }
                       expectation += w * shifted(z);
                       int i = 0;
                       while (i < m && ++idx[i] == order) idx[i++] = 0;
                       if (i == m) break;
                     }
                   } else {
                     const auto& c = std::get<CustomJumpLaw>(cp.law);
                     Eigen::VectorXd z(1);
                     auto integrand = [&](double zz) {
                       z[0] = zz;
                       return shifted(z);
                     };
                     expectation = integrate_split_at_unit(integrand, c.density, options.tolerance / std::max(cp.rate, 1e-300));
                   }
                   result += cp.rate * expectation;
                   result -= gradient.dot(coupling * triple.small_jump_compensator());
                 }},
             triple.jumps());
  return result;
}

double apply_generator(const LevyTriple& triple, const ScalarFn& u, std::span<const double> x,
                       const GeneratorOptions& options) {
  const int m = triple.dim();
  if (static_cast<int>(x.size()) != m) throw std::invalid_argument("apply_generator: x has wrong dimension");
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  finite_difference_derivatives(u, x, options.fd_step, gradient, hessian);
  double result = 0.5 * (triple.covariance().cwiseProduct(hessian)).sum() + triple.drift().dot(gradient);
  if (triple.has_jumps()) {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m, m);
    result += apply_jump_operator(triple, u, x, id, id, gradient, hessian, options);
  }
  return result;
}

}  // namespace levypide
