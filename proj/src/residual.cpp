#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <variant>

#include "levypide/pide.hpp"

namespace levypide {

namespace {

// Tensor Catmull-Rom interpolation of one stored slice. Unlike the multilinear
// SliceView it is C^1, so jump integrals of u(x + z) - u(x) stay O(|z|^2)
// near z = 0. `step` > 1 interpolates the subgrid of every step-th node.
class SmoothSlice {
 public:
  SmoothSlice(const SpaceTimeField& field, int time_index, int component, int step = 1)
      : field_(field), ti_(time_index), c_(component), step_(step) {}

  double operator()(std::span<const double> x) const {
    const SpaceGrid& g = field_.space();
    const int d = g.dim();
    int base[8];
    double w[8][4];
    for (int a = 0; a < d; ++a) {
      const int cells = (g.points(a) - 1) / step_;
      const double h = g.spacing(a) * step_;
      double s = (x[a] - g.lower(a)) / h;
      if (g.periodic(a)) {
        s -= cells * std::floor(s / cells);
      } else {
        s = std::clamp(s, 0.0, static_cast<double>(cells));
      }
      int i = std::min(static_cast<int>(s), cells - 1);
      const double t = s - i;
      base[a] = i;
      w[a][0] = 0.5 * (-t * t * t + 2 * t * t - t);
      w[a][1] = 0.5 * (3 * t * t * t - 5 * t * t + 2);
      w[a][2] = 0.5 * (-3 * t * t * t + 4 * t * t + t);
      w[a][3] = 0.5 * (t * t * t - t * t);
    }
    double acc = 0.0;
    const int corners = 1 << (2 * d);
    for (int corner = 0; corner < corners; ++corner) {
      double weight = 1.0;
      std::size_t node = 0;
      for (int a = 0; a < d; ++a) {
        const int o = (corner >> (2 * a)) & 3;
        weight *= w[a][o];
        const int cells = (g.points(a) - 1) / step_;
        int i = base[a] + o - 1;
        if (g.periodic(a)) {
          i = ((i % cells) + cells) % cells;
        } else {
          i = std::clamp(i, 0, cells);
        }
        node += static_cast<std::size_t>(i) * step_ * g.stride(a);
      }
      acc += weight * field_.at(ti_, node, c_);
    }
    return acc;
  }

 private:
  const SpaceTimeField& field_;
  int ti_, c_, step_;
};

void node_index_of(const SpaceGrid& g, std::span<const double> x, std::size_t& node) {
  node = 0;
  for (int a = 0; a < g.dim(); ++a) {
    const double s = (x[a] - g.lower(a)) / g.spacing(a);
    const int i = static_cast<int>(std::lround(s));
    if (std::fabs(s - i) > 1e-8 || i < 0 || i >= g.points(a)) {
      throw std::invalid_argument("strong_residual: x must be a grid node");
    }
    if (!g.periodic(a) && (i < 2 || i > g.points(a) - 3)) {
      throw std::invalid_argument("strong_residual: x must lie at least two nodes from the boundary");
    }
    node += static_cast<std::size_t>(i) * g.stride(a);
  }
}

struct Support {
  std::vector<std::size_t> nodes;
  std::vector<bool> even;  // node lies on the subgrid of every other node
  double cell = 1.0;
};

Support support_nodes(const SpaceGrid& g, const TestFunctionSpec& spec) {
  const int d = g.dim();
  if (static_cast<int>(spec.support_lower.size()) != d || static_cast<int>(spec.support_upper.size()) != d) {
    throw std::invalid_argument("weak_residual: test function support has the wrong dimension");
  }
  for (int a = 0; a < d; ++a) {
    if (!(spec.support_lower[a] > g.lower(a) && spec.support_upper[a] < g.upper(a))) {
      throw std::invalid_argument("weak_residual: test function support must lie strictly inside the grid box");
    }
  }
  Support s;
  for (int a = 0; a < d; ++a) s.cell *= g.spacing(a);
  std::vector<double> x(d);
  for (std::size_t n = 0; n < g.size(); ++n) {
    g.node(n, x);
    bool inside = true, even = true;
    for (int a = 0; a < d; ++a) {
      inside = inside && x[a] > spec.support_lower[a] && x[a] < spec.support_upper[a];
      even = even && g.axis_index(n, a) % 2 == 0;
    }
    if (inside) {
      s.nodes.push_back(n);
      s.even.push_back(even);
    }
  }
  return s;
}

// nu(|z| >= r), or an upper bound for it.
double tail_mass(const LevyTriple& triple, double r) {
  const int m = triple.dim();
  return std::visit(
      [&](const auto& j) -> double {
        using T = std::decay_t<decltype(j)>;
        if constexpr (std::is_same_v<T, NoJumps>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, CompoundPoisson>) {
          return j.rate;
        } else {
          return j.scale * unit_sphere_area(m) / (j.alpha * std::pow(r, j.alpha));
        }
      },
      triple.jumps());
}

// Nonlocal part of <u, L* psi>: L* psi on every distinct grid node, summed over
// periodic images, and the distance beyond which it is left out.
struct Nonlocal {
  std::vector<std::size_t> nodes;  // distinct nodes outside the support
  std::vector<bool> even;
  std::vector<double> outside;     // L* psi at those nodes
  std::vector<double> images;      // image contributions at the support nodes
  double reach = std::numeric_limits<double>::infinity();
};

Nonlocal nonlocal_terms(const SpaceGrid& g, const TestFunctionSpec& spec, const Support& sup,
                        const LevyTriple& adjoint, const GeneratorOptions& gen) {
  Nonlocal nl;
  const int d = g.dim();
  int periodic_axes = 0;
  for (int a = 0; a < d; ++a) periodic_axes += g.periodic(a);
  const int K = periodic_axes == 0 ? 0 : periodic_axes == 1 ? 4 : periodic_axes == 2 ? 2 : 1;
  for (int a = 0; a < d; ++a) {
    const double period = g.upper(a) - g.lower(a);
    const double edge = std::min(spec.support_lower[a] - g.lower(a), g.upper(a) - spec.support_upper[a]);
    nl.reach = std::min(nl.reach, g.periodic(a) ? K * period : edge);
  }
  std::vector<double> x(d), y(d);
  auto image_sum = [&](bool skip_home) {
    double total = 0.0;
    std::vector<int> k(d, 0);
    for (int a = 0; a < d; ++a) k[a] = g.periodic(a) ? -K : 0;
    while (true) {
      bool home = true;
      for (int a = 0; a < d; ++a) {
        y[a] = x[a] + k[a] * (g.upper(a) - g.lower(a));
        home = home && k[a] == 0;
      }
      if (!(home && skip_home)) total += apply_generator(adjoint, spec.psi, y, gen);
      int a = 0;
      for (; a < d; ++a) {
        if (!g.periodic(a)) continue;
        if (++k[a] <= K) break;
        k[a] = -K;
      }
      if (a == d) break;
    }
    return total;
  };
  for (std::size_t j = 0; j < sup.nodes.size(); ++j) {
    g.node(sup.nodes[j], x);
    nl.images.push_back(K > 0 ? image_sum(true) : 0.0);
  }
  std::size_t next = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (next < sup.nodes.size() && sup.nodes[next] == n) {
      ++next;
      continue;
    }
    bool duplicate = false, even = true;
    for (int a = 0; a < d; ++a) {
      duplicate = duplicate || (g.periodic(a) && g.axis_index(n, a) == g.points(a) - 1);
      even = even && g.axis_index(n, a) % 2 == 0;
    }
    if (duplicate) continue;
    g.node(n, x);
    nl.nodes.push_back(n);
    nl.even.push_back(even);
    nl.outside.push_back(image_sum(false));
  }
  return nl;
}

}  // namespace

TestFunctionSpec bump_test_function(std::vector<double> center, double radius) {
  if (!(radius > 0.0) || center.empty()) throw std::invalid_argument("bump_test_function: bad center or radius");
  TestFunctionSpec spec;
  for (double c : center) {
    spec.support_lower.push_back(c - radius);
    spec.support_upper.push_back(c + radius);
  }
  spec.psi = [center, radius](std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t a = 0; a < center.size(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    r2 /= radius * radius;
    return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
  };
  return spec;
}

ResidualResult weak_residual(const SpaceTimeField& field, const PideProblem& problem,
                             std::span<const TestFunctionSpec> tests, double t, std::span<const double> std_errors) {
  if (problem.mode != PideMode::semilinear && problem.mode != PideMode::linear_fk) {
    throw std::invalid_argument("weak_residual: semilinear and linear problems only");
  }
  const SpaceGrid& g = field.space();
  const TimeGrid& time = field.time();
  const int d = g.dim();
  const int k = field.components();
  if (problem.triple.dim() != d) throw std::invalid_argument("weak_residual: noise and space dimension differ");
  if (!problem.phi) throw std::invalid_argument("weak_residual: terminal data phi is required");
  const int last = time.index_of(t);
  const double dt = time.dt();
  auto sigma = [&](int i) { return std_errors.empty() ? 0.0 : std_errors[i]; };
  const LevyTriple adjoint = problem.triple.reflected();
  const GeneratorOptions gen;

  ResidualResult worst;
  double worst_excess = -std::numeric_limits<double>::infinity();
  std::vector<double> x(d), uv(k), out(std::max(k * k, d));
  for (const auto& spec : tests) {
    const Support sup = support_nodes(g, spec);
    const std::size_t count = sup.nodes.size();
    std::vector<double> psi(count), lpsi(count);
    double psi_l1 = 0.0, lpsi_l1 = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      g.node(sup.nodes[j], x);
      psi[j] = spec.psi(x);
      lpsi[j] = apply_generator(adjoint, spec.psi, x, gen);
      psi_l1 += std::fabs(psi[j]) * sup.cell;
    }
    // Jumps spread L* psi over the whole box and beyond it.
    Nonlocal nl;
    if (adjoint.has_jumps()) nl = nonlocal_terms(g, spec, sup, adjoint, gen);
    for (std::size_t j = 0; j < count; ++j) {
      if (!nl.images.empty()) lpsi[j] += nl.images[j];
      lpsi_l1 += std::fabs(lpsi[j]) * sup.cell;
    }
    double outside_l1 = 0.0;
    for (double v : nl.outside) outside_l1 += std::fabs(v) * sup.cell;
    // Pairing with quadrature on the full grid and on the subgrid of every other node.
    auto pair = [&](auto value) {
      double fine = 0.0, coarse = 0.0;
      for (std::size_t j = 0; j < count; ++j) {
        const double v = value(j);
        fine += v;
        if (sup.even[j]) coarse += v;
      }
      return std::pair{fine * sup.cell, coarse * sup.cell * (1 << d)};
    };

    // Per slice: <u_s, L* psi> + <G.grad u + F (+ H u), psi>, with gradients at spacing h and 2h,
    // and the Monte Carlo sensitivity of the pairing to a perturbation of u_s.
    struct SliceTerms {
      double fine = 0.0, coarse = 0.0, grad2h = 0.0, sensitivity = 0.0;
    };
    auto slice_terms = [&](int i) {
      SliceTerms st;
      const double s = time.time(i);
      std::vector<double> value(count), value2(count), flux(count * d), dfdu(count);
      for (std::size_t j = 0; j < count; ++j) {
        const std::size_t n = sup.nodes[j];
        g.node(n, x);
        for (int c = 0; c < k; ++c) uv[c] = field.at(i, n, c);
        double v = uv[0] * lpsi[j];
        double grad_term = 0.0, grad_term2 = 0.0;
        if (problem.G) {
          problem.G(s, x, uv, {out.data(), static_cast<std::size_t>(d)});
          const Eigen::MatrixXd grad = field.estimate_gradient(i, n);
          for (int a = 0; a < d; ++a) {
            grad_term += out[a] * grad(a, 0);
            const std::size_t st2 = 2 * g.stride(a);
            const int ia = g.axis_index(n, a);
            double g2 = grad(a, 0);
            if (ia >= 2 && ia + 2 < g.points(a)) g2 = (field.at(i, n + st2, 0) - field.at(i, n - st2, 0)) / (4.0 * g.spacing(a));
            grad_term2 += out[a] * g2;
            flux[j * d + a] = out[a] * psi[j];
          }
        }
        double source = 0.0;
        if (problem.F) {
          problem.F(s, x, uv, {out.data(), static_cast<std::size_t>(k)});
          source = out[0];
          if (problem.F_depends_on_u) {
            const double eps = 1e-6 * std::max(1.0, std::fabs(uv[0]));
            const double u0 = uv[0];
            uv[0] = u0 + eps;
            problem.F(s, x, uv, {out.data(), static_cast<std::size_t>(k)});
            const double up = out[0];
            uv[0] = u0 - eps;
            problem.F(s, x, uv, {out.data(), static_cast<std::size_t>(k)});
            dfdu[j] = (up - out[0]) / (2.0 * eps);
            uv[0] = u0;
          }
        }
        if (problem.mode == PideMode::linear_fk && problem.H) {
          problem.H(s, x, {out.data(), static_cast<std::size_t>(k * k)});
          for (int l = 0; l < k; ++l) source += out[l * k] * uv[l];
          dfdu[j] = out[0];
        }
        value[j] = v + (grad_term + source) * psi[j];
        value2[j] = v + (grad_term2 + source) * psi[j];
      }
      auto [f, c] = pair([&](std::size_t j) { return value[j]; });
      st.fine = f;
      st.coarse = c;
      st.grad2h = pair([&](std::size_t j) { return value2[j]; }).first;
      double far = 0.0, far_coarse = 0.0;
      for (std::size_t q = 0; q < nl.nodes.size(); ++q) {
        const double v = field.at(i, nl.nodes[q], 0) * nl.outside[q];
        far += v;
        if (nl.even[q]) far_coarse += v;
      }
      st.fine += far * sup.cell;
      st.grad2h += far * sup.cell;
      st.coarse += far_coarse * sup.cell * (1 << d);
      // |<delta u, L* psi - div(G psi) + dF/du psi>| per unit sup-norm perturbation.
      double sens = lpsi_l1 + outside_l1;
      for (std::size_t j = 0; j < count; ++j) sens += std::fabs(dfdu[j] * psi[j]) * sup.cell;
      if (problem.G) {
        for (std::size_t j = 0; j < count; ++j) {
          const std::size_t n = sup.nodes[j];
          double div = 0.0;
          for (int a = 0; a < d; ++a) {
            // Neighbours outside the support carry psi = 0.
            auto at = [&](std::ptrdiff_t off) {
              const auto it = std::lower_bound(sup.nodes.begin(), sup.nodes.end(), n + off);
              if (it == sup.nodes.end() || *it != n + off) return 0.0;
              return flux[(it - sup.nodes.begin()) * d + a];
            };
            const auto st1 = static_cast<std::ptrdiff_t>(g.stride(a));
            div += (at(st1) - at(-st1)) / (2.0 * g.spacing(a));
          }
          sens += std::fabs(div) * sup.cell;
        }
      }
      st.sensitivity = sens;
      return st;
    };

    auto [u_t, u_t2] = pair([&](std::size_t j) { return field.at(last, sup.nodes[j], 0) * psi[j]; });
    std::vector<double> phi(k);
    auto [u_0, u_02] = pair([&](std::size_t j) {
      g.node(sup.nodes[j], x);
      problem.phi(x, phi);
      return phi[0] * psi[j];
    });
    double integral = 0.0, integral_sub = 0.0, integral_grad = 0.0, integral_coarse_time = 0.0, mc = 0.0;
    std::vector<SliceTerms> terms;
    for (int i = 0; i <= last; ++i) terms.push_back(slice_terms(i));
    for (int i = 0; i < last; ++i) {
      integral += 0.5 * dt * (terms[i].fine + terms[i + 1].fine);
      integral_sub += 0.5 * dt * (terms[i].coarse + terms[i + 1].coarse);
      integral_grad += 0.5 * dt * (terms[i].grad2h + terms[i + 1].grad2h);
      mc += 0.5 * dt * (sigma(i) * terms[i].sensitivity + sigma(i + 1) * terms[i + 1].sensitivity);
    }
    for (int i = 0; i + 2 <= last; i += 2) integral_coarse_time += dt * (terms[i].fine + terms[i + 2].fine);
    if (last % 2 == 1) integral_coarse_time += 0.5 * dt * (terms[last - 1].fine + terms[last].fine);

    const double gap = u_t - u_0 - integral;
    const double gap_sub = u_t2 - u_02 - integral_sub;
    const double gap_grad = u_t - u_0 - integral_grad;
    const double gap_time = u_t - u_0 - integral_coarse_time;
    double sup_u = 0.0;
    for (int i = 0; i <= last; ++i) sup_u = std::max(sup_u, field.sup_norm(i));
    // Space quadrature, gradient differencing and time quadrature, each estimated by coarsening.
    // All three rules are second order, so the fine error is a third of the fine-coarse gap.
    double tol = (std::fabs(gap - gap_sub) + std::fabs(gap - gap_grad) + std::fabs(gap - gap_time)) / 3.0;
    tol += std::fabs(t) * sup_u * gen.tolerance * count * sup.cell;
    tol += 3.0 * (sigma(last) * psi_l1 + mc);
    // Mass of L* psi farther than nl.reach from the support is left out.
    if (adjoint.has_jumps()) tol += std::fabs(t) * sup_u * psi_l1 * tail_mass(adjoint, nl.reach);
    if (std::fabs(gap) - tol > worst_excess) {
      worst_excess = std::fabs(gap) - tol;
      worst.residual = std::fabs(gap);
      worst.tolerance = tol;
    }
  }
  return worst;
}

StrongResidual strong_residual(const SpaceTimeField& field, const PideProblem& problem, double t,
                               std::span<const double> x, double std_error) {
  const SpaceGrid& g = field.space();
  const TimeGrid& time = field.time();
  const int d = g.dim();
  const int k = field.components();
  const int m = problem.triple.dim();
  if (static_cast<int>(x.size()) != d) throw std::invalid_argument("strong_residual: x has the wrong dimension");
  const int i = time.index_of(t);
  if (i >= time.steps()) throw std::invalid_argument("strong_residual: t must not be the last time node");
  std::size_t node;
  node_index_of(g, x, node);
  const CouplingMode coupling = coupling_mode(problem.mode);
  if (coupling == CouplingMode::drift_only && m != d) {
    throw std::invalid_argument("strong_residual: noise and space dimension differ");
  }

  GeneratorOptions gen;
  double hmin = g.spacing(0);
  for (int a = 1; a < d; ++a) hmin = std::min(hmin, g.spacing(a));
  gen.fd_step = std::min(gen.fd_step, 0.25 * hmin);
  bool subgrid = true;
  for (int a = 0; a < d; ++a) {
    subgrid = subgrid && (g.points(a) - 1) % 2 == 0 && g.axis_index(node, a) % 2 == 0 && g.points(a) >= 9;
  }

  std::vector<double> u(k);
  for (int c = 0; c < k; ++c) u[c] = field.at(i, node, c);

  Eigen::MatrixXd coef;
  if (coupling == CouplingMode::drift_only) {
    coef = Eigen::MatrixXd::Zero(d, 1);
  } else {
    coef = Eigen::MatrixXd::Zero(d, m);
  }
  if (problem.G) problem.G(t, x, u, {coef.data(), static_cast<std::size_t>(coef.size())});

  // Spatial operator applied to one component of an interpolated slice.
  auto spatial = [&](const ScalarFn& fn) {
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    finite_difference_derivatives(fn, x, gen.fd_step, grad, hess);
    if (coupling == CouplingMode::drift_only) {
      double v = 0.5 * (problem.triple.covariance().cwiseProduct(hess)).sum() + problem.triple.drift().dot(grad);
      v += grad.dot(coef.col(0));
      if (problem.triple.has_jumps()) {
        const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m, m);
        v += apply_jump_operator(problem.triple, fn, x, id, id, grad, hess, gen);
      }
      return v;
    }
    const Eigen::MatrixXd a = coef * problem.triple.covariance() * coef.transpose();
    double v = 0.5 * a.cwiseProduct(hess).sum() + grad.dot(coef * problem.triple.drift());
    if (problem.triple.has_jumps()) {
      const Eigen::MatrixXd big =
          coupling == CouplingMode::general ? coef : Eigen::MatrixXd::Identity(d, m);
      v += apply_jump_operator(problem.triple, fn, x, coef, big, grad, hess, gen);
    }
    return v;
  };

  std::vector<double> source(k, 0.0), hmat(k * k, 0.0);
  if (problem.F) problem.F(t, x, u, source);
  if (problem.mode == PideMode::linear_fk && problem.H) problem.H(t, x, hmat);

  // Checkerboard field of unit amplitude: the operator's response bounds how
  // node-wise Monte Carlo noise propagates into the residual.
  SpaceTimeField checker(g, TimeGrid::from_steps(-time.dt(), 1), 1);
  for (std::size_t n = 0; n < g.size(); ++n) {
    int parity = 0;
    for (int a = 0; a < d; ++a) parity += g.axis_index(n, a);
    checker.at(0, n) = parity % 2 == 0 ? 1.0 : -1.0;
  }
  const SmoothSlice checker_fn(checker, 0, 0);
  const double noise_gain = std::fabs(spatial([&](std::span<const double> y) { return checker_fn(y); }));

  StrongResidual result;
  result.residual = Eigen::VectorXd::Zero(k);
  double tolerance = 0.0;
  const bool second_order = i + 2 <= time.steps();
  for (int c = 0; c < k; ++c) {
    const double u0 = field.at(i, node, c), u1 = field.at(i + 1, node, c);
    const double first = (u0 - u1) / time.dt();
    double dudt = first;
    if (second_order) dudt = (3.0 * u0 - 4.0 * u1 + field.at(i + 2, node, c)) / (2.0 * time.dt());
    const SmoothSlice fine(field, i, c);
    const double op = spatial([&](std::span<const double> y) { return fine(y); });
    double r = dudt + op + source[c];
    for (int l = 0; l < k; ++l) r += hmat[c + l * k] * u[l];
    result.residual[c] = r;

    double allowance = std::fabs(dudt - first);
    if (subgrid) {
      const SmoothSlice coarse(field, i, c, 2);
      allowance += std::fabs(op - spatial([&](std::span<const double> y) { return coarse(y); }));
    } else {
      allowance += 4.0 * field.interpolation_error_bound(i) * noise_gain;
    }
    allowance += 4.0 * gen.tolerance;
    allowance += 3.0 * std_error * ((second_order ? 8.0 : 2.0) / time.dt() + noise_gain);
    tolerance = std::max(tolerance, allowance);
  }
  result.tolerance = tolerance;
  return result;
}

}  // namespace levypide
