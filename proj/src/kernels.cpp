#include "levypide/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace levypide::kernels {

IncrementTable::IncrementTable(const LevyTriple& triple, bool split, double dt, std::uint64_t seed,
                               std::size_t particles, std::uint64_t first_interval, std::uint64_t intervals,
                               double small_jump_cutoff, bool parallel)
    : m_(triple.dim()), particles_(particles), first_(first_interval), count_(intervals) {
  data_.resize(static_cast<std::size_t>(m_) * particles * intervals);
  if (split) big_.resize(data_.size());
  const long long n = static_cast<long long>(particles);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long p = 0; p < n; ++p) {
    const NoiseStream noise(seed, static_cast<std::uint64_t>(p));
    for (std::uint64_t e = 0; e < intervals; ++e) {
      auto draws = noise.step(first_interval + e);
      const std::size_t offset = (e * particles + static_cast<std::size_t>(p)) * m_;
      if (split) {
        sample_split_increment(triple, dt, draws, {data_.data() + offset, static_cast<std::size_t>(m_)},
                               {big_.data() + offset, static_cast<std::size_t>(m_)}, small_jump_cutoff);
      } else {
        sample_increment(triple, dt, draws, {data_.data() + offset, static_cast<std::size_t>(m_)});
      }
    }
  }
}

namespace {

constexpr int kMax = 8;

struct Scratch {
  double x[kMax];
  double u[kMax], u_next[kMax];
  double coef[kMax * kMax];
  double source[kMax];
  double inc[kMax], big[kMax];
  double z[kMax * kMax], h[kMax * kMax], zh[kMax * kMax];
  double run[kMax];
  double restart_value[kMax];
  double first_coef[kMax * kMax];
  double first_source[kMax];
  double first_h[kMax * kMax];
};

// Multilinear stencil of one point: corner offsets into a slice and their weights.
// Computed once per position and applied to several slices.
struct Stencil {
  std::size_t offset[1 << kMax];
  double weight[1 << kMax];
  int size = 0;
};

struct Axes {
  int d = 0;
  double lower[kMax], inv_h[kMax];
  int cells[kMax];
  bool periodic[kMax];
  std::size_t stride[kMax];

  explicit Axes(const SpaceGrid& g) : d(g.dim()) {
    for (int a = 0; a < d; ++a) {
      lower[a] = g.lower(a);
      inv_h[a] = g.inv_spacing(a);
      cells[a] = g.points(a) - 1;
      periodic[a] = g.periodic(a);
      stride[a] = g.stride(a);
    }
  }

  // Matches SliceView: clamp outside the box, wrap periodic axes, snap near nodes.
  // Cell index and weight along one axis, matching SliceView: clamp outside
  // the box, wrap periodic axes, snap near nodes.
  void locate(int a, double x, int& i, double& w) const {
    double s = (x - lower[a]) * inv_h[a];
    const int n = cells[a];
    if (periodic[a]) {
      if (s < 0.0 || s >= n) s -= n * std::floor(s / n);
    } else if (!(s > 0.0)) {
      s = 0.0;
    } else if (s > n) {
      s = n;
    }
    i = static_cast<int>(s);  // s >= 0, so truncation is floor
    w = s - i;
    if (w < 1e-11) {
      w = 0.0;
    } else if (w > 1.0 - 1e-11) {
      w = 0.0;
      ++i;
    }
    if (i >= n) {
      i = periodic[a] ? i - n : n;
      if (!periodic[a]) w = 0.0;
    }
  }

  template <int D>
  void stencil(const double* x, int components, Stencil& st) const {
    if constexpr (D == 1) {
      int i;
      double w;
      locate(0, x[0], i, w);
      st.offset[0] = static_cast<std::size_t>(i) * components;
      st.weight[0] = 1.0 - w;
      st.offset[1] = st.offset[0] + components;
      st.weight[1] = w;
      st.size = w == 0.0 ? 1 : 2;
      return;
    }
    const int d = D > 0 ? D : this->d;
    int idx[kMax];
    double wt[kMax];
    for (int a = 0; a < d; ++a) locate(a, x[a], idx[a], wt[a]);
    st.size = 0;
    for (int corner = 0; corner < (1 << d); ++corner) {
      double weight = 1.0;
      std::size_t node = 0;
      for (int a = 0; a < d; ++a) {
        const bool up = (corner >> a) & 1;
        if (up && wt[a] == 0.0) {
          weight = 0.0;
          break;
        }
        weight *= up ? wt[a] : 1.0 - wt[a];
        node += static_cast<std::size_t>(idx[a] + (up ? 1 : 0)) * stride[a];
      }
      if (weight != 0.0) {
        st.offset[st.size] = node * components;
        st.weight[st.size] = weight;
        ++st.size;
      }
    }
  }
};

template <int K>
inline void apply(const Stencil& st, const double* values, int components, double* out) {
  const int k = K > 0 ? K : components;
  for (int c = 0; c < k; ++c) out[c] = 0.0;
  for (int n = 0; n < st.size; ++n) {
    const double* v = values + st.offset[n];
    for (int c = 0; c < k; ++c) out[c] += st.weight[n] * v[c];
  }
}

// D and K fix the space dimension and component count at compile time when positive.
template <int D, int K>
void estimate_node(const SliceContext& c, std::size_t node, Scratch& s, double* values, double* std_errors,
                   std::size_t& exits) {
  const PideProblem& pb = *c.problem;
  const SpaceGrid& grid = c.previous->space();
  const TimeGrid& time = c.previous->time();
  const int d = D > 0 ? D : grid.dim();
  const int m = pb.triple.dim();
  const int k = K > 0 ? K : pb.components;
  const int E = c.substeps;
  const double delta = time.dt() / E;
  const bool fk = pb.mode == PideMode::linear_fk;
  const bool need_u = (pb.G && pb.G_depends_on_u) || (pb.F && pb.F_depends_on_u);
  const bool split = c.coupling == CouplingMode::constant_big_jump;
  const std::size_t coef_size = c.coupling == CouplingMode::drift_only ? d : static_cast<std::size_t>(d) * m;
  const std::span<const double> xs(s.x, d);
  const std::span<const double> us(s.u, k);

  double x0[kMax];
  grid.node(node, {x0, static_cast<std::size_t>(d)});

  const Axes axes(grid);
  const std::size_t slice_size = grid.size() * k;
  const double* prev_values = c.previous->values().data();
  Stencil st;

  // Previous iterate at (t, X), linear in time between slices j and j - 1.
  auto previous_at = [&](int j, int q) {
    axes.stencil<D>(s.x, k, st);
    apply<K>(st, prev_values + j * slice_size, k, s.u);
    if (q == 0) return;
    apply<K>(st, prev_values + (j - 1) * slice_size, k, s.u_next);
    const double theta = static_cast<double>(q) / E;
    for (int i = 0; i < k; ++i) s.u[i] = (1.0 - theta) * s.u[i] + theta * s.u_next[i];
  };
  auto coefficients = [&](double t, double* coef, double* source, double* h) {
    if (pb.G) {
      pb.G(t, xs, us, {coef, coef_size});
    } else {
      std::fill(coef, coef + coef_size, 0.0);
    }
    if (pb.F) {
      pb.F(t, xs, us, {source, static_cast<std::size_t>(k)});
    } else {
      std::fill(source, source + k, 0.0);
    }
    if (fk && pb.H) pb.H(t, xs, {h, static_cast<std::size_t>(k * k)});
  };

  for (int i = 0; i < k; ++i) s.u[i] = 0.0;
  // Every particle starts at the node, so the first substep's coefficients are shared.
  for (int i = 0; i < d; ++i) s.x[i] = x0[i];
  if (need_u) previous_at(c.target, 0);
  coefficients(time.time(c.target), s.first_coef, s.first_source, s.first_h);

  const double* restart_values = c.current->values().data() + c.restart * slice_size;
  double shift[kMax] = {}, sum[kMax], sum2[kMax];
  for (int i = 0; i < k; ++i) sum[i] = sum2[i] = 0.0;

  for (std::size_t p = 0; p < c.particles; ++p) {
    const NoiseStream noise(c.seed, p);
    for (int i = 0; i < d; ++i) s.x[i] = x0[i];
    for (int i = 0; i < k; ++i) s.run[i] = 0.0;
    if (fk) {
      for (int i = 0; i < k * k; ++i) s.z[i] = 0.0;
      for (int i = 0; i < k; ++i) s.z[i * k + i] = 1.0;
    }
    for (int j = c.target; j > c.restart; --j) {
      for (int q = 0; q < E; ++q) {
        const double t = time.time(j) + q * delta;
        const std::uint64_t e = static_cast<std::uint64_t>(j) * E - q - 1;
        const double* coef = s.coef;
        const double* source = s.source;
        const double* h = s.h;
        if (j == c.target && q == 0) {
          coef = s.first_coef;
          source = s.first_source;
          h = s.first_h;
        } else {
          if (need_u) previous_at(j, q);
          coefficients(t, s.coef, s.source, s.h);
        }
        // Running source, weighted by Z for Feynman-Kac.
        if (fk) {
          for (int r = 0; r < k; ++r) {
            double acc = 0.0;
            for (int l = 0; l < k; ++l) acc += s.z[r + l * k] * source[l];
            s.run[r] += acc * delta;
          }
          // Z <- Z (I + H delta), column-major.
          for (int col = 0; col < k; ++col) {
            for (int r = 0; r < k; ++r) {
              double acc = 0.0;
              for (int l = 0; l < k; ++l) acc += s.z[r + l * k] * h[l + col * k];
              s.zh[r + col * k] = s.z[r + col * k] + acc * delta;
            }
          }
          for (int i = 0; i < k * k; ++i) s.z[i] = s.zh[i];
        } else {
          for (int r = 0; r < k; ++r) s.run[r] += source[r] * delta;
        }
        // Increment.
        const double* inc;
        const double* big = nullptr;
        if (c.table && c.table->covers(e)) {
          inc = c.table->increment(e, p);
          if (split) big = c.table->big(e, p);
        } else {
          auto draws = noise.step(e);
          if (split) {
            sample_split_increment(c.problem->triple, delta, draws, {s.inc, static_cast<std::size_t>(m)},
                                   {s.big, static_cast<std::size_t>(m)}, c.small_jump_cutoff);
            big = s.big;
          } else {
            sample_increment(c.problem->triple, delta, draws, {s.inc, static_cast<std::size_t>(m)});
          }
          inc = s.inc;
        }
        switch (c.coupling) {
          case CouplingMode::drift_only:
            for (int i = 0; i < d; ++i) s.x[i] += coef[i] * delta + inc[i];
            break;
          case CouplingMode::general:
          case CouplingMode::constant_big_jump:
            for (int i = 0; i < d; ++i) {
              double acc = big ? big[i] : 0.0;
              for (int l = 0; l < m; ++l) acc += coef[i + l * d] * inc[l];
              s.x[i] += acc;
            }
            break;
        }
      }
    }
    axes.stencil<D>(s.x, k, st);
    apply<K>(st, restart_values, k, s.restart_value);
    for (int a = 0; a < d; ++a) {
      if (!grid.periodic(a) && (s.x[a] < grid.lower(a) || s.x[a] > grid.upper(a))) {
        ++exits;
        break;
      }
    }
    for (int r = 0; r < k; ++r) {
      double v = s.run[r];
      if (fk) {
        for (int l = 0; l < k; ++l) v += s.z[r + l * k] * s.restart_value[l];
      } else {
        v += s.restart_value[r];
      }
      if (p == 0) shift[r] = v;
      const double dv = v - shift[r];
      sum[r] += dv;
      sum2[r] += dv * dv;
    }
  }
  const double n = static_cast<double>(c.particles);
  for (int r = 0; r < k; ++r) {
    values[r] = shift[r] + sum[r] / n;
    const double var = c.particles > 1 ? std::max(0.0, (sum2[r] - sum[r] * sum[r] / n) / (n - 1.0)) : 0.0;
    std_errors[r] = std::sqrt(var / n);
  }
}

using NodeFn = void (*)(const SliceContext&, std::size_t, Scratch&, double*, double*, std::size_t&);

NodeFn select(const SliceContext& c) {
  const int d = c.previous->space().dim();
  const int k = c.problem->components;
  if (d == 1 && k == 1) return &estimate_node<1, 1>;
  if (d == 2 && k == 1) return &estimate_node<2, 1>;
  if (d == 3 && k == 1) return &estimate_node<3, 1>;
  return &estimate_node<0, 0>;
}

void check(const SliceContext& c) {
  if (!c.problem || !c.previous || !c.current) throw std::invalid_argument("estimate_slice: incomplete context");
  if (!(c.restart < c.target) || c.restart < 0 || c.target > c.previous->time().steps()) {
    throw std::invalid_argument("estimate_slice: bad slice indices");
  }
  if (c.particles == 0 || c.substeps < 1) throw std::invalid_argument("estimate_slice: need particles and substeps");
  if (c.previous->space().dim() > kMax || c.problem->triple.dim() > kMax || c.problem->components > kMax) {
    throw std::invalid_argument("estimate_slice: dimensions above 8 are not supported");
  }
}

}  // namespace

SliceOutput estimate_slice_serial(const SliceContext& c) {
  check(c);
  const std::size_t nodes = c.previous->space().size();
  const int k = c.problem->components;
  SliceOutput out;
  out.values.resize(nodes * k);
  out.std_errors.resize(nodes * k);
  Scratch s;
  const NodeFn estimate_node = select(c);
  for (std::size_t n = 0; n < nodes; ++n) {
    estimate_node(c, n, s, out.values.data() + n * k, out.std_errors.data() + n * k, out.exits);
  }
  return out;
}

SliceOutput estimate_slice_parallel(const SliceContext& c) {
  check(c);
  const std::size_t nodes = c.previous->space().size();
  const int k = c.problem->components;
  SliceOutput out;
  out.values.resize(nodes * k);
  out.std_errors.resize(nodes * k);
  std::size_t exits = 0;
  const long long count = static_cast<long long>(nodes);
  const NodeFn estimate_node = select(c);
  // Each node is computed by one thread in a fixed particle order, so the
  // result does not depend on the thread count.
#pragma omp parallel reduction(+ : exits)
  {
    Scratch s;
#pragma omp for schedule(dynamic, 1)
    for (long long n = 0; n < count; ++n) {
      estimate_node(c, static_cast<std::size_t>(n), s, out.values.data() + n * k, out.std_errors.data() + n * k,
                    exits);
    }
  }
  out.exits = exits;
  return out;
}

}  // namespace levypide::kernels
