#ifndef CARLEMAN_LAB_GRID_HPP
#define CARLEMAN_LAB_GRID_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "carleman_lab/error.hpp"
#include "carleman_lab/geometry.hpp"

namespace carleman_lab {

/// Largest tau/h for which the explicit leapfrog scheme is stable.
inline double cfl_bound(int dimension) { return dimension == 1 ? 1.0 : 1.0 / std::sqrt(2.0); }

/// Uniform space-time grid. Spatial nodes are flattened as ix + nx * iy.
struct Grid {
  DomainSpec domain;
  std::size_t nx = 0;
  std::size_t ny = 1;
  std::size_t nt = 0;
  double hx = 0.0;
  double hy = 0.0;
  double tau = 0.0;

  int dim() const { return domain.dimension; }
  std::size_t nspace() const { return nx * ny; }
  std::size_t size() const { return nspace() * nt; }
  double h() const { return dim() == 1 ? hx : std::min(hx, hy); }
  double cfl() const { return tau / h(); }

  std::size_t ix(std::size_t idx) const { return idx % nx; }
  std::size_t iy(std::size_t idx) const { return idx / nx; }
  std::size_t index(std::size_t i, std::size_t j = 0) const { return i + nx * j; }

  double coord(int axis, std::size_t i) const {
    const std::size_t n = axis == 0 ? nx : ny;
    if (i + 1 == n) return domain.upper[axis];
    return domain.lower[axis] + static_cast<double>(i) * (axis == 0 ? hx : hy);
  }

  Point node(std::size_t idx) const {
    Point p{coord(0, ix(idx)), 0.0};
    if (dim() == 2) p[1] = coord(1, iy(idx));
    return p;
  }

  double time(std::size_t k) const {
    return k + 1 == nt ? domain.T : static_cast<double>(k) * tau;
  }

  bool is_boundary(std::size_t idx) const {
    const std::size_t i = ix(idx);
    if (i == 0 || i + 1 == nx) return true;
    if (dim() == 2) {
      const std::size_t j = iy(idx);
      return j == 0 || j + 1 == ny;
    }
    return false;
  }

  std::size_t stride(int axis) const {
    if (axis == 0) return 1;
    if (axis == 1) return nx;
    return nspace();
  }

  std::size_t extent(int axis) const {
    if (axis == 0) return nx;
    if (axis == 1) return ny;
    return nt;
  }

  double step(int axis) const {
    if (axis == 0) return hx;
    if (axis == 1) return hy;
    return tau;
  }

  bool operator==(const Grid&) const = default;
};

/// Builds a grid with tau = T / ceil(T / (cfl_target * h)), so tau <= cfl_target * h.
inline Grid build_grid(const DomainSpec& domain, std::size_t nx, std::size_t ny, double cfl_target) {
  domain.check();
  if (nx < 3 || (domain.dimension == 2 && ny < 3)) {
    throw Error(ErrorKind::invalid_argument, "grid.nx", "need at least 3 nodes per axis");
  }
  const double bound = cfl_bound(domain.dimension);
  if (!(cfl_target > 0.0) || cfl_target > bound) {
    throw Error(ErrorKind::invalid_argument, "grid.cfl",
                "cfl target must lie in (0, " + std::to_string(bound) + "]");
  }
  Grid g;
  g.domain = domain;
  g.nx = nx;
  g.ny = domain.dimension == 2 ? ny : 1;
  g.hx = domain.length(0) / static_cast<double>(nx - 1);
  g.hy = domain.dimension == 2 ? domain.length(1) / static_cast<double>(g.ny - 1) : 0.0;
  const double tau_target = cfl_target * g.h();
  // The small relative slack keeps T/tau_target from rounding up past an exact integer.
  const auto steps = static_cast<std::size_t>(std::ceil(domain.T / tau_target * (1.0 - 1e-12)));
  g.nt = std::max<std::size_t>(steps, 2) + 1;
  g.tau = domain.T / static_cast<double>(g.nt - 1);
  return g;
}

/// 1D grids, or 2D grids with ny chosen so that hy is as close as possible to hx.
inline Grid build_grid(const DomainSpec& domain, std::size_t nx, double cfl_target) {
  std::size_t ny = 1;
  if (domain.dimension == 2) {
    const double ratio = domain.length(1) / domain.length(0);
    ny = static_cast<std::size_t>(std::lround(ratio * static_cast<double>(nx - 1))) + 1;
  }
  return build_grid(domain, nx, ny, cfl_target);
}

/// Values at the spatial nodes only (potentials, initial data).
using SpatialField = std::vector<double>;

template <class F>
SpatialField sample_spatial(const Grid& g, F&& f) {
  SpatialField out(g.nspace());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(g.node(i));
  return out;
}

/// Space-time samples, stored time level by time level.
///
/// `log_offset` records the constant phi* subtracted inside e^{s(phi - phi*)} when
/// the field carries a normalized Carleman weight; plain fields keep 0.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) {}

  template <class F>
  static Field sample(const Grid& g, F&& f) {
    Field out(g);
    for (std::size_t k = 0; k < g.nt; ++k) {
      const double t = g.time(k);
      for (std::size_t i = 0; i < g.nspace(); ++i) out(i, k) = f(g.node(i), t);
    }
    return out;
  }

  /// Time-independent field repeated at every level.
  static Field from_spatial(const Grid& g, const SpatialField& s) {
    Field out(g);
    for (std::size_t k = 0; k < g.nt; ++k) {
      std::copy(s.begin(), s.end(), out.level(k).begin());
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator()(std::size_t idx, std::size_t k) { return values_[k * grid_.nspace() + idx]; }
  double operator()(std::size_t idx, std::size_t k) const { return values_[k * grid_.nspace() + idx]; }

  std::span<double> level(std::size_t k) { return {values_.data() + k * grid_.nspace(), grid_.nspace()}; }
  std::span<const double> level(std::size_t k) const {
    return {values_.data() + k * grid_.nspace(), grid_.nspace()};
  }

  SpatialField spatial(std::size_t k) const {
    auto l = level(k);
    return {l.begin(), l.end()};
  }

  double log_offset() const { return log_offset_; }
  void set_log_offset(double v) { log_offset_ = v; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  Field& operator+=(const Field& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }
  /// Pointwise product.
  Field& operator*=(const Field& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= o.values_[i];
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, const Field& b) { return a *= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

 private:
  Grid grid_;
  std::vector<double> values_;
  double log_offset_ = 0.0;
};

// ---------------------------------------------------------------------------
// Finite-difference stencils

/// Up to four-point stencil; offsets are relative node indices along one axis.
struct Stencil {
  std::array<long, 4> offset{};
  std::array<double, 4> weight{};
  int size = 0;
};

/// Second-order first derivative: centered inside, one-sided three-point at the ends.
inline Stencil first_difference(std::size_t i, std::size_t n, double h) {
  const double c = 1.0 / (2.0 * h);
  if (i == 0) return {{0, 1, 2, 0}, {-3.0 * c, 4.0 * c, -1.0 * c, 0.0}, 3};
  if (i + 1 == n) return {{0, -1, -2, 0}, {3.0 * c, -4.0 * c, 1.0 * c, 0.0}, 3};
  return {{-1, 1, 0, 0}, {-c, c, 0.0, 0.0}, 2};
}

/// Second-order second derivative: three-point inside, one-sided four-point at the ends.
/// With only three nodes the ends fall back to the (first-order) three-point formula.
inline Stencil second_difference(std::size_t i, std::size_t n, double h) {
  const double c = 1.0 / (h * h);
  if (n < 4 && (i == 0 || i + 1 == n)) {
    const long sgn = i == 0 ? 1 : -1;
    return {{0, sgn, 2 * sgn, 0}, {c, -2.0 * c, c, 0.0}, 3};
  }
  if (i == 0) return {{0, 1, 2, 3}, {2.0 * c, -5.0 * c, 4.0 * c, -1.0 * c}, 4};
  if (i + 1 == n) return {{0, -1, -2, -3}, {2.0 * c, -5.0 * c, 4.0 * c, -1.0 * c}, 4};
  return {{-1, 0, 1, 0}, {c, -2.0 * c, c, 0.0}, 3};
}

namespace detail {

inline std::size_t axis_position(const Grid& g, int axis, std::size_t idx, std::size_t k) {
  if (axis == 0) return g.ix(idx);
  if (axis == 1) return g.iy(idx);
  return k;
}

template <class StencilFn>
Field apply_axis(const Field& f, int axis, StencilFn&& make) {
  const Grid& g = f.grid();
  Field out(g);
  const std::size_t n = g.extent(axis);
  const double h = g.step(axis);
  const long stride = static_cast<long>(g.stride(axis));
  const auto& in = f.values();
  auto& res = out.values();
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      const std::size_t flat = k * g.nspace() + i;
      const Stencil st = make(axis_position(g, axis, i, k), n, h);
      double acc = 0.0;
      for (int j = 0; j < st.size; ++j) {
        acc += st.weight[j] * in[static_cast<std::size_t>(static_cast<long>(flat) + st.offset[j] * stride)];
      }
      res[flat] = acc;
    }
  }
  return out;
}

}  // namespace detail

inline constexpr int kTimeAxis = 2;

inline Field dt(const Field& f) { return detail::apply_axis(f, kTimeAxis, first_difference); }
inline Field dtt(const Field& f) { return detail::apply_axis(f, kTimeAxis, second_difference); }
inline Field dx(const Field& f, int axis) { return detail::apply_axis(f, axis, first_difference); }
inline Field dxx(const Field& f, int axis) { return detail::apply_axis(f, axis, second_difference); }

inline std::vector<Field> grad(const Field& f) {
  std::vector<Field> out;
  for (int a = 0; a < f.grid().dim(); ++a) out.push_back(dx(f, a));
  return out;
}

inline Field laplacian(const Field& f) {
  Field out = dxx(f, 0);
  if (f.grid().dim() == 2) out += dxx(f, 1);
  return out;
}

// ---------------------------------------------------------------------------
// Boundary

struct BoundaryNode {
  std::size_t index = 0;  ///< flattened spatial index
  Point normal{0.0, 0.0};
  int axis = 0;           ///< axis the outward normal points along
  int side = 1;           ///< -1 at the lower face, +1 at the upper face
  int edge = 0;           ///< face id: 2 * axis + (side > 0)
  bool in_gamma0 = false;
  double weight = 1.0;    ///< surface quadrature weight (1 in 1D: counting measure)
};

/// Boundary nodes face by face. In 2D a corner appears once per adjacent edge.
struct BoundaryPartition {
  std::vector<BoundaryNode> nodes;

  std::size_t count_gamma0() const {
    std::size_t c = 0;
    for (const auto& n : nodes) c += n.in_gamma0 ? 1 : 0;
    return c;
  }
};

/// Marks each boundary node of the grid with (x - x0) . nu >= 0.
inline BoundaryPartition boundary_partition(const Grid& g) {
  BoundaryPartition p;
  const DomainSpec& d = g.domain;
  auto push = [&](std::size_t idx, int axis, int side, double weight) {
    BoundaryNode b;
    b.index = idx;
    b.axis = axis;
    b.side = side;
    b.edge = 2 * axis + (side > 0 ? 1 : 0);
    b.normal = {0.0, 0.0};
    b.normal[axis] = static_cast<double>(side);
    b.in_gamma0 = in_gamma0(g.node(idx), b.normal, d);
    b.weight = weight;
    p.nodes.push_back(b);
  };
  if (g.dim() == 1) {
    push(0, 0, -1, 1.0);
    push(g.nx - 1, 0, 1, 1.0);
    return p;
  }
  auto edge_weight = [](std::size_t i, std::size_t n, double h) { return (i == 0 || i + 1 == n) ? 0.5 * h : h; };
  for (int side : {-1, 1}) {
    const std::size_t i = side < 0 ? 0 : g.nx - 1;
    for (std::size_t j = 0; j < g.ny; ++j) push(g.index(i, j), 0, side, edge_weight(j, g.ny, g.hy));
  }
  for (int side : {-1, 1}) {
    const std::size_t j = side < 0 ? 0 : g.ny - 1;
    for (std::size_t i = 0; i < g.nx; ++i) push(g.index(i, j), 1, side, edge_weight(i, g.nx, g.hx));
  }
  return p;
}

/// Values on boundary nodes, indexed (boundary node, time level).
struct BoundaryTrace {
  BoundaryPartition partition;
  std::size_t nt = 0;
  std::vector<double> values;

  double& at(std::size_t b, std::size_t k) { return values[k * partition.nodes.size() + b]; }
  double at(std::size_t b, std::size_t k) const { return values[k * partition.nodes.size() + b]; }
};

/// Outward normal derivative with one-sided second-order differences.
inline BoundaryTrace normal_derivative(const Field& f, const BoundaryPartition& part) {
  const Grid& g = f.grid();
  BoundaryTrace tr{part, g.nt, std::vector<double>(part.nodes.size() * g.nt)};
  for (std::size_t b = 0; b < part.nodes.size(); ++b) {
    const BoundaryNode& node = part.nodes[b];
    const std::size_t n = g.extent(node.axis);
    const std::size_t pos = node.axis == 0 ? g.ix(node.index) : g.iy(node.index);
    const Stencil st = first_difference(pos, n, g.step(node.axis));
    const long stride = static_cast<long>(g.stride(node.axis));
    for (std::size_t k = 0; k < g.nt; ++k) {
      double acc = 0.0;
      for (int j = 0; j < st.size; ++j) {
        const auto idx = static_cast<std::size_t>(static_cast<long>(node.index) + st.offset[j] * stride);
        acc += st.weight[j] * f(idx, k);
      }
      tr.at(b, k) = static_cast<double>(node.side) * acc;
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Composite trapezoidal quadrature

inline std::vector<double> trapezoid_weights(std::size_t n, double h) {
  std::vector<double> w(n, h);
  w.front() = 0.5 * h;
  w.back() = 0.5 * h;
  return w;
}

inline std::vector<double> space_weights(const Grid& g) {
  const auto wx = trapezoid_weights(g.nx, g.hx);
  if (g.dim() == 1) return wx;
  const auto wy = trapezoid_weights(g.ny, g.hy);
  std::vector<double> w(g.nspace());
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) w[g.index(i, j)] = wx[i] * wy[j];
  }
  return w;
}

inline std::vector<double> time_weights(const Grid& g) { return trapezoid_weights(g.nt, g.tau); }

inline double integrate_space(const Grid& g, std::span<const double> values) {
  const auto w = space_weights(g);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * values[i];
  return acc;
}

inline double integrate_space_at(const Field& f, std::size_t k) { return integrate_space(f.grid(), f.level(k)); }

inline double integrate_spacetime(const Field& f) {
  const Grid& g = f.grid();
  const auto ws = space_weights(g);
  const auto wt = time_weights(g);
  double acc = 0.0;
  for (std::size_t k = 0; k < g.nt; ++k) {
    auto l = f.level(k);
    double level = 0.0;
    for (std::size_t i = 0; i < ws.size(); ++i) level += ws[i] * l[i];
    acc += wt[k] * level;
  }
  return acc;
}

enum class BoundaryMask { all, gamma0 };

/// Time trapezoid times the surface weights of the selected nodes.
template <class Integrand>
double integrate_boundary_time_with(const BoundaryTrace& tr, double tau, BoundaryMask mask, Integrand&& g) {
  const auto wt = trapezoid_weights(tr.nt, tau);
  double acc = 0.0;
  for (std::size_t k = 0; k < tr.nt; ++k) {
    for (std::size_t b = 0; b < tr.partition.nodes.size(); ++b) {
      const BoundaryNode& node = tr.partition.nodes[b];
      if (mask == BoundaryMask::gamma0 && !node.in_gamma0) continue;
      acc += wt[k] * node.weight * g(tr.at(b, k), b, k);
    }
  }
  return acc;
}

inline double integrate_boundary_time(const BoundaryTrace& tr, const Grid& g, BoundaryMask mask) {
  return integrate_boundary_time_with(tr, g.tau, mask, [](double v, std::size_t, std::size_t) { return v; });
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_GRID_HPP
