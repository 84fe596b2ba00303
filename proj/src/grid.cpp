#include "nharm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace nharm {

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

const char* kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::Cube:
      return "cube";
    case DomainKind::Ball:
      return "ball";
    case DomainKind::HalfBall:
      return "half_ball";
    case DomainKind::Graph:
      return "graph";
  }
  return "?";
}

}  // namespace

std::string DomainDescriptor::canonical() const {
  std::ostringstream os;
  os << kind_name(kind) << "(n=" << dim << ";"
     << (kind == DomainKind::Cube ? "size=" : "r=") << fmt_double(size);
  if (kind == DomainKind::Graph && chart) {
    os << ";phi=" << chart->phi_text << ";lip=" << fmt_double(chart->lip);
  }
  os << ")";
  return os.str();
}

GridPtr GridDomain::build(const DomainDescriptor& desc, int resolution,
                          double spacing) {
  if (desc.dim != 2 && desc.dim != 3)
    throw DomainError("grid dimension must be 2 or 3");
  if (!(desc.size > 0.0) || !std::isfinite(desc.size))
    throw DomainError("domain size must be positive and finite");
  if (resolution < 3)
    throw ResolutionError("resolution too small to contain an interior vertex");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw DomainError("grid spacing must be positive and finite");

  const bool half = desc.kind == DomainKind::HalfBall ||
                    desc.kind == DomainKind::Graph;
  if (desc.kind == DomainKind::Graph && !desc.chart)
    throw DomainError("graph domain needs a chart (phi, L)");
  if (half && resolution % 2 == 0)
    throw DomainError(
        "half-ball and graph domains need odd resolution so a vertex row "
        "lands on the flat face");

  const double extent =
      (desc.kind == DomainKind::Cube) ? desc.size : 2.0 * desc.size;
  if (std::abs(spacing * (resolution - 1) - extent) > 1e-9 * extent)
    throw DomainError("spacing " + fmt_double(spacing) + " times " +
                      std::to_string(resolution - 1) +
                      " cells does not match the domain extent " +
                      fmt_double(extent));

  auto g = std::shared_ptr<GridDomain>(new GridDomain);
  g->desc_ = desc;
  g->dim_ = desc.dim;
  g->resolution_ = resolution;
  g->h_ = spacing;
  for (int a = 0; a < 3; ++a) {
    g->shape_[a] = 1;
    g->origin_[a] = 0.0;
  }
  for (int a = 0; a < desc.dim; ++a) {
    g->shape_[a] = resolution;
    g->origin_[a] = (desc.kind == DomainKind::Cube) ? 0.0 : -desc.size;
  }
  if (half) {
    const int zaxis = desc.dim - 1;
    g->shape_[zaxis] = (resolution + 1) / 2;
    g->origin_[zaxis] = 0.0;
  }
  g->total_ = g->shape_[0] * g->shape_[1] * g->shape_[2];

  const double tol = 1e-12 * std::max(1.0, desc.size);
  auto inside = [&](double x, double y, double z) {
    switch (desc.kind) {
      case DomainKind::Cube:
        return true;  // the lattice covers exactly [0, size]^n
      case DomainKind::Ball:
      case DomainKind::HalfBall:
      case DomainKind::Graph: {
        const double r2 = x * x + y * y + z * z;
        return r2 <= (desc.size + tol) * (desc.size + tol);
      }
    }
    return false;
  };

  std::vector<char> in(static_cast<size_t>(g->total_), 0);
  for (Index k = 0; k < g->shape_[2]; ++k)
    for (Index j = 0; j < g->shape_[1]; ++j)
      for (Index i = 0; i < g->shape_[0]; ++i) {
        const double x = g->origin_[0] + g->h_ * i;
        const double y = g->origin_[1] + g->h_ * j;
        const double z = (g->dim_ == 3) ? g->origin_[2] + g->h_ * k : 0.0;
        in[static_cast<size_t>(g->lindex(i, j, k))] =
            inside(x, (g->dim_ >= 2) ? y : 0.0, z) ? 1 : 0;
      }

  g->mask_.resize(static_cast<size_t>(g->total_));
  for (Index v = 0; v < g->total_; ++v) {
    if (!in[static_cast<size_t>(v)]) {
      g->mask_[static_cast<size_t>(v)] = VertexClass::Exterior;
      continue;
    }
    bool interior = true;
    for (int a = 0; a < g->dim_ && interior; ++a)
      for (int dir = -1; dir <= 1 && interior; dir += 2) {
        const Index nb = g->neighbor(v, a, dir);
        if (nb < 0 || !in[static_cast<size_t>(nb)]) interior = false;
      }
    g->mask_[static_cast<size_t>(v)] =
        interior ? VertexClass::Interior : VertexClass::Boundary;
  }

  for (Index v = 0; v < g->total_; ++v) {
    switch (g->mask_[static_cast<size_t>(v)]) {
      case VertexClass::Interior:
        g->interior_.push_back(v);
        g->nonext_.push_back(v);
        break;
      case VertexClass::Boundary:
        g->boundary_.push_back(v);
        g->nonext_.push_back(v);
        break;
      case VertexClass::Exterior:
        break;
    }
  }
  if (g->interior_.empty())
    throw ResolutionError("resolution too small to contain an interior vertex");
  return g;
}

Vec GridDomain::physical_coord(Index v) const {
  Vec x = coord(v);
  return has_chart() ? chart_inverse(x) : x;
}

Vec GridDomain::chart_forward(ConstVecRef y) const {
  if (!has_chart()) throw DomainError("grid has no chart");
  if (y.size() != dim_) throw DomainError("chart input has the wrong size");
  Vec x = y;
  x[dim_ - 1] -= desc_.chart->phi(y.head(dim_ - 1));
  return x;
}

Vec GridDomain::chart_inverse(ConstVecRef x) const {
  if (!has_chart()) throw DomainError("grid has no chart");
  if (x.size() != dim_) throw DomainError("chart input has the wrong size");
  Vec y = x;
  y[dim_ - 1] += desc_.chart->phi(x.head(dim_ - 1));
  return y;
}

bool GridDomain::on_flat_face(Index v) const {
  if (desc_.kind != DomainKind::HalfBall && desc_.kind != DomainKind::Graph)
    return false;
  return multi(v)[dim_ - 1] == 0 && non_exterior(v);
}

std::vector<Index> GridDomain::ball_vertices(ConstVecRef center, double r,
                                             bool interior_only) const {
  if (center.size() != dim_)
    throw DomainError("ball center has the wrong dimension");
  if (!(r >= 0.0)) throw DomainError("ball radius must be nonnegative");
  const double slack = 1e-12 * std::max(1.0, r);
  std::array<Index, 3> lo = {0, 0, 0}, hi = {0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    lo[a] = std::max<Index>(
        0, static_cast<Index>(
               std::ceil((center[a] - r - origin_[a]) / h_ - 1e-9)));
    hi[a] = std::min<Index>(
        shape_[a] - 1, static_cast<Index>(std::floor(
                           (center[a] + r - origin_[a]) / h_ + 1e-9)));
  }
  std::vector<Index> out;
  const double r2 = (r + slack) * (r + slack);
  for (Index k = lo[2]; k <= hi[2]; ++k)
    for (Index j = lo[1]; j <= hi[1]; ++j)
      for (Index i = lo[0]; i <= hi[0]; ++i) {
        const Index v = lindex(i, j, k);
        if (interior_only ? !is_interior(v) : is_exterior(v)) continue;
        double d2 = 0.0;
        const Index m[3] = {i, j, k};
        for (int a = 0; a < dim_; ++a) {
          const double dx = origin_[a] + h_ * m[a] - center[a];
          d2 += dx * dx;
        }
        if (d2 <= r2) out.push_back(v);
      }
  return out;
}

bool GridDomain::ball_inside(ConstVecRef center, double r,
                             bool interior_only) const {
  if (center.size() != dim_)
    throw DomainError("ball center has the wrong dimension");
  const double slack = 1e-12 * std::max(1.0, r);
  std::array<Index, 3> lo = {0, 0, 0}, hi = {0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    lo[a] = static_cast<Index>(
        std::ceil((center[a] - r - origin_[a]) / h_ - 1e-9));
    hi[a] = static_cast<Index>(
        std::floor((center[a] + r - origin_[a]) / h_ + 1e-9));
  }
  const double r2 = (r + slack) * (r + slack);
  const Index klo = (dim_ == 3) ? lo[2] : 0, khi = (dim_ == 3) ? hi[2] : 0;
  for (Index k = klo; k <= khi; ++k)
    for (Index j = lo[1]; j <= hi[1]; ++j)
      for (Index i = lo[0]; i <= hi[0]; ++i) {
        double d2 = 0.0;
        const Index m[3] = {i, j, k};
        for (int a = 0; a < dim_; ++a) {
          const double dx = origin_[a] + h_ * m[a] - center[a];
          d2 += dx * dx;
        }
        if (d2 > r2) continue;
        if (!in_shape(i, j, k)) return false;
        const Index v = lindex(i, j, k);
        if (interior_only ? !is_interior(v) : is_exterior(v)) return false;
      }
  return true;
}

std::vector<Index> GridDomain::cube_vertices(Index center,
                                             int half_side_cells) const {
  if (center < 0 || center >= total_)
    throw DomainError("cube center is not a grid vertex");
  if (half_side_cells < 1)
    throw DomainError("cube half-side must be at least one cell");
  const auto m = multi(center);
  for (int a = 0; a < dim_; ++a)
    if (m[a] - half_side_cells < 0 || m[a] + half_side_cells >= shape_[a])
      throw DomainError("cube leaves the lattice");
  std::vector<Index> out;
  const Index klo = (dim_ == 3) ? m[2] - half_side_cells : 0;
  const Index khi = (dim_ == 3) ? m[2] + half_side_cells : 0;
  for (Index k = klo; k <= khi; ++k)
    for (Index j = m[1] - half_side_cells; j <= m[1] + half_side_cells; ++j)
      for (Index i = m[0] - half_side_cells; i <= m[0] + half_side_cells; ++i)
        out.push_back(lindex(i, j, k));
  return out;
}

std::vector<CubePair> dyadic_cubes(const GridDomain& grid,
                                   const std::vector<int>& levels) {
  for (int R : levels)
    if (R < 1) throw DomainError("dyadic level must be at least one cell");

  // every domain here is convex, so a cube lies inside the domain exactly
  // when its 2^n corners are non-exterior
  const int n = grid.dim();
  std::vector<CubePair> out;
  for (int R : levels) {
    for (Index v = 0; v < grid.vertex_count(); ++v) {
      const auto m = grid.multi(v);
      bool fits = true;
      for (int a = 0; a < n && fits; ++a)
        fits = (m[a] - 2 * R >= 0) && (m[a] + 2 * R < grid.shape()[a]);
      if (!fits) continue;
      bool ok = true;
      for (int corner = 0; corner < (1 << n) && ok; ++corner) {
        std::array<Index, 3> c = m;
        for (int a = 0; a < n; ++a)
          c[a] += ((corner >> a) & 1) ? 2 * R : -2 * R;
        ok = grid.non_exterior(grid.lindex(c[0], c[1], c[2]));
      }
      if (ok) out.push_back({v, R});
    }
  }
  return out;
}

Mat discrete_gradient(const GridDomain& grid, ConstVecRef values,
                      GradientMode mode,
                      std::vector<std::uint8_t>* defined) {
  if (values.size() != grid.vertex_count())
    throw DomainError("field size does not match the grid");
  const int n = grid.dim();
  const double h = grid.spacing();
  Mat g = Mat::Zero(grid.vertex_count(), n);
  if (defined) defined->assign(static_cast<size_t>(grid.vertex_count()), 0);

  for (Index v : grid.non_exterior_vertices()) {
    bool all_axes = true;
    for (int a = 0; a < n; ++a) {
      const Index vp = grid.neighbor(v, a, +1);
      const Index vm = grid.neighbor(v, a, -1);
      const bool okp = vp >= 0 && grid.non_exterior(vp);
      const bool okm = vm >= 0 && grid.non_exterior(vm);
      if (mode == GradientMode::ZeroExtension) {
        const double fp = okp ? values[vp] : 0.0;
        const double fm = okm ? values[vm] : 0.0;
        g(v, a) = (fp - fm) / (2.0 * h);
      } else {
        if (okp && okm)
          g(v, a) = (values[vp] - values[vm]) / (2.0 * h);
        else if (okp)
          g(v, a) = (values[vp] - values[v]) / h;
        else if (okm)
          g(v, a) = (values[v] - values[vm]) / h;
        else
          all_axes = false;
      }
    }
    if (defined) (*defined)[static_cast<size_t>(v)] = all_axes ? 1 : 0;
  }
  return g;
}

CutoffProfile cutoff(const GridPtr& grid, Index center, double t, double s,
                     bool clip_to_domain) {
  if (!grid) throw DomainError("cutoff needs a grid");
  const GridDomain& G = *grid;
  if (center < 0 || center >= G.vertex_count() || G.is_exterior(center))
    throw DomainError("cutoff center must be a non-exterior vertex");
  if (!(t >= 0.0)) throw DomainError("cutoff plateau radius must be >= 0");
  if (!(t < s)) throw DomainError("cutoff needs t < s");
  const double h = G.spacing();
  if (s - t < 2.0 * h * (1.0 - 1e-12))
    throw DomainError("cutoff annulus needs at least two layers (s - t >= 2h)");
  const Vec c = G.coord(center);
  if (!clip_to_domain) {
    // support is the OPEN ball of radius s: every lattice position strictly
    // inside it must exist and be interior (eta vanishes at radius s itself)
    const double rr = s * (1.0 - 1e-12);
    std::array<Index, 3> lo = {0, 0, 0}, hi = {0, 0, 0};
    const Vec o0 = G.coord(0);  // grid origin (vertex 0 coordinate)
    for (int a = 0; a < G.dim(); ++a) {
      lo[a] = static_cast<Index>(std::ceil((c[a] - s - o0[a]) / h - 1e-9));
      hi[a] = static_cast<Index>(std::floor((c[a] + s - o0[a]) / h + 1e-9));
    }
    const Index klo = (G.dim() == 3) ? lo[2] : 0;
    const Index khi = (G.dim() == 3) ? hi[2] : 0;
    for (Index k = klo; k <= khi; ++k)
      for (Index j = lo[1]; j <= hi[1]; ++j)
        for (Index i = lo[0]; i <= hi[0]; ++i) {
          double d2 = 0.0;
          const Index m[3] = {i, j, k};
          for (int a = 0; a < G.dim(); ++a) {
            const double dx = o0[a] + h * m[a] - c[a];
            d2 += dx * dx;
          }
          if (d2 >= rr * rr) continue;
          if (!G.in_shape(i, j, k) ||
              !G.is_interior(G.lindex(i, j, k)))
            throw DomainError(
                "cutoff support ball is not inside the grid interior");
        }
  }

  const double delta = h / (4.0 * (s - t));
  auto eta_at = [&](const double* x) {
    double d2 = 0.0;
    for (int a = 0; a < G.dim(); ++a) {
      const double dx = x[a] - c[a];
      d2 += dx * dx;
    }
    double e = std::clamp((s - std::sqrt(d2)) / (s - t), 0.0, 1.0);
    if (std::abs(e - 0.5) < delta) e = (e >= 0.5) ? 0.5 + delta : 0.5 - delta;
    return e;
  };

  CutoffProfile P;
  P.grid = grid;
  P.center = center;
  P.t = t;
  P.s = s;
  P.clipped = clip_to_domain;
  P.values = Vec::Zero(G.vertex_count());

  for (Index v : G.non_exterior_vertices()) {
    const Vec xv = G.coord(v);
    double x[3] = {0, 0, 0};
    for (int a = 0; a < G.dim(); ++a) x[a] = xv[a];
    P.values[v] = eta_at(x);
  }

  // gradient against the ramp's own analytic extension: a missing or
  // exterior neighbor position contributes the formula value, so clipped
  // cutoffs keep the ambient slope rather than an artificial jump to zero
  P.grad = Mat::Zero(G.vertex_count(), G.dim());
  double worst = 0.0;
  for (Index v : G.non_exterior_vertices()) {
    const Vec xv = G.coord(v);
    for (int a = 0; a < G.dim(); ++a) {
      double side[2];
      for (int d = 0; d < 2; ++d) {
        const int dir = d ? +1 : -1;
        const Index nb = G.neighbor(v, a, dir);
        if (nb >= 0 && G.non_exterior(nb)) {
          side[d] = P.values[nb];
        } else {
          double xx[3] = {0, 0, 0};
          for (int b = 0; b < G.dim(); ++b) xx[b] = xv[b];
          xx[a] += dir * h;
          side[d] = eta_at(xx);
        }
      }
      P.grad(v, a) = (side[1] - side[0]) / (2.0 * h);
    }
    worst = std::max(worst, P.grad.row(v).norm());
  }
  P.grad_bound = worst;
  P.ramp_constant = worst * (s - t);

  double gap = 1.0;
  for (Index v : G.non_exterior_vertices()) {
    const double e = P.values[v];
    if (e > 0.0 && e < 1.0) gap = std::min(gap, std::abs(1.0 - 2.0 * e));
  }
  P.min_gap_half = gap;
  return P;
}

}  // namespace nharm
