#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nharm/common.hpp"

namespace nharm {

enum class VertexClass : std::uint8_t { Exterior = 0, Boundary = 1, Interior = 2 };

enum class DomainKind { Cube, Ball, HalfBall, Graph };

/// Bi-Lipschitz flattening chart for graph domains: the physical domain lies
/// below/above the graph x_n = phi(x_1..x_{n-1}); forward(y) = (y', y_n -
/// phi(y')) maps it onto a flat half-ball, inverse is the exact reverse.
struct ChartSpec {
  std::string phi_text;  ///< canonical text of the graph function
  std::function<double(ConstVecRef)> phi;
  double lip = 0.0;  ///< Lipschitz constant L of phi
};

/// Geometric description of a grid domain prior to discretization:
///  - Cube: [0, size]^n
///  - Ball: { |x| <= size }
///  - HalfBall: { |x| <= size, x_n >= 0 }, flat face on x_n = 0
///  - Graph: a HalfBall in flattened chart coordinates, chart recorded
struct DomainDescriptor {
  DomainKind kind = DomainKind::Cube;
  int dim = 2;        ///< n, 2 or 3
  double size = 1.0;  ///< side (cube) or radius (others)
  std::optional<ChartSpec> chart;

  /// Stable text form for report headers and container files.
  std::string canonical() const;
};

class GridDomain;
using GridPtr = std::shared_ptr<const GridDomain>;

/// A uniform lattice over the descriptor's bounding box with a per-vertex
/// classification. Interior vertices have all 2n axis neighbors non-exterior;
/// boundary vertices form the discrete trace set; exterior vertices carry no
/// data. Immutable after construction.
class GridDomain {
 public:
  /// Discretizes `desc` with `resolution` vertices across the full extent of
  /// each axis and spacing `h` (which must match the extent). Half-ball and
  /// graph domains require odd resolution so a vertex row lands on the flat
  /// face; their last axis carries (resolution+1)/2 vertices over [0, size].
  /// Throws ResolutionError when no interior vertex results.
  static GridPtr build(const DomainDescriptor& desc, int resolution,
                       double spacing);

  int dim() const { return dim_; }
  const std::array<Index, 3>& shape() const { return shape_; }
  double spacing() const { return h_; }
  int resolution() const { return resolution_; }
  const DomainDescriptor& descriptor() const { return desc_; }

  Index vertex_count() const { return total_; }
  VertexClass vclass(Index v) const { return mask_[static_cast<size_t>(v)]; }
  bool is_interior(Index v) const { return vclass(v) == VertexClass::Interior; }
  bool is_boundary(Index v) const { return vclass(v) == VertexClass::Boundary; }
  bool is_exterior(Index v) const { return vclass(v) == VertexClass::Exterior; }
  bool non_exterior(Index v) const { return vclass(v) != VertexClass::Exterior; }

  const std::vector<Index>& interior_vertices() const { return interior_; }
  const std::vector<Index>& boundary_vertices() const { return boundary_; }
  const std::vector<Index>& non_exterior_vertices() const { return nonext_; }

  Index lindex(Index i, Index j, Index k = 0) const {
    return i + shape_[0] * (j + shape_[1] * k);
  }
  std::array<Index, 3> multi(Index v) const {
    const Index i = v % shape_[0];
    const Index rest = v / shape_[0];
    return {i, rest % shape_[1], rest / shape_[1]};
  }
  bool in_shape(Index i, Index j, Index k = 0) const {
    return i >= 0 && i < shape_[0] && j >= 0 && j < shape_[1] && k >= 0 &&
           k < shape_[2];
  }
  /// Axis neighbor (dir = -1 or +1); -1 when it falls off the lattice.
  Index neighbor(Index v, int axis, int dir) const {
    auto m = multi(v);
    m[axis] += dir;
    return in_shape(m[0], m[1], m[2]) ? lindex(m[0], m[1], m[2]) : -1;
  }

  /// Geometric coordinates of a vertex (chart coordinates for graph domains).
  Vec coord(Index v) const {
    auto m = multi(v);
    Vec x(dim_);
    for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + h_ * m[a];
    return x;
  }
  /// Physical (un-flattened) coordinates; identical to coord() without chart.
  Vec physical_coord(Index v) const;

  Vec chart_forward(ConstVecRef y) const;
  Vec chart_inverse(ConstVecRef x) const;
  bool has_chart() const { return desc_.chart.has_value(); }

  /// Boundary vertex on the flat face x_n = 0 (half-ball/graph domains).
  bool on_flat_face(Index v) const;

  /// All non-exterior vertices within the closed ball |x - center| <= r,
  /// ascending by linear index. `interior_only` restricts to interior ones.
  std::vector<Index> ball_vertices(ConstVecRef center, double r,
                                   bool interior_only = false) const;
  /// True when every lattice position of the closed ball exists on the grid
  /// and is non-exterior (interior when `interior_only`).
  bool ball_inside(ConstVecRef center, double r,
                   bool interior_only = false) const;

  /// All lattice vertices of the closed axis cube of half-side
  /// `half_side_cells` around the vertex `center`; throws DomainError when
  /// the cube leaves the lattice.
  std::vector<Index> cube_vertices(Index center, int half_side_cells) const;

 private:
  GridDomain() = default;

  DomainDescriptor desc_;
  int dim_ = 2;
  int resolution_ = 0;
  std::array<Index, 3> shape_ = {1, 1, 1};
  std::array<double, 3> origin_ = {0.0, 0.0, 0.0};
  double h_ = 0.0;
  Index total_ = 0;
  std::vector<VertexClass> mask_;
  std::vector<Index> interior_, boundary_, nonext_;
};

/// Concentric dyadic cube pair: inner cube of half-side `radius_cells` around
/// `center`, outer cube of doubled half-side.
struct CubePair {
  Index center = 0;
  int radius_cells = 0;
};

/// Enumerates, for each entry R of `levels` (half-side in cells, >= 1), every
/// lattice-centered pair (Q_R, Q_2R) whose outer cube lies fully inside the
/// domain. Deterministic ascending order per level; empty result allowed.
std::vector<CubePair> dyadic_cubes(const GridDomain& grid,
                                   const std::vector<int>& levels);

enum class GradientMode {
  ZeroExtension,  ///< off-grid/exterior neighbor values read as 0 (cutoffs)
  OneSided        ///< fall back to a one-sided difference at the rim
};

/// Per-vertex discrete gradient (rows = vertices, cols = axes) of a scalar
/// field defined on non-exterior vertices; central differences inside,
/// behavior at the rim chosen by `mode`. Exterior rows are zero. When
/// `defined` is given it is filled with 1 where a gradient was computable.
Mat discrete_gradient(const GridDomain& grid, ConstVecRef values,
                      GradientMode mode,
                      std::vector<std::uint8_t>* defined = nullptr);

/// Discrete radial cutoff: the clamped ramp (s - |x - center|)/(s - t) with
/// every value nearer to 1/2 than h/(4(s-t)) pushed away from 1/2 by exactly
/// that offset, so min |1 - 2 eta| >= h/(2(s-t)) on the annulus.
struct CutoffProfile {
  GridPtr grid;
  Index center = 0;
  double t = 0.0, s = 0.0;
  Vec values;  ///< eta per vertex, in [0,1], 0 on exterior vertices
  /// Central-difference gradient against the ramp's analytic extension, so
  /// clipped supports keep the ambient slope instead of a jump to zero.
  Mat grad;
  double grad_bound = 0.0;    ///< measured max |grad eta| over the grid
  double ramp_constant = 0.0; ///< grad_bound * (s - t)
  double min_gap_half = 0.0;  ///< measured min |1 - 2 eta| over the annulus
  bool clipped = false;       ///< boundary case: support clipped to domain
};

/// Builds the cutoff centered at the vertex `center` with plateau radius t
/// and support radius s (s - t >= 2h). By default the support ball must lie
/// inside the interior; `clip_to_domain` permits clipping by the domain
/// (boundary case).
CutoffProfile cutoff(const GridPtr& grid, Index center, double t, double s,
                     bool clip_to_domain = false);

}  // namespace nharm
