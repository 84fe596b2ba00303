#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nharm/common.hpp"

namespace nharm {

enum class SpaceKind { Euclidean, Tree, Hyperbolic2, Product };

/// Undirected tree edge between vertex ids `a` and `b` with positive length.
struct TreeEdge {
  int a = 0;
  int b = 0;
  double length = 0.0;
};

class TargetSpace;
using SpacePtr = std::shared_ptr<const TargetSpace>;

/// A point of a target space. The payload layout depends on the kind:
///  - euclidean(m): the m coordinates;
///  - tree: (edge_index, offset), offset measured from the edge's `a`
///    endpoint, in [0, length];
///  - hyperbolic2: hyperboloid coordinates (x0, x1, x2) with
///    x0 = sqrt(1 + x1^2 + x2^2);
///  - product: factor payloads concatenated in factor order.
struct TargetPoint {
  std::uint64_t space_tag = 0;
  Vec payload;
};

/// A geodesic target space of non-positive curvature. Instances are
/// immutable after construction and shared by pointer; the canonical
/// descriptor string (and its hash tag) identifies the space across
/// processes and map containers.
class TargetSpace {
 public:
  static SpacePtr euclidean(int m);
  static SpacePtr tree(int vertex_count, std::vector<TreeEdge> edges);
  static SpacePtr hyperbolic2();
  static SpacePtr product(std::vector<SpacePtr> factors);

  SpaceKind kind() const { return kind_; }
  int payload_dim() const { return payload_dim_; }
  const std::string& descriptor() const { return descriptor_; }
  std::uint64_t tag() const { return tag_; }

  // --- tree structure accessors (throw DomainError on other kinds)
  int tree_vertex_count() const;
  const std::vector<TreeEdge>& tree_edges() const;
  double tree_edge_length(int e) const;
  /// Path-length distance between two tree vertices.
  double tree_vertex_distance(int u, int v) const;
  /// Distance from a tree payload to a tree vertex.
  double tree_point_vertex_distance(ConstVecRef payload, int v) const;

  // --- product structure accessors (throw DomainError on other kinds)
  const std::vector<SpacePtr>& factors() const;
  /// Payload start offset of factor `i` (factor count entries + end sentinel).
  const std::vector<int>& factor_offsets() const;

  /// Validate and canonicalize a payload into a point. Tree offsets are
  /// clamped within 1e-9*length slack; hyperboloid points are renormalized
  /// onto the sheet (rejecting inputs off by more than 1e-6).
  TargetPoint make_point(Vec payload) const;
  TargetPoint tree_point(int edge, double offset) const;
  /// Canonical base point: zeros / (edge 0, offset 0) / (1,0,0) / factor bases.
  TargetPoint origin() const;
  /// Throws DomainError (with diagnostics) unless the payload is admissible.
  void validate_payload(ConstVecRef payload) const;

  ~TargetSpace();
  TargetSpace(const TargetSpace&) = delete;
  TargetSpace& operator=(const TargetSpace&) = delete;

  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  TargetSpace();

  SpaceKind kind_ = SpaceKind::Euclidean;
  int payload_dim_ = 0;
  std::string descriptor_;
  std::uint64_t tag_ = 0;
  std::unique_ptr<Impl> impl_;
};

/// Geodesic distance between payloads (sizes checked, contents trusted).
double distance(const TargetSpace& S, ConstVecRef a, ConstVecRef b);
/// Geodesic distance between points (space tags checked).
double distance(const TargetSpace& S, const TargetPoint& P, const TargetPoint& Q);

/// Writes the constant-speed geodesic point gamma_{a->b}(t) into `out`.
/// t must lie in [0,1]; t == 0 and t == 1 reproduce the endpoint payloads
/// bitwise. Hyperboloid outputs are renormalized onto the sheet.
void geodesic_into(const TargetSpace& S, ConstVecRef a, ConstVecRef b, double t,
                   VecRef out);
TargetPoint geodesic_point(const TargetSpace& S, const TargetPoint& P,
                           const TargetPoint& Q, double t);

/// Non-positive-curvature comparison residual
///   (1-l)d^2(P,Q) + l d^2(P,R) - l(1-l)d^2(Q,R) - d^2(P, gamma_{Q->R}(l)),
/// nonnegative (up to roundoff) in every space this library constructs.
double comparison_gap(const TargetSpace& S, const TargetPoint& P,
                      const TargetPoint& Q, const TargetPoint& R, double lambda);

struct FrechetOptions {
  double power = 2.0;  ///< exponent p >= 1 of the weighted p-mean objective
  double tol = 1e-10;  ///< relative objective decrease stopping threshold
  int max_iter = 200;
};

struct FrechetResult {
  TargetPoint point;
  double objective = 0.0;  ///< sum_i w_i d^p(point, x_i) at the minimizer
  int iterations = 0;
};

/// Reusable buffers for the payload-level mean (solver hot loop).
struct MeanScratch {
  std::vector<double> da, db, brk, dist;
  std::vector<int> order;
  Vec tmp1, tmp2, tmp3, weights;
  Mat block;
};

/// Weighted Frechet p-mean: argmin_a sum_i w_i d^p(a, x_i).
/// Weights must be nonnegative with positive sum; all points must belong
/// to `S`. Deterministic for fixed inputs.
FrechetResult frechet_mean(const TargetSpace& S,
                           const std::vector<TargetPoint>& pts,
                           const std::vector<double>& weights,
                           const FrechetOptions& opts = {});

/// Payload-matrix variant (rows of `pts` are points); writes the mean
/// payload into `out` using `scratch` for all temporaries.
void frechet_mean_into(const TargetSpace& S, const Mat& pts, const double* w,
                       int count, double power, VecRef out,
                       MeanScratch& scratch);

/// Objective sum_i w_i d^p(a, row_i) for diagnostics and guards.
double frechet_objective(const TargetSpace& S, const Mat& pts, const double* w,
                         int count, double power, ConstVecRef a);

}  // namespace nharm
