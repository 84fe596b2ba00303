#include "nharm/target_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

namespace nharm {

// ===========================================================================
// structure
// ===========================================================================

struct TargetSpace::Impl {
  // tree tables
  int V = 0;
  std::vector<TreeEdge> edges;
  Mat vdist;                  // V x V path-length distances
  Eigen::MatrixXi next_edge;  // first edge index on the path u -> v (-1 diag)
  // product tables
  std::vector<SpacePtr> factors;
  std::vector<int> offsets;  // factor payload offsets, plus end sentinel
};

TargetSpace::TargetSpace() : impl_(new Impl) {}
TargetSpace::~TargetSpace() = default;

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

[[noreturn]] void fail(const std::string& msg) { throw DomainError(msg); }

}  // namespace

SpacePtr TargetSpace::euclidean(int m) {
  if (m < 1) fail("euclidean target needs dimension >= 1");
  auto s = std::shared_ptr<TargetSpace>(new TargetSpace);
  s->kind_ = SpaceKind::Euclidean;
  s->payload_dim_ = m;
  s->descriptor_ = "euclidean(" + std::to_string(m) + ")";
  s->tag_ = fnv1a(s->descriptor_);
  return s;
}

SpacePtr TargetSpace::hyperbolic2() {
  auto s = std::shared_ptr<TargetSpace>(new TargetSpace);
  s->kind_ = SpaceKind::Hyperbolic2;
  s->payload_dim_ = 3;
  s->descriptor_ = "hyperbolic2";
  s->tag_ = fnv1a(s->descriptor_);
  return s;
}

SpacePtr TargetSpace::tree(int vertex_count, std::vector<TreeEdge> edges) {
  if (vertex_count < 2)
    fail("tree target needs at least two vertices and one edge");
  if (static_cast<int>(edges.size()) != vertex_count - 1)
    fail("tree target needs exactly vertex_count-1 edges, got " +
         std::to_string(edges.size()));
  for (const auto& e : edges) {
    if (e.a < 0 || e.a >= vertex_count || e.b < 0 || e.b >= vertex_count)
      fail("tree edge endpoint out of range");
    if (e.a == e.b) fail("tree edge may not be a loop");
    if (!(e.length > 0.0) || !std::isfinite(e.length))
      fail("tree edge length must be positive and finite");
  }
  // adjacency + connectivity
  const int V = vertex_count;
  std::vector<std::vector<std::pair<int, int>>> adj(V);  // (neighbor, edge)
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    adj[edges[i].a].push_back({edges[i].b, i});
    adj[edges[i].b].push_back({edges[i].a, i});
  }

  auto s = std::shared_ptr<TargetSpace>(new TargetSpace);
  auto& im = *s->impl_;
  im.V = V;
  im.edges = std::move(edges);
  im.vdist = Mat::Zero(V, V);
  im.next_edge = Eigen::MatrixXi::Constant(V, V, -1);

  std::vector<int> parent(V), parent_edge(V), order;
  std::vector<char> seen(V, 0);
  for (int root = 0; root < V; ++root) {
    std::fill(seen.begin(), seen.end(), 0);
    order.clear();
    std::queue<int> q;
    q.push(root);
    seen[root] = 1;
    parent[root] = -1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      order.push_back(u);
      for (auto [v, e] : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          parent[v] = u;
          parent_edge[v] = e;
          im.vdist(root, v) = im.vdist(root, u) + im.edges[e].length;
          q.push(v);
        }
    }
    if (static_cast<int>(order.size()) != V)
      fail("tree target must be connected");
    // first hop from root toward v, filled in BFS order
    for (int v : order) {
      if (v == root) continue;
      if (parent[v] == root)
        im.next_edge(root, v) = parent_edge[v];
      else
        im.next_edge(root, v) = im.next_edge(root, parent[v]);
    }
  }

  s->kind_ = SpaceKind::Tree;
  s->payload_dim_ = 2;
  std::ostringstream os;
  os << "tree(v=" << V << ";e=";
  for (std::size_t i = 0; i < im.edges.size(); ++i) {
    if (i) os << ",";
    os << im.edges[i].a << "-" << im.edges[i].b << ":"
       << fmt_double(im.edges[i].length);
  }
  os << ")";
  s->descriptor_ = os.str();
  s->tag_ = fnv1a(s->descriptor_);
  return s;
}

SpacePtr TargetSpace::product(std::vector<SpacePtr> factors) {
  if (factors.empty()) fail("product target needs at least one factor");
  for (const auto& f : factors)
    if (!f) fail("product target received a null factor");
  auto s = std::shared_ptr<TargetSpace>(new TargetSpace);
  auto& im = *s->impl_;
  im.factors = std::move(factors);
  im.offsets.resize(im.factors.size() + 1);
  im.offsets[0] = 0;
  std::string d = "product(";
  for (std::size_t i = 0; i < im.factors.size(); ++i) {
    im.offsets[i + 1] = im.offsets[i] + im.factors[i]->payload_dim();
    if (i) d += ",";
    d += im.factors[i]->descriptor();
  }
  d += ")";
  s->kind_ = SpaceKind::Product;
  s->payload_dim_ = im.offsets.back();
  s->descriptor_ = std::move(d);
  s->tag_ = fnv1a(s->descriptor_);
  return s;
}

int TargetSpace::tree_vertex_count() const {
  if (kind_ != SpaceKind::Tree) fail("not a tree target");
  return impl_->V;
}

const std::vector<TreeEdge>& TargetSpace::tree_edges() const {
  if (kind_ != SpaceKind::Tree) fail("not a tree target");
  return impl_->edges;
}

double TargetSpace::tree_edge_length(int e) const {
  const auto& es = tree_edges();
  if (e < 0 || e >= static_cast<int>(es.size())) fail("tree edge out of range");
  return es[e].length;
}

double TargetSpace::tree_vertex_distance(int u, int v) const {
  if (kind_ != SpaceKind::Tree) fail("not a tree target");
  if (u < 0 || u >= impl_->V || v < 0 || v >= impl_->V)
    fail("tree vertex out of range");
  return impl_->vdist(u, v);
}

double TargetSpace::tree_point_vertex_distance(ConstVecRef payload,
                                               int v) const {
  if (kind_ != SpaceKind::Tree) fail("not a tree target");
  const int e = static_cast<int>(std::lround(payload[0]));
  const auto& E = impl_->edges[e];
  const double t = payload[1];
  return std::min(t + impl_->vdist(E.a, v),
                  (E.length - t) + impl_->vdist(E.b, v));
}

const std::vector<SpacePtr>& TargetSpace::factors() const {
  if (kind_ != SpaceKind::Product) fail("not a product target");
  return impl_->factors;
}

const std::vector<int>& TargetSpace::factor_offsets() const {
  if (kind_ != SpaceKind::Product) fail("not a product target");
  return impl_->offsets;
}

// ===========================================================================
// points
// ===========================================================================

void TargetSpace::validate_payload(ConstVecRef p) const {
  if (p.size() != payload_dim_)
    throw SpaceMismatchError("payload has size " + std::to_string(p.size()) +
                             ", expected " + std::to_string(payload_dim_) +
                             " for " + descriptor_);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (!std::isfinite(p[i])) fail("payload has a non-finite entry");
  switch (kind_) {
    case SpaceKind::Euclidean:
      break;
    case SpaceKind::Tree: {
      const double eraw = p[0];
      if (std::abs(eraw - std::round(eraw)) > 1e-9)
        fail("tree payload edge index is not an integer");
      const int e = static_cast<int>(std::lround(eraw));
      if (e < 0 || e >= static_cast<int>(impl_->edges.size()))
        fail("tree payload edge index out of range");
      const double L = impl_->edges[e].length;
      if (p[1] < -1e-9 * L || p[1] > L * (1.0 + 1e-9))
        fail("tree payload offset outside the edge");
      break;
    }
    case SpaceKind::Hyperbolic2: {
      if (p[0] <= 0.0) fail("hyperboloid payload must be on the upper sheet");
      const double x0 = std::sqrt(1.0 + p[1] * p[1] + p[2] * p[2]);
      if (std::abs(p[0] - x0) > 1e-6 * std::max(1.0, x0))
        fail("payload is too far off the hyperboloid sheet");
      break;
    }
    case SpaceKind::Product: {
      for (std::size_t f = 0; f < impl_->factors.size(); ++f)
        impl_->factors[f]->validate_payload(
            p.segment(impl_->offsets[f], impl_->factors[f]->payload_dim()));
      break;
    }
  }
}

TargetPoint TargetSpace::make_point(Vec payload) const {
  validate_payload(payload);
  switch (kind_) {
    case SpaceKind::Euclidean:
      break;
    case SpaceKind::Tree: {
      payload[0] = std::round(payload[0]);
      const double L = impl_->edges[static_cast<int>(payload[0])].length;
      payload[1] = std::clamp(payload[1], 0.0, L);
      break;
    }
    case SpaceKind::Hyperbolic2:
      payload[0] = std::sqrt(1.0 + payload[1] * payload[1] +
                             payload[2] * payload[2]);
      break;
    case SpaceKind::Product: {
      for (std::size_t f = 0; f < impl_->factors.size(); ++f) {
        TargetPoint q = impl_->factors[f]->make_point(
            payload.segment(impl_->offsets[f],
                            impl_->factors[f]->payload_dim()));
        payload.segment(impl_->offsets[f], q.payload.size()) = q.payload;
      }
      break;
    }
  }
  return TargetPoint{tag_, std::move(payload)};
}

TargetPoint TargetSpace::tree_point(int edge, double offset) const {
  if (kind_ != SpaceKind::Tree) fail("not a tree target");
  Vec p(2);
  p[0] = edge;
  p[1] = offset;
  return make_point(std::move(p));
}

TargetPoint TargetSpace::origin() const {
  Vec p = Vec::Zero(payload_dim_);
  switch (kind_) {
    case SpaceKind::Euclidean:
      break;
    case SpaceKind::Tree:
      break;  // edge 0, offset 0
    case SpaceKind::Hyperbolic2:
      p[0] = 1.0;
      break;
    case SpaceKind::Product:
      for (std::size_t f = 0; f < impl_->factors.size(); ++f)
        p.segment(impl_->offsets[f], impl_->factors[f]->payload_dim()) =
            impl_->factors[f]->origin().payload;
      break;
  }
  return TargetPoint{tag_, std::move(p)};
}

// ===========================================================================
// metric
// ===========================================================================

namespace {

void check_sizes(const TargetSpace& S, ConstVecRef a, ConstVecRef b) {
  if (a.size() != S.payload_dim() || b.size() != S.payload_dim())
    throw SpaceMismatchError("payload size does not match " + S.descriptor());
}

void check_tags(const TargetSpace& S, const TargetPoint& P) {
  if (P.space_tag != S.tag())
    throw SpaceMismatchError("point does not belong to " + S.descriptor());
}

// Minkowski quadratic form of the difference; equals 2(cosh d - 1) >= 0.
double hyp_q(ConstVecRef a, ConstVecRef b) {
  const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
  return std::max(0.0, d1 * d1 + d2 * d2 - d0 * d0);
}

double hyp_distance(ConstVecRef a, ConstVecRef b) {
  // 2*asinh(sqrt(q)/2) keeps full relative accuracy for nearby points,
  // where acosh(1 + q/2) loses half the digits.
  return 2.0 * std::asinh(0.5 * std::sqrt(hyp_q(a, b)));
}

void hyp_renormalize(VecRef x) {
  x[0] = std::sqrt(1.0 + x[1] * x[1] + x[2] * x[2]);
}

double tree_distance(const TargetSpace::Impl& im, ConstVecRef a,
                     ConstVecRef b) {
  const int e1 = static_cast<int>(std::lround(a[0]));
  const int e2 = static_cast<int>(std::lround(b[0]));
  if (e1 == e2) return std::abs(a[1] - b[1]);
  const auto& E1 = im.edges[e1];
  const auto& E2 = im.edges[e2];
  const double toA1 = a[1], toB1 = E1.length - a[1];
  const double toA2 = b[1], toB2 = E2.length - b[1];
  double best = toA1 + im.vdist(E1.a, E2.a) + toA2;
  best = std::min(best, toA1 + im.vdist(E1.a, E2.b) + toB2);
  best = std::min(best, toB1 + im.vdist(E1.b, E2.a) + toA2);
  best = std::min(best, toB1 + im.vdist(E1.b, E2.b) + toB2);
  return best;
}

double product_distance(const TargetSpace::Impl& im, ConstVecRef a,
                        ConstVecRef b) {
  double s = 0.0;
  for (std::size_t f = 0; f < im.factors.size(); ++f) {
    const int off = im.offsets[f], dim = im.factors[f]->payload_dim();
    const double d =
        distance(*im.factors[f], a.segment(off, dim), b.segment(off, dim));
    s += d * d;
  }
  return std::sqrt(s);
}

void tree_geodesic(const TargetSpace::Impl& im,
                   ConstVecRef a, ConstVecRef b, double t, VecRef out) {
  const int e1 = static_cast<int>(std::lround(a[0]));
  const int e2 = static_cast<int>(std::lround(b[0]));
  if (e1 == e2) {
    out[0] = a[0];
    out[1] = a[1] + t * (b[1] - a[1]);
    return;
  }
  const auto& E1 = im.edges[e1];
  const auto& E2 = im.edges[e2];
  const double legA[2] = {a[1], E1.length - a[1]};
  const double legB[2] = {b[1], E2.length - b[1]};
  const int vA[2] = {E1.a, E1.b}, vB[2] = {E2.a, E2.b};
  double best = std::numeric_limits<double>::infinity();
  int ui = 0, vi = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double len = legA[i] + im.vdist(vA[i], vB[j]) + legB[j];
      if (len < best) {
        best = len;
        ui = i;
        vi = j;
      }
    }
  double s = t * best;
  // leg along the source edge
  if (s <= legA[ui]) {
    out[0] = a[0];
    out[1] = (vA[ui] == E1.a) ? a[1] - s : a[1] + s;
    out[1] = std::clamp(out[1], 0.0, E1.length);
    return;
  }
  s -= legA[ui];
  // walk the vertex path
  int cur = vA[ui];
  const int goal = vB[vi];
  while (cur != goal) {
    const int e = im.next_edge(cur, goal);
    const auto& E = im.edges[e];
    const int nxt = (E.a == cur) ? E.b : E.a;
    if (s <= E.length) {
      out[0] = e;
      out[1] = (E.a == cur) ? s : E.length - s;
      out[1] = std::clamp(out[1], 0.0, E.length);
      return;
    }
    s -= E.length;
    cur = nxt;
  }
  // leg along the destination edge
  out[0] = b[0];
  out[1] = (goal == E2.a) ? s : E2.length - s;
  out[1] = std::clamp(out[1], 0.0, E2.length);
}

void hyp_geodesic(ConstVecRef a, ConstVecRef b, double t, VecRef out) {
  const double q = hyp_q(a, b);
  const double d = 2.0 * std::asinh(0.5 * std::sqrt(q));
  if (d < 1e-9) {
    // chordal blend; the renormalized error is O(d^2) below roundoff here
    out = (1.0 - t) * a + t * b;
    hyp_renormalize(out);
    return;
  }
  const double coshd = 1.0 + 0.5 * q;              // exact in q
  const double sinhd = std::sqrt(q * (1.0 + 0.25 * q));
  const double td = t * d;
  // unit tangent at a toward b: (b - cosh(d) a) / sinh(d)
  out = std::cosh(td) * a + (std::sinh(td) / sinhd) * (b - coshd * a);
  hyp_renormalize(out);
}

}  // namespace

double distance(const TargetSpace& S, ConstVecRef a, ConstVecRef b) {
  check_sizes(S, a, b);
  switch (S.kind()) {
    case SpaceKind::Euclidean:
      return (a - b).norm();
    case SpaceKind::Tree:
      return tree_distance(S.impl(), a, b);
    case SpaceKind::Hyperbolic2:
      return hyp_distance(a, b);
    case SpaceKind::Product:
      return product_distance(S.impl(), a, b);
  }
  return 0.0;
}

double distance(const TargetSpace& S, const TargetPoint& P,
                const TargetPoint& Q) {
  check_tags(S, P);
  check_tags(S, Q);
  return distance(S, P.payload, Q.payload);
}

void geodesic_into(const TargetSpace& S, ConstVecRef a, ConstVecRef b,
                   double t, VecRef out) {
  check_sizes(S, a, b);
  if (out.size() != S.payload_dim())
    throw SpaceMismatchError("geodesic output has the wrong size");
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("geodesic parameter must lie in [0,1], got " +
                      fmt_double(t));
  if (t == 0.0) {
    out = a;
    return;
  }
  if (t == 1.0) {
    out = b;
    return;
  }
  switch (S.kind()) {
    case SpaceKind::Euclidean:
      out = (1.0 - t) * a + t * b;
      return;
    case SpaceKind::Tree:
      tree_geodesic(S.impl(), a, b, t, out);
      return;
    case SpaceKind::Hyperbolic2:
      hyp_geodesic(a, b, t, out);
      return;
    case SpaceKind::Product: {
      const auto& im = S.impl();
      for (std::size_t f = 0; f < im.factors.size(); ++f) {
        const int off = im.offsets[f], dim = im.factors[f]->payload_dim();
        geodesic_into(*im.factors[f], a.segment(off, dim),
                      b.segment(off, dim), t, out.segment(off, dim));
      }
      return;
    }
  }
}

TargetPoint geodesic_point(const TargetSpace& S, const TargetPoint& P,
                           const TargetPoint& Q, double t) {
  check_tags(S, P);
  check_tags(S, Q);
  TargetPoint g{S.tag(), Vec(S.payload_dim())};
  geodesic_into(S, P.payload, Q.payload, t, g.payload);
  return g;
}

double comparison_gap(const TargetSpace& S, const TargetPoint& P,
                      const TargetPoint& Q, const TargetPoint& R,
                      double lambda) {
  check_tags(S, P);
  check_tags(S, Q);
  check_tags(S, R);
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw DomainError("comparison parameter must lie in [0,1]");
  const double dpq = distance(S, P.payload, Q.payload);
  const double dpr = distance(S, P.payload, R.payload);
  const double dqr = distance(S, Q.payload, R.payload);
  Vec g(S.payload_dim());
  geodesic_into(S, Q.payload, R.payload, lambda, g);
  const double dpg = distance(S, P.payload, g);
  return (1.0 - lambda) * dpq * dpq + lambda * dpr * dpr -
         lambda * (1.0 - lambda) * dqr * dqr - dpg * dpg;
}

// ===========================================================================
// Frechet means
// ===========================================================================

namespace {

double objective_rows(const TargetSpace& S, const Mat& pts, const double* w,
                      int count, double p, ConstVecRef a) {
  double s = 0.0;
  for (int i = 0; i < count; ++i) {
    if (w[i] == 0.0) continue;
    const double d = distance(S, a, pts.row(i).transpose());
    s += w[i] * ((p == 2.0) ? d * d : std::pow(d, p));
  }
  return s;
}

// --- exact weighted p=2 mean on a metric tree: per-edge quadratic sweep.
// On each edge the objective is piecewise quadratic in the offset t, with a
// route-switch breakpoint per off-edge point; the sweep walks the sorted
// breakpoints, maintaining the quadratic's coefficients, and evaluates the
// clamped vertex of every piece.
void tree_mean_p2(const TargetSpace::Impl& im, const Mat& pts, const double* w,
                  int count, VecRef out, MeanScratch& sc) {
  double best = std::numeric_limits<double>::infinity();
  int best_edge = 0;
  double best_t = 0.0;

  sc.da.resize(count);    // a-route offsets A_i
  sc.db.resize(count);    // b-route offsets C_i = L + B_i
  sc.brk.resize(count);   // switch points
  sc.dist.resize(count);  // weights of switching contributions
  sc.order.resize(count);

  const int E = static_cast<int>(im.edges.size());
  for (int e = 0; e < E; ++e) {
    const auto& Ed = im.edges[e];
    const double L = Ed.length;
    double A2 = 0.0, A1 = 0.0, A0 = 0.0;  // A2 t^2 + A1 t + A0 on the piece
    int n_events = 0;
    for (int i = 0; i < count; ++i) {
      if (w[i] == 0.0) continue;
      const int ei = static_cast<int>(std::lround(pts(i, 0)));
      const double ti = pts(i, 1);
      if (ei == e) {
        // |t - ti|^2 is smooth across the whole edge
        A2 += w[i];
        A1 -= 2.0 * w[i] * ti;
        A0 += w[i] * ti * ti;
        continue;
      }
      const auto& Ei = im.edges[ei];
      const double Ai = std::min(ti + im.vdist(Ei.a, Ed.a),
                                 (Ei.length - ti) + im.vdist(Ei.b, Ed.a));
      const double Bi = std::min(ti + im.vdist(Ei.a, Ed.b),
                                 (Ei.length - ti) + im.vdist(Ei.b, Ed.b));
      const double tstar = 0.5 * (L + Bi - Ai);  // route switch point
      if (tstar <= 0.0) {
        const double C = L + Bi;  // d = C - t throughout
        A2 += w[i];
        A1 -= 2.0 * w[i] * C;
        A0 += w[i] * C * C;
      } else if (tstar >= L) {
        A2 += w[i];  // d = t + Ai throughout
        A1 += 2.0 * w[i] * Ai;
        A0 += w[i] * Ai * Ai;
      } else {
        // starts on the a-route, switches to the b-route at tstar
        A2 += w[i];
        A1 += 2.0 * w[i] * Ai;
        A0 += w[i] * Ai * Ai;
        sc.da[n_events] = Ai;
        sc.db[n_events] = L + Bi;
        sc.brk[n_events] = tstar;
        sc.dist[n_events] = w[i];
        sc.order[n_events] = n_events;
        ++n_events;
      }
    }
    std::sort(sc.order.begin(), sc.order.begin() + n_events,
              [&](int x, int y) {
                return sc.brk[x] < sc.brk[y] ||
                       (sc.brk[x] == sc.brk[y] && x < y);
              });

    auto consider = [&](double lo, double hi) {
      if (A2 <= 0.0) return;  // no positive mass sees this edge
      const double tv = std::clamp(-A1 / (2.0 * A2), lo, hi);
      const double val = (A2 * tv + A1) * tv + A0;
      if (val < best) {
        best = val;
        best_edge = e;
        best_t = tv;
      }
    };

    double lo = 0.0;
    for (int k = 0; k < n_events; ++k) {
      const int i = sc.order[k];
      consider(lo, sc.brk[i]);
      lo = sc.brk[i];
      const double wi = sc.dist[i], Ai = sc.da[i], C = sc.db[i];
      A1 -= 2.0 * wi * (C + Ai);
      A0 += wi * (C * C - Ai * Ai);
    }
    consider(lo, L);
  }

  out[0] = best_edge;
  out[1] = best_t;
}

// --- general p on a metric tree: the per-edge objective is convex in the
// offset, so golden-section search per edge is exact up to bracketing width.
void tree_mean_general(const TargetSpace::Impl& im, const Mat& pts,
                       const double* w, int count, double p, VecRef out) {
  auto obj = [&](int e, double t) {
    Vec cand(2);
    cand[0] = e;
    cand[1] = t;
    double s = 0.0;
    for (int i = 0; i < count; ++i) {
      if (w[i] == 0.0) continue;
      s += w[i] * std::pow(tree_distance(im, cand, pts.row(i).transpose()), p);
    }
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  int best_edge = 0;
  double best_t = 0.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int e = 0; e < static_cast<int>(im.edges.size()); ++e) {
    const double L = im.edges[e].length;
    double lo = 0.0, hi = L;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = obj(e, x1), f2 = obj(e, x2);
    for (int it = 0; it < 120; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = obj(e, x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = obj(e, x2);
      }
    }
    const double tm = 0.5 * (lo + hi);
    double fm = obj(e, tm);
    double te = tm;
    // edge endpoints can carry the minimum when it sits at a vertex
    const double f0 = obj(e, 0.0), fL = obj(e, L);
    if (f0 < fm) {
      fm = f0;
      te = 0.0;
    }
    if (fL < fm) {
      fm = fL;
      te = L;
    }
    if (fm < best) {
      best = fm;
      best_edge = e;
      best_t = te;
    }
  }
  out[0] = best_edge;
  out[1] = best_t;
}

// --- weighted Karcher flow for the p=2 mean on the hyperboloid sheet.
void hyp_mean_p2(const Mat& pts, const double* w, int count, VecRef out,
                 double tol, int max_iter, int* iters) {
  using V3 = Eigen::Vector3d;
  double tw = 0.0;
  V3 x = V3::Zero();
  for (int i = 0; i < count; ++i) {
    x += w[i] * V3(pts.row(i));
    tw += w[i];
  }
  x /= tw;
  x[0] = std::sqrt(1.0 + x[1] * x[1] + x[2] * x[2]);  // chordal init

  auto obj_at = [&](const V3& a) {
    double s = 0.0;
    for (int i = 0; i < count; ++i) {
      if (w[i] == 0.0) continue;
      const double d = hyp_distance(a, pts.row(i).transpose());
      s += w[i] * d * d;
    }
    return s;
  };

  double obj = obj_at(x);
  int it = 0;
  for (; it < max_iter; ++it) {
    // Riemannian gradient step: m = sum w log_x(p_i) / sum w
    V3 m = V3::Zero();
    double scale = 0.0;
    for (int i = 0; i < count; ++i) {
      if (w[i] == 0.0) continue;
      const V3 pi = pts.row(i);
      const double q = hyp_q(x, pi);
      const double d = 2.0 * std::asinh(0.5 * std::sqrt(q));
      scale = std::max(scale, d);
      const double coshd = 1.0 + 0.5 * q;
      // d / sinh(d), series below the cancellation threshold
      const double r =
          (d < 1e-6) ? 1.0 - d * d / 6.0
                     : d / std::sqrt(q * (1.0 + 0.25 * q));
      m += w[i] * r * (pi - coshd * x);
    }
    m /= tw;
    const double mn2 =
        std::max(0.0, m[1] * m[1] + m[2] * m[2] - m[0] * m[0]);
    const double mn = std::sqrt(mn2);
    if (mn <= 1e-15 * (1.0 + scale)) break;

    bool accepted = false;
    double alpha = 1.0;
    for (int h = 0; h < 40; ++h) {
      const double a = alpha * mn;
      V3 cand = std::cosh(a) * x + (std::sinh(a) / mn) * m;
      cand[0] = std::sqrt(1.0 + cand[1] * cand[1] + cand[2] * cand[2]);
      const double cobj = obj_at(cand);
      if (cobj <= obj * (1.0 + 1e-15) + 1e-300) {
        const double rel = (obj - cobj) / std::max(obj, 1e-300);
        x = cand;
        obj = cobj;
        accepted = true;
        if (rel <= tol) it = max_iter - 1;  // converged; exit after increment
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (iters) *iters += it;
  out[0] = x[0];
  out[1] = x[1];
  out[2] = x[2];
}

// forward declaration: product recursion
void mean_p2(const TargetSpace& S, const Mat& pts, const double* w, int count,
             VecRef out, MeanScratch& sc, double tol, int max_iter,
             int* iters);

void product_mean_p2(const TargetSpace::Impl& im, const Mat& pts,
                     const double* w, int count, VecRef out, double tol,
                     int max_iter, int* iters) {
  // the squared product objective separates over factors
  for (std::size_t f = 0; f < im.factors.size(); ++f) {
    const int off = im.offsets[f], dim = im.factors[f]->payload_dim();
    Mat blk = pts.middleCols(off, dim);
    MeanScratch sc;
    mean_p2(*im.factors[f], blk, w, count, out.segment(off, dim), sc, tol,
            max_iter, iters);
  }
}

void mean_p2(const TargetSpace& S, const Mat& pts, const double* w, int count,
             VecRef out, MeanScratch& sc, double tol, int max_iter,
             int* iters) {
  switch (S.kind()) {
    case SpaceKind::Euclidean: {
      double tw = 0.0;
      out.setZero();
      for (int i = 0; i < count; ++i) {
        out += w[i] * pts.row(i).transpose();
        tw += w[i];
      }
      out /= tw;
      return;
    }
    case SpaceKind::Tree:
      tree_mean_p2(S.impl(), pts, w, count, out, sc);
      return;
    case SpaceKind::Hyperbolic2:
      hyp_mean_p2(pts, w, count, out, tol, max_iter, iters);
      return;
    case SpaceKind::Product:
      product_mean_p2(S.impl(), pts, w, count, out, tol, max_iter, iters);
      return;
  }
}

// --- iteratively reweighted p-mean for p != 2 (euclidean, hyperboloid,
// product): each pass solves the p=2 problem with weights w_i d_i^{p-2} and
// damps the move along the geodesic until the true objective decreases.
void mean_irls(const TargetSpace& S, const Mat& pts, const double* w,
               int count, double p, VecRef out, MeanScratch& sc, double tol,
               int max_iter, int* iters) {
  const int dim = S.payload_dim();
  sc.tmp1.resize(dim);
  sc.tmp2.resize(dim);
  sc.tmp3.resize(dim);
  sc.weights.resize(count);
  sc.dist.resize(count);

  mean_p2(S, pts, w, count, sc.tmp1, sc, tol, max_iter, nullptr);
  double obj = objective_rows(S, pts, w, count, p, sc.tmp1);

  int it = 0;
  for (; it < max_iter; ++it) {
    double scale = 0.0;
    for (int i = 0; i < count; ++i) {
      sc.dist[i] = distance(S, sc.tmp1, pts.row(i).transpose());
      scale = std::max(scale, sc.dist[i]);
    }
    const double floor = 1e-14 * scale + 1e-300;
    for (int i = 0; i < count; ++i)
      sc.weights[i] = w[i] * std::pow(std::max(sc.dist[i], floor), p - 2.0);

    {
      MeanScratch inner;  // tmp1..3 of `sc` are live; keep buffers separate
      mean_p2(S, pts, sc.weights.data(), count, sc.tmp2, inner, tol, max_iter,
              nullptr);
    }

    bool accepted = false;
    double alpha = 1.0;
    for (int h = 0; h < 40; ++h) {
      geodesic_into(S, sc.tmp1, sc.tmp2, alpha, sc.tmp3);
      const double tobj = objective_rows(S, pts, w, count, p, sc.tmp3);
      if (tobj <= obj * (1.0 + 1e-15) + 1e-300) {
        const double rel = (obj - tobj) / std::max(obj, 1e-300);
        sc.tmp1 = sc.tmp3;
        obj = tobj;
        accepted = true;
        if (rel <= tol) it = max_iter;  // converged
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || it >= max_iter) break;
  }
  if (iters) *iters += std::min(it, max_iter);
  out = sc.tmp1;
}

void mean_dispatch(const TargetSpace& S, const Mat& pts, const double* w,
                   int count, double p, VecRef out, MeanScratch& sc,
                   double tol, int max_iter, int* iters) {
  if (p == 2.0) {
    mean_p2(S, pts, w, count, out, sc, tol, max_iter, iters);
    return;
  }
  if (S.kind() == SpaceKind::Tree) {
    tree_mean_general(S.impl(), pts, w, count, p, out);
    return;
  }
  mean_irls(S, pts, w, count, p, out, sc, tol, max_iter, iters);
}

}  // namespace

void frechet_mean_into(const TargetSpace& S, const Mat& pts, const double* w,
                       int count, double power, VecRef out,
                       MeanScratch& scratch) {
  if (count < 1) throw DomainError("mean of an empty point set");
  if (pts.rows() < count || pts.cols() != S.payload_dim())
    throw SpaceMismatchError("point matrix shape does not match the space");
  if (!(power >= 1.0)) throw DomainError("mean exponent must satisfy p >= 1");
  mean_dispatch(S, pts, w, count, power, out, scratch, 1e-10, 200, nullptr);
}

double frechet_objective(const TargetSpace& S, const Mat& pts, const double* w,
                         int count, double power, ConstVecRef a) {
  return objective_rows(S, pts, w, count, power, a);
}

FrechetResult frechet_mean(const TargetSpace& S,
                           const std::vector<TargetPoint>& pts,
                           const std::vector<double>& weights,
                           const FrechetOptions& opts) {
  if (pts.empty()) throw DomainError("mean of an empty point set");
  if (weights.size() != pts.size())
    throw DomainError("mean needs one weight per point");
  if (!(opts.power >= 1.0))
    throw DomainError("mean exponent must satisfy p >= 1, got " +
                      fmt_double(opts.power));
  if (!(opts.tol > 0.0) || opts.max_iter < 1)
    throw DomainError("mean stopping parameters must be positive");
  double tw = 0.0;
  for (double x : weights) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw DomainError("mean weights must be nonnegative and finite");
    tw += x;
  }
  if (!(tw > 0.0)) throw DomainError("mean weights must have positive sum");

  const int count = static_cast<int>(pts.size());
  Mat M(count, S.payload_dim());
  for (int i = 0; i < count; ++i) {
    check_tags(S, pts[i]);
    M.row(i) = pts[i].payload.transpose();
  }

  MeanScratch sc;
  Vec out(S.payload_dim());
  int iters = 0;
  mean_dispatch(S, M, weights.data(), count, opts.power, out, sc, opts.tol,
                opts.max_iter, &iters);

  FrechetResult res;
  res.point = S.make_point(std::move(out));
  res.objective = objective_rows(S, M, weights.data(), count, opts.power,
                                 res.point.payload);
  res.iterations = iters;
  return res;
}

}  // namespace nharm

