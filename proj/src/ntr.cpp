#include "tcdp/ntr.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace tcdp {

bool classify_no_trade(const Decision& d, double tol) { return d.trade_size() <= tol; }

bool classify_no_trade(const PointSolver& solver, std::span<const double> x, double tol) {
  return classify_no_trade(solver(x), tol);
}

std::vector<double> region_point(std::span<const double> x, const Decision& d, double dt) {
  std::vector<double> p(x.begin(), x.end());
  if (dt > 0.0 && d.has_consumption()) {
    const double s = 1.0 / (1.0 - d.consumption * dt);
    for (double& v : p) v *= s;
  }
  return p;
}

namespace {

using Poly = std::vector<std::vector<double>>;

double seg_distance(const std::vector<double>& a, const std::vector<double>& b, std::span<const double> p) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double s = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::hypot(p[0] - (a[0] + s * dx), p[1] - (a[1] + s * dy));
}

}  // namespace

double polygon_area(const Poly& poly) {
  double a = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * a;
}

bool point_in_polygon(const Poly& poly, std::span<const double> p) {
  bool in = false;
  for (std::size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]) in = !in;
  }
  return in;
}

double distance_to_polygon(const Poly& poly, std::span<const double> p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) d = std::min(d, seg_distance(poly[i], poly[(i + 1) % n], p));
  return d;
}

double hausdorff(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  double h = 0.0;
  for (const auto& v : a) h = std::max(h, distance_to_polygon(b, v));
  for (const auto& v : b) h = std::max(h, distance_to_polygon(a, v));
  return h;
}

NoTradeRegion trace_boundary_2d(const PointSolver& solver, const TraceOptions& opt) {
  if (opt.resolution < 2) throw std::invalid_argument("scan resolution must be at least 2");
  opt.window.validate();
  if (opt.window.dimension() != 2) throw std::invalid_argument("trace_boundary_2d needs a 2-D window");
  const int n = opt.resolution;
  const double lx = opt.window.lower[0], ly = opt.window.lower[1];
  const double hx = (opt.window.upper[0] - lx) / (n - 1), hy = (opt.window.upper[1] - ly) / (n - 1);
  auto coord = [&](int i, int j) { return std::vector<double>{lx + i * hx, ly + j * hy}; };

  const auto total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<Decision> dec(total);
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 16) if (opt.parallel)
  for (long long f = 0; f < static_cast<long long>(total); ++f) {
    try {
      const int i = static_cast<int>(f / n), j = static_cast<int>(f % n);
      dec[static_cast<std::size_t>(f)] = solver(coord(i, j));
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);

  NoTradeRegion region;
  region.tol = opt.tol;
  region.step = std::max(hx, hy);
  std::vector<char> inside(total);
  for (std::size_t f = 0; f < total; ++f) {
    inside[f] = classify_no_trade(dec[f], opt.tol) ? 1 : 0;
    region.no_trade_points += static_cast<std::size_t>(inside[f]);
  }
  // Padded lattice: indices -1..n, outside the window counts as trading.
  auto in = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= n || j >= n) return false;
    return inside[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] != 0;
  };
  auto at = [&](int i, int j) -> const Decision& {
    return dec[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  };
  const int P = n + 2;
  auto edge_id = [&](int i, int j, int dir) {  // dir 0: (i,j)-(i+1,j), 1: (i,j)-(i,j+1)
    return 2 * ((i + 1) * P + (j + 1)) + dir;
  };

  std::map<int, std::size_t> crossing;  // edge id -> sample index
  auto crossing_at = [&](int i, int j, int dir) -> std::size_t {
    const int id = edge_id(i, j, dir);
    if (auto it = crossing.find(id); it != crossing.end()) return it->second;
    const int i2 = dir == 0 ? i + 1 : i, j2 = dir == 0 ? j : j + 1;
    const bool first_in = in(i, j);
    const int ii = first_in ? i : i2, ij = first_in ? j : j2;  // inside end
    const int oi = first_in ? i2 : i, oj = first_in ? j2 : j;  // outside end
    BoundarySample s;
    const bool padded = oi < 0 || oj < 0 || oi >= n || oj >= n;
    if (padded) {
      s.x = region_point(coord(ii, ij), at(ii, ij), opt.dt);
      s.flag = 0;
    } else {
      auto a = coord(ii, ij);
      auto b = coord(oi, oj);
      Decision da = at(ii, ij);
      for (int k = 0; k < opt.bisections; ++k) {
        std::vector<double> m = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        Decision dm = solver(m);
        if (classify_no_trade(dm, opt.tol)) {
          a = std::move(m);
          da = std::move(dm);
        } else {
          b = std::move(m);
        }
      }
      s.x = region_point(a, da, opt.dt);
      s.flag = 1;
    }
    region.samples.push_back(std::move(s));
    crossing.emplace(id, region.samples.size() - 1);
    return region.samples.size() - 1;
  };

  // Marching squares over padded cells; saddles keep the inside corners apart.
  std::vector<std::pair<std::size_t, std::size_t>> segs;
  for (int i = -1; i < n; ++i) {
    for (int j = -1; j < n; ++j) {
      const bool c00 = in(i, j), c10 = in(i + 1, j), c11 = in(i + 1, j + 1), c01 = in(i, j + 1);
      std::vector<std::size_t> e;
      // Edges in cyclic order: bottom, right, top, left.
      if (c00 != c10) e.push_back(crossing_at(i, j, 0));
      if (c10 != c11) e.push_back(crossing_at(i + 1, j, 1));
      if (c01 != c11) e.push_back(crossing_at(i, j + 1, 0));
      if (c00 != c01) e.push_back(crossing_at(i, j, 1));
      if (e.size() == 2) {
        segs.emplace_back(e[0], e[1]);
      } else if (e.size() == 4) {
        if (c00) {
          segs.emplace_back(e[0], e[3]);
          segs.emplace_back(e[1], e[2]);
        } else {
          segs.emplace_back(e[0], e[1]);
          segs.emplace_back(e[2], e[3]);
        }
      }
    }
  }

  // Each crossing belongs to exactly two segments; walk the loops.
  std::vector<std::vector<std::size_t>> adj(region.samples.size());
  for (const auto& [a, b] : segs) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> used(region.samples.size(), 0);
  Poly best;
  double best_area = 0.0;
  for (std::size_t s0 = 0; s0 < adj.size(); ++s0) {
    if (used[s0] || adj[s0].empty()) continue;
    Poly loop;
    std::size_t prev = adj.size(), cur = s0;
    do {
      used[cur] = 1;
      loop.push_back(region.samples[cur].x);
      const std::size_t next = adj[cur][0] != prev || adj[cur].size() < 2 ? adj[cur][0] : adj[cur][1];
      prev = cur;
      cur = next;
    } while (cur != s0 && !used[cur]);
    const double a = std::abs(polygon_area(loop));
    if (loop.size() >= 3 && a > best_area) {
      best_area = a;
      best = std::move(loop);
    }
  }
  if (!best.empty() && polygon_area(best) < 0.0) std::reverse(best.begin(), best.end());
  region.polygon = std::move(best);

  if (!region.samples.empty()) {
    region.lower.assign(2, std::numeric_limits<double>::infinity());
    region.upper.assign(2, -std::numeric_limits<double>::infinity());
    for (const auto& s : region.samples) {
      for (std::size_t k = 0; k < 2; ++k) {
        region.lower[k] = std::min(region.lower[k], s.x[k]);
        region.upper[k] = std::max(region.upper[k], s.x[k]);
      }
    }
  }
  return region;
}

HyperRectangle zoom_window(const NoTradeRegion& region, double margin, const HyperRectangle& limit) {
  if (region.empty()) throw std::invalid_argument("empty region");
  HyperRectangle w;
  for (std::size_t k = 0; k < region.lower.size(); ++k) {
    w.lower.push_back(std::max(limit.lower[k], region.lower[k] - margin * region.step));
    w.upper.push_back(std::min(limit.upper[k], region.upper[k] + margin * region.step));
  }
  return w;
}

HyperRectangle target_window(const PointSolver& solver, const HyperRectangle& window, double margin) {
  const std::size_t k = window.dimension();
  std::vector<std::vector<double>> probes;
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    std::vector<double> p(k);
    for (std::size_t j = 0; j < k; ++j) p[j] = (mask >> j) & 1 ? window.upper[j] : window.lower[j];
    probes.push_back(std::move(p));
  }
  std::vector<double> mid(k);
  for (std::size_t j = 0; j < k; ++j) mid[j] = 0.5 * (window.lower[j] + window.upper[j]);
  probes.push_back(mid);
  HyperRectangle box{std::vector<double>(k, std::numeric_limits<double>::infinity()),
                     std::vector<double>(k, -std::numeric_limits<double>::infinity())};
  for (const auto& p : probes) {
    const Decision d = solver(p);
    for (std::size_t j = 0; j < k; ++j) {
      box.lower[j] = std::min(box.lower[j], d.post[j]);
      box.upper[j] = std::max(box.upper[j], d.post[j]);
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const double ext = std::max(box.upper[j] - box.lower[j], 1e-3 * (window.upper[j] - window.lower[j]));
    box.lower[j] = std::max(window.lower[j], box.lower[j] - margin * ext);
    box.upper[j] = std::min(window.upper[j], box.upper[j] + margin * ext);
    if (!(box.upper[j] > box.lower[j])) return window;
  }
  return box;
}

NoTradeRegion trace_no_trade_region(const PointSolver& solver, const TraceOptions& opt, bool zoom) {
  TraceOptions to = opt;
  NoTradeRegion r = trace_boundary_2d(solver, to);
  if (r.no_trade_points == 0) {
    to.window = target_window(solver, opt.window);
    r = trace_boundary_2d(solver, to);
  }
  if (zoom && !r.empty() && r.no_trade_points > 0) {
    // Boundary samples of consumption models are mapped points; the extra
    // margin covers the small shift back to state space.
    to.window = zoom_window(r, opt.dt > 0.0 ? 4.0 : 2.0, opt.window);
    NoTradeRegion z = trace_boundary_2d(solver, to);
    if (!z.empty() && z.no_trade_points > 0) r = std::move(z);
  }
  return r;
}

std::vector<double> centroid(const NoTradeRegion& region) {
  const auto& poly = region.polygon;
  if (poly.size() < 3) throw std::invalid_argument("empty region");
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    const double w = p[0] * q[1] - q[0] * p[1];
    a += w;
    cx += (p[0] + q[0]) * w;
    cy += (p[1] + q[1]) * w;
  }
  if (std::abs(a) < 1e-300) {
    // Degenerate (zero-area) loop: average the vertices.
    cx = cy = 0.0;
    for (const auto& p : poly) {
      cx += p[0];
      cy += p[1];
    }
    return {cx / static_cast<double>(poly.size()), cy / static_cast<double>(poly.size())};
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

double region_width(const NoTradeRegion& region, std::size_t axis) {
  if (axis > 1) throw std::invalid_argument("axis must be 0 or 1");
  const auto c = centroid(region);
  const std::size_t other = 1 - axis;
  const double level = c[other];
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  const auto& poly = region.polygon;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    const double a = p[other] - level, b = q[other] - level;
    if ((a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0)) {
      double v;
      if (a == b) {
        lo = std::min({lo, p[axis], q[axis]});
        hi = std::max({hi, p[axis], q[axis]});
        continue;
      }
      v = p[axis] + (q[axis] - p[axis]) * a / (a - b);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi >= lo)) throw std::runtime_error("centroid line misses the region");
  return hi - lo;
}

double diagonal_asymmetry(const NoTradeRegion& region) {
  Poly m;
  for (const auto& v : region.polygon) m.push_back({v[1], v[0]});
  return hausdorff(region.polygon, m);
}

double containment_excess(const NoTradeRegion& inner, const NoTradeRegion& outer) {
  double e = 0.0;
  for (const auto& v : inner.polygon) {
    if (!point_in_polygon(outer.polygon, v)) e = std::max(e, distance_to_polygon(outer.polygon, v));
  }
  return e;
}

double principal_slope(const NoTradeRegion& region) {
  // Window-clipped samples trace the window, not the region.
  std::vector<const BoundarySample*> pts;
  for (const auto& s : region.samples) {
    if (s.flag == 1) pts.push_back(&s);
  }
  if (pts.size() < 2) {
    pts.clear();
    for (const auto& s : region.samples) pts.push_back(&s);
  }
  if (pts.size() < 2) throw std::invalid_argument("empty region");
  double mx = 0.0, my = 0.0;
  for (const auto* s : pts) {
    mx += s->x[0];
    my += s->x[1];
  }
  const auto n = static_cast<double>(pts.size());
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto* s : pts) {
    sxx += (s->x[0] - mx) * (s->x[0] - mx);
    sxy += (s->x[0] - mx) * (s->x[1] - my);
  }
  return sxy / sxx;
}

FaceProbe probe_faces(const PointSolver& solver, std::span<const double> center, double tol, int bisections,
                      double dt) {
  FaceProbe fp;
  fp.center.assign(center.begin(), center.end());
  const std::size_t k = center.size();
  const Decision dc = solver(center);
  fp.center_inside = classify_no_trade(dc, tol);
  if (!fp.center_inside) return fp;
  fp.lower.resize(k);
  fp.upper.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    for (int dir : {-1, 1}) {
      const double smax = dir < 0 ? center[j] : 1.0 - center[j];
      std::vector<double> p(center.begin(), center.end());
      auto at = [&](double s) {
        p[j] = center[j] + dir * s;
        return p;
      };
      double a = 0.0, b = smax;
      Decision da = dc;
      Decision db = solver(at(b));
      if (classify_no_trade(db, tol)) {
        a = b;
        da = std::move(db);
      } else {
        for (int it = 0; it < bisections; ++it) {
          const double m = 0.5 * (a + b);
          Decision dm = solver(at(m));
          if (classify_no_trade(dm, tol)) {
            a = m;
            da = std::move(dm);
          } else {
            b = m;
          }
        }
      }
      const auto q = region_point(at(a), da, dt);
      (dir < 0 ? fp.lower : fp.upper)[j] = q[j];
    }
  }
  return fp;
}

void write_region_csv(std::ostream& os, const NoTradeRegion& region, double time) {
  const auto old = os.precision(17);
  os << "time,discrete_state";
  for (std::size_t k = 0; k < region.dimension; ++k) os << ",x" << k + 1;
  os << ",boundary_flag\n";
  for (const auto& s : region.samples) {
    os << time << ',' << region.state;
    for (double v : s.x) os << ',' << v;
    os << ',' << s.flag << '\n';
  }
  os.precision(old);
}

}  // namespace tcdp
