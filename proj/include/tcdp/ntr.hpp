#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "tcdp/approx.hpp"
#include "tcdp/policy.hpp"

namespace tcdp {

/// True iff every buy and sell entry is at most `tol`.
bool classify_no_trade(const Decision& d, double tol = 1e-6);
bool classify_no_trade(const PointSolver& solver, std::span<const double> x, double tol = 1e-6);

/// Point of the no-trade region represented by a no-trade state x: x itself,
/// or x / (1 - c dt) for consumption decisions when dt > 0.
std::vector<double> region_point(std::span<const double> x, const Decision& d, double dt);

struct BoundarySample {
  std::vector<double> x;
  int flag = 1;  // 1: bisected crossing, 0: clipped by the scan window
};

struct NoTradeRegion {
  int t = 0;
  std::size_t state = 0;
  std::size_t dimension = 2;
  double tol = 1e-6;
  double step = 0.0;                         // scan spacing (largest axis)
  std::vector<std::vector<double>> polygon;  // 2-D: ordered, counter-clockwise
  std::vector<BoundarySample> samples;       // every boundary point found
  std::vector<double> lower, upper;          // bounding box of the samples
  std::size_t no_trade_points = 0;           // scan points classified no-trade

  bool empty() const { return samples.empty(); }
};

struct TraceOptions {
  int resolution = 101;
  int bisections = 12;
  double tol = 1e-6;
  double dt = 0.0;                 // > 0 maps consumption states via x / (1 - c dt)
  HyperRectangle window = HyperRectangle::unit_cube(2);
  bool parallel = true;
};

/// Scan on a resolution^2 lattice over the window, bisection along every
/// in/out lattice edge, then marching squares; the polygon is the largest
/// closed loop (points beyond the window count as trading, so a region
/// clipped by the window is closed along the window edge).
NoTradeRegion trace_boundary_2d(const PointSolver& solver, const TraceOptions& opt = {});

/// Bounding box of `region` grown by `margin` cells and clipped to `limit`;
/// used to re-trace at a finer effective resolution.
HyperRectangle zoom_window(const NoTradeRegion& region, double margin, const HyperRectangle& limit);

/// Bounding box of the post-trade holdings chosen from the window's corners
/// and center, grown by `margin` times its extent and clipped to the window.
/// Trades end on the region boundary, so this brackets a region too thin
/// for the scan lattice to hit.
HyperRectangle target_window(const PointSolver& solver, const HyperRectangle& window, double margin = 0.5);

/// trace_boundary_2d over opt.window; when no scan point is no-trade, again
/// over target_window. With `zoom`, re-traces over zoom_window of the result
/// and keeps it if it still sees the region.
NoTradeRegion trace_no_trade_region(const PointSolver& solver, const TraceOptions& opt, bool zoom = true);

/// Area centroid of the polygon.
std::vector<double> centroid(const NoTradeRegion& region);

/// Extent of the polygon along `axis` on the line through the centroid.
double region_width(const NoTradeRegion& region, std::size_t axis);

double polygon_area(const std::vector<std::vector<double>>& poly);
bool point_in_polygon(const std::vector<std::vector<double>>& poly, std::span<const double> p);
double distance_to_polygon(const std::vector<std::vector<double>>& poly, std::span<const double> p);

/// Largest distance from a vertex of `a` to `b`'s boundary and back.
double hausdorff(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

/// Hausdorff distance between the polygon and its mirror image in x1 = x2.
double diagonal_asymmetry(const NoTradeRegion& region);

/// Largest distance by which a vertex of `inner` lies outside `outer`
/// (0 when contained).
double containment_excess(const NoTradeRegion& inner, const NoTradeRegion& outer);

/// Slope of the region's principal axis from the covariance of the
/// bisected boundary samples: cov(x1, x2) / var(x1).
double principal_slope(const NoTradeRegion& region);

/// k >= 3: boundary points along rays center +/- s e_j found by bisection.
struct FaceProbe {
  std::vector<double> center;
  std::vector<double> lower, upper;  // per-axis boundary coordinates
  bool center_inside = false;
};
FaceProbe probe_faces(const PointSolver& solver, std::span<const double> center, double tol = 1e-6,
                      int bisections = 30, double dt = 0.0);

/// Rows "time,discrete_state,x1,...,xk,boundary_flag".
void write_region_csv(std::ostream& os, const NoTradeRegion& region, double time);

}  // namespace tcdp
