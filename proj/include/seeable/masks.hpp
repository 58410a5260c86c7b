#pragma once

// Submask schemes: partitions of the landmark-defined face region into
// per-location blending masks, plus the coverage/overlap/balance checks.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "seeable/image.hpp"
#include "seeable/image_ops.hpp"

namespace seeable {

enum class SubmaskKind { ConvexHull, Meshgrid, Grid };

struct SubmaskScheme {
  SubmaskKind kind = SubmaskKind::Grid;
  int rows = 4;
  int cols = 4;
  double feather_sigma = 3.0;  // pixels; 0 disables feathering

  int n_loc() const { return kind == SubmaskKind::ConvexHull ? 1 : rows * cols; }

  void validate() const {
    if (rows < 1 || cols < 1) throw std::invalid_argument("SubmaskScheme: rows, cols >= 1");
    if (feather_sigma < 0.0) throw std::invalid_argument("SubmaskScheme: feather_sigma >= 0");
  }
};

namespace detail {

struct PixelBox {
  int x0, y0, x1, y1;  // inclusive
};

inline PixelBox landmark_box(const Landmarks& lms, int width, int height) {
  if (lms.empty()) throw std::domain_error("landmark_box: no landmarks");
  double mnx = lms[0].x, mxx = lms[0].x, mny = lms[0].y, mxy = lms[0].y;
  for (const auto& p : lms) {
    mnx = std::min(mnx, p.x);
    mxx = std::max(mxx, p.x);
    mny = std::min(mny, p.y);
    mxy = std::max(mxy, p.y);
  }
  if (mxx - mnx <= 0.0 || mxy - mny <= 0.0)
    throw std::domain_error("landmark_box: degenerate (zero-area) landmark box");
  PixelBox b;
  b.x0 = std::max(0, static_cast<int>(std::floor(mnx)));
  b.y0 = std::max(0, static_cast<int>(std::floor(mny)));
  b.x1 = std::min(width - 1, static_cast<int>(std::ceil(mxx)));
  b.y1 = std::min(height - 1, static_cast<int>(std::ceil(mxy)));
  if (b.x1 <= b.x0 || b.y1 <= b.y0)
    throw std::domain_error("landmark_box: degenerate after clipping");
  return b;
}

// Equal integer splits of [0, extent) into n cells; boundary i of n+1.
inline int split_at(int extent, int n, int i) { return static_cast<int>((static_cast<long long>(extent) * i) / n); }

// Cell boundaries from landmark coordinate quantiles; interior boundaries
// follow where the landmarks cluster, so cell sizes are uneven on purpose.
inline std::vector<int> quantile_splits(std::vector<double> coords, int lo, int hi, int n) {
  std::sort(coords.begin(), coords.end());
  std::vector<int> b(n + 1);
  b[0] = lo;
  b[n] = hi + 1;
  for (int i = 1; i < n; ++i) {
    const double q = coords[static_cast<size_t>((coords.size() - 1) * i / n)];
    int v = static_cast<int>(std::lround(q));
    v = std::min(std::max(v, lo + i), hi + 1 - (n - i));  // keep cells nonempty
    b[i] = std::max(v, b[i - 1] + 1);
  }
  return b;
}

}  // namespace detail

// Binary (pre-feather) mask for one location of the scheme.
inline BlendMask make_submask_binary(const SubmaskScheme& scheme, const Landmarks& lms,
                                     int y_loc, int width, int height) {
  scheme.validate();
  if (y_loc < 0 || y_loc >= scheme.n_loc())
    throw std::domain_error("make_submask: y_loc out of range");

  if (scheme.kind == SubmaskKind::ConvexHull) return convex_hull_mask(lms, width, height);

  const auto box = detail::landmark_box(lms, width, height);
  const int bw = box.x1 - box.x0 + 1;
  const int bh = box.y1 - box.y0 + 1;
  const int r = y_loc / scheme.cols;
  const int c = y_loc % scheme.cols;

  int cx0, cx1, cy0, cy1;  // half-open pixel ranges relative to the box
  if (scheme.kind == SubmaskKind::Grid) {
    cx0 = detail::split_at(bw, scheme.cols, c);
    cx1 = detail::split_at(bw, scheme.cols, c + 1);
    cy0 = detail::split_at(bh, scheme.rows, r);
    cy1 = detail::split_at(bh, scheme.rows, r + 1);
  } else {  // Meshgrid
    std::vector<double> xs, ys;
    for (const auto& p : lms) {
      xs.push_back(p.x - box.x0);
      ys.push_back(p.y - box.y0);
    }
    const auto bx = detail::quantile_splits(xs, 0, bw - 1, scheme.cols);
    const auto by = detail::quantile_splits(ys, 0, bh - 1, scheme.rows);
    cx0 = bx[c];
    cx1 = bx[c + 1];
    cy0 = by[r];
    cy1 = by[r + 1];
  }

  BlendMask mask;
  mask.width = width;
  mask.height = height;
  mask.values.assign(static_cast<size_t>(width) * height, 0.0f);
  for (int y = cy0; y < cy1; ++y)
    for (int x = cx0; x < cx1; ++x) mask.at(box.x0 + x, box.y0 + y) = 1.0f;
  return mask;
}

// Feathered mask: Gaussian on the binary cell with zero border, so values
// stay in [0,1] and the support is the cell dilated by the kernel radius.
inline BlendMask make_submask(const SubmaskScheme& scheme, const Landmarks& lms, int y_loc,
                              int width, int height) {
  BlendMask mask = make_submask_binary(scheme, lms, y_loc, width, height);
  if (scheme.feather_sigma > 0.0)
    gaussian_blur_plane(mask.values, width, height, scheme.feather_sigma, Border::Zero);
  return mask;
}

// Coverage/overlap/balance report over the binary supports.
struct SchemeReport {
  bool full_coverage = false;  // A1: union covers >= 99.9% of the face region
  bool no_overlap = false;     // A2: pairwise intersections empty
  bool balanced = false;       // A3: max/min patch area ratio <= 1.10
  double coverage = 0.0;
  double area_ratio = 1.0;
};

inline SchemeReport validate_scheme(const SubmaskScheme& scheme, const Landmarks& lms,
                                    int width, int height) {
  scheme.validate();
  const int n = scheme.n_loc();
  std::vector<BlendMask> masks;
  masks.reserve(n);
  for (int k = 0; k < n; ++k) masks.push_back(make_submask_binary(scheme, lms, k, width, height));

  // face region: the landmark hull for the hull scheme, the box otherwise
  std::vector<uint8_t> region(static_cast<size_t>(width) * height, 0);
  if (scheme.kind == SubmaskKind::ConvexHull) {
    const auto hull = convex_hull_mask(lms, width, height);
    for (size_t i = 0; i < region.size(); ++i) region[i] = hull.values[i] > 0.0f;
  } else {
    const auto box = detail::landmark_box(lms, width, height);
    for (int y = box.y0; y <= box.y1; ++y)
      for (int x = box.x0; x <= box.x1; ++x) region[static_cast<size_t>(y) * width + x] = 1;
  }

  size_t region_px = 0, covered = 0;
  bool overlap = false;
  for (size_t i = 0; i < region.size(); ++i) {
    int hits = 0;
    for (const auto& m : masks) hits += m.values[i] > 0.0f;
    if (hits > 1) overlap = true;
    if (region[i]) {
      ++region_px;
      if (hits > 0) ++covered;
    }
  }

  size_t mn = SIZE_MAX, mx = 0;
  for (const auto& m : masks) {
    size_t area = 0;
    for (float v : m.values) area += v > 0.0f;
    mn = std::min(mn, area);
    mx = std::max(mx, area);
  }

  SchemeReport rep;
  rep.coverage = region_px == 0 ? 0.0 : static_cast<double>(covered) / region_px;
  rep.full_coverage = rep.coverage >= 0.999;
  rep.no_overlap = !overlap;
  rep.area_ratio = (n == 1 || mn == 0) ? 1.0 : static_cast<double>(mx) / static_cast<double>(mn);
  rep.balanced = rep.area_ratio <= 1.10;
  return rep;
}

}  // namespace seeable
