#include <algorithm>
#include <map>
#include <numeric>

#include "docmine/error.hpp"
#include "docmine/table.hpp"
#include "layout/layout.hpp"
#include "table/internal.hpp"

namespace docmine::table {

namespace {

struct Axis {
  // Accessors that let one routine serve both the x and the y axis.
  bool horizontal;  // true: positions along x
  double lo(const BBox& b) const { return horizontal ? b.x0 : b.y0; }
  double hi(const BBox& b) const { return horizontal ? b.x1 : b.y1; }
  double olo(const BBox& b) const { return horizontal ? b.y0 : b.x0; }
  double ohi(const BBox& b) const { return horizontal ? b.y1 : b.x1; }
};

bool overlap_1d(double a0, double a1, double b0, double b1) { return a0 < b1 && b0 < a1; }

// A run that overlaps, along the axis, two runs that are disjoint along it and
// share a line across it. Such runs span columns (or rows) and would hide the
// separator between them from the projection.
std::vector<bool> bridging(const std::vector<BBox>& boxes, const Axis& ax) {
  std::vector<bool> out(boxes.size(), false);
  for (std::size_t a = 0; a < boxes.size(); ++a) {
    std::vector<std::size_t> hits;
    for (std::size_t b = 0; b < boxes.size(); ++b)
      if (b != a && overlap_1d(ax.lo(boxes[a]), ax.hi(boxes[a]), ax.lo(boxes[b]), ax.hi(boxes[b])))
        hits.push_back(b);
    for (std::size_t i = 0; i < hits.size() && !out[a]; ++i)
      for (std::size_t j = i + 1; j < hits.size(); ++j) {
        const BBox& p = boxes[hits[i]];
        const BBox& q = boxes[hits[j]];
        if (!overlap_1d(ax.lo(p), ax.hi(p), ax.lo(q), ax.hi(q)) &&
            overlap_1d(ax.olo(p), ax.ohi(p), ax.olo(q), ax.ohi(q))) {
          out[a] = true;
          break;
        }
      }
  }
  return out;
}

// Separator midpoints of projection gaps at least min_gap wide, strictly inside
// (lo, hi). Only boxes whose center lies in [lo, hi] contribute.
std::vector<double> projection_separators(const std::vector<BBox>& boxes,
                                          const std::vector<bool>& skip, const Axis& ax,
                                          double lo, double hi, double min_gap) {
  std::vector<layout::Interval> spans;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (skip[i]) continue;
    const double c = (ax.lo(boxes[i]) + ax.hi(boxes[i])) / 2;
    if (c < lo || c > hi) continue;
    spans.push_back({std::max(lo, ax.lo(boxes[i])), std::min(hi, ax.hi(boxes[i]))});
  }
  std::vector<double> out;
  for (const auto& g : layout::projection_gaps(spans))
    if (g.hi - g.lo >= min_gap && g.hi - g.lo > 0) out.push_back((g.lo + g.hi) / 2);
  return out;
}

// Column separators from the projection of body runs. A header run that lines
// up (left, right or center within 1 pt) with the body column next to a gap
// narrows that gap; an unaligned header run leaves it as is and will cross
// the separator.
std::vector<double> column_separators(const std::vector<BBox>& boxes, const std::vector<bool>& skip,
                                      const std::vector<bool>& header, double lo, double hi,
                                      double min_gap) {
  std::vector<layout::Interval> spans;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double c = boxes[i].center().x;
    if (skip[i] || header[i] || c < lo || c > hi) continue;
    spans.push_back({std::max(lo, boxes[i].x0), std::min(hi, boxes[i].x1)});
  }
  auto wide_gaps = [&] {
    std::vector<layout::Interval> out;
    for (const auto& g : layout::projection_gaps(spans))
      if (g.hi - g.lo >= min_gap && g.hi - g.lo > 0) out.push_back(g);
    return out;
  };
  std::vector<layout::Interval> gaps = wide_gaps();
  // A header run standing clear inside a body gap heads a column the body
  // leaves empty.
  bool grew = false;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!header[i] || skip[i]) continue;
    for (const auto& g : gaps)
      if (boxes[i].x0 - g.lo >= min_gap && g.hi - boxes[i].x1 >= min_gap) {
        spans.push_back({boxes[i].x0, boxes[i].x1});
        grew = true;
      }
  }
  if (spans.empty()) return {};
  if (grew) gaps = wide_gaps();

  // Body column extents between consecutive gaps.
  std::vector<layout::Interval> columns;
  double start = 1e300, end = -1e300;
  for (const auto& s : spans) {
    start = std::min(start, s.lo);
    end = std::max(end, s.hi);
  }
  double cursor = start;
  for (const auto& g : gaps) {
    columns.push_back({cursor, g.lo});
    cursor = g.hi;
  }
  columns.push_back({cursor, end});
  auto aligned = [](const BBox& b, const layout::Interval& col) {
    return std::abs(b.x0 - col.lo) <= 1.0 || std::abs(b.x1 - col.hi) <= 1.0 ||
           std::abs((b.x0 + b.x1) / 2 - (col.lo + col.hi) / 2) <= 1.0;
  };

  std::vector<double> out;
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    layout::Interval g = gaps[k];
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (!header[i] || skip[i]) continue;
      const BBox& b = boxes[i];
      if (!(b.x0 < g.hi && g.lo < b.x1)) continue;
      if (aligned(b, columns[k])) g.lo = std::max(g.lo, b.x1);
      else if (aligned(b, columns[k + 1])) g.hi = std::min(g.hi, b.x0);
    }
    if (g.hi - g.lo < min_gap || g.hi <= g.lo) g = gaps[k];
    out.push_back((g.lo + g.hi) / 2);
  }
  return out;
}

// A partial horizontal rule just below a run and wider than it on both sides
// marks the run as a header over several columns.
const pdf::LineSegment* spanned_by_rule(const BBox& b, const std::vector<pdf::LineSegment>& hs,
                                        double table_width) {
  for (const auto& s : hs) {
    const double x0 = std::min(s.start.x, s.end.x), x1 = std::max(s.start.x, s.end.x);
    const double y = s.midpoint().y;
    if (x1 - x0 >= 0.9 * table_width) continue;
    if (y >= b.y1 && y - b.y1 <= 1.5 * b.height() && x0 < b.x0 && x1 > b.x1) return &s;
  }
  return nullptr;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

// Sorted, strictly increasing, with near-duplicates (< 0.5 pt) collapsed.
std::vector<double> normalize_bounds(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() >= 0.5) out.push_back(x);
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

int locate(const std::vector<double>& bounds, double v) {
  auto it = std::upper_bound(bounds.begin(), bounds.end(), v);
  int i = static_cast<int>(it - bounds.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(bounds.size()) - 2);
}

}  // namespace

// Bounding rectangles of the given groups, grown until pairwise disjoint.
std::vector<Span> normalize_merges(std::vector<Span> spans) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < spans.size() && !changed; ++i)
      for (std::size_t j = i + 1; j < spans.size(); ++j)
        if (spans[i].overlaps(spans[j])) {
          spans[i] = {std::min(spans[i].r0, spans[j].r0), std::min(spans[i].c0, spans[j].c0),
                      std::max(spans[i].r1, spans[j].r1), std::max(spans[i].c1, spans[j].c1)};
          spans.erase(spans.begin() + static_cast<long>(j));
          changed = true;
          break;
        }
  }
  std::erase_if(spans, [](const Span& s) { return s.r0 == s.r1 && s.c0 == s.c1; });
  std::sort(spans.begin(), spans.end());
  return spans;
}

Grid recognize_structure(const pdf::PageModel& page, const BBox& region, const Config& cfg) {
  const auto idx = layout::runs_in(page, region);
  std::vector<BBox> boxes;
  for (std::size_t i : idx) boxes.push_back(page.text_runs[i].bbox);

  const BBox zone{region.x0 - 2, region.y0 - 2, region.x1 + 2, region.y1 + 2};
  std::vector<pdf::LineSegment> hs, vs;
  for (const auto& s : page.line_segments) {
    const BBox b = s.bbox();
    if (b.x1 < zone.x0 || b.x0 > zone.x1 || b.y1 < zone.y0 || b.y0 > zone.y1) continue;
    if (s.length() < 3.0) continue;
    if (s.orientation == pdf::Orientation::Horizontal) hs.push_back(s);
    if (s.orientation == pdf::Orientation::Vertical) vs.push_back(s);
  }
  if (boxes.empty() && hs.empty() && vs.empty())
    fail(ErrorCode::NoContent, "region holds no text and no rules");

  std::vector<double> hy, vx;
  for (const auto& s : hs) hy.push_back(s.midpoint().y);
  for (const auto& s : vs) vx.push_back(s.midpoint().x);
  const auto h_rules = layout::cluster_positions(hy, cfg.separator_merge);
  const auto v_rules = layout::cluster_positions(vx, cfg.separator_merge);

  double text_x0 = region.x1, text_x1 = region.x0, text_y0 = region.y1, text_y1 = region.y0;
  for (const BBox& b : boxes) {
    text_x0 = std::min(text_x0, b.x0);
    text_x1 = std::max(text_x1, b.x1);
    text_y0 = std::min(text_y0, b.y0);
    text_y1 = std::max(text_y1, b.y1);
  }

  // Outer bounds: the rules when present, widened to the region when text
  // lies outside them.
  double xlo = region.x0, xhi = region.x1, ylo = region.y0, yhi = region.y1;
  if (!hs.empty() || !vs.empty()) {
    xlo = 1e300, xhi = -1e300;
    for (const auto& s : hs) {
      xlo = std::min({xlo, s.start.x, s.end.x});
      xhi = std::max({xhi, s.start.x, s.end.x});
    }
    for (double x : v_rules) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
    }
    xlo = std::max(xlo, zone.x0);
    xhi = std::min(xhi, zone.x1);
    if (xhi - xlo < 1.0 || (!boxes.empty() && text_x0 < xlo)) xlo = std::min(region.x0, xlo);
    if (xhi - xlo < 1.0 || (!boxes.empty() && text_x1 > xhi)) xhi = std::max(region.x1, xhi);
  }
  if (h_rules.size() >= 2) {
    ylo = std::max(h_rules.front(), zone.y0);
    yhi = std::min(h_rules.back(), zone.y1);
    if (!boxes.empty() && text_y0 < ylo) ylo = std::min(region.y0, ylo);
    if (!boxes.empty() && text_y1 > yhi) yhi = std::max(region.y1, yhi);
  }

  const bool fully_ruled = v_rules.size() >= 3 && h_rules.size() >= 2;
  const Axis ax_x{true}, ax_y{false};
  std::vector<double> cols{xlo, xhi}, rows{ylo, yhi};

  if (fully_ruled) {
    for (double x : v_rules)
      if (x > xlo + 0.5 && x < xhi - 0.5) cols.push_back(x);
    for (double y : h_rules)
      if (y > ylo + 0.5 && y < yhi - 0.5) rows.push_back(y);
  } else {
    // Columns by whitespace projection. The gap threshold is relative to the
    // typical word gap; without word gaps any clean gap separates.
    std::vector<double> word_gaps, sizes;
    for (const auto& line : layout::group_lines(page.text_runs, idx)) {
      for (std::size_t k = 1; k < line.runs.size(); ++k) {
        const double g = page.text_runs[line.runs[k]].bbox.x0 -
                         page.text_runs[line.runs[k - 1]].bbox.x1;
        if (g > 0 && g < 0.5 * line.font_size) word_gaps.push_back(g);
      }
    }
    for (std::size_t i : idx) sizes.push_back(page.text_runs[i].font_size);
    double min_gap = 0.0;
    if (!word_gaps.empty()) min_gap = cfg.gap_factor * median(word_gaps);
    else if (!sizes.empty()) min_gap = 0.25 * median(sizes);
    // Header runs above the first interior rule do not shape the columns
    // unless they line up with one; others may span several columns.
    double header_end = -1e300;
    for (double y : h_rules)
      if (y > ylo + 0.5 && y < yhi - 0.5) {
        header_end = y;
        break;
      }
    std::vector<bool> header(boxes.size(), false);
    int body_runs = 0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      header[i] = boxes[i].center().y < header_end;
      body_runs += header[i] ? 0 : 1;
    }
    if (body_runs < 2) std::fill(header.begin(), header.end(), false);
    auto skip_x = bridging(boxes, ax_x);
    for (std::size_t i = 0; i < boxes.size(); ++i)
      if (spanned_by_rule(boxes[i], hs, xhi - xlo)) skip_x[i] = true;
    for (double x : column_separators(boxes, skip_x, header, xlo, xhi, min_gap))
      cols.push_back(x);

    // Rows: the rules, then projection inside each band between them.
    std::vector<double> bands{ylo, yhi};
    for (double y : h_rules)
      if (y > ylo + 0.5 && y < yhi - 0.5) bands.push_back(y);
    bands = normalize_bounds(bands);
    const auto skip_y = bridging(boxes, ax_y);
    for (std::size_t k = 0; k + 1 < bands.size(); ++k) {
      rows.push_back(bands[k]);
      for (double y : projection_separators(boxes, skip_y, ax_y, bands[k], bands[k + 1], 0.0))
        rows.push_back(y);
    }
  }

  Grid g;
  g.col_bounds = normalize_bounds(cols);
  g.row_bounds = normalize_bounds(rows);
  if (g.col_bounds.size() < 2) g.col_bounds = {region.x0, region.x1};
  if (g.row_bounds.size() < 2) g.row_bounds = {region.y0, region.y1};

  const int nr = g.rows(), nc = g.cols();
  UnionFind uf(nr * nc);
  auto id = [nc](int r, int c) { return r * nc + c; };

  if (fully_ruled) {
    // A separator missing along a cell edge joins the two cells.
    const double tol = cfg.separator_merge;
    for (int k = 1; k < nc; ++k)
      for (int r = 0; r < nr; ++r) {
        const double ya = g.row_bounds[r], yb = g.row_bounds[r + 1], q = 0.25 * (yb - ya);
        const bool drawn = std::any_of(vs.begin(), vs.end(), [&](const pdf::LineSegment& s) {
          const BBox b = s.bbox();
          return std::abs(s.midpoint().x - g.col_bounds[k]) <= tol && b.y0 <= ya + q &&
                 b.y1 >= yb - q;
        });
        if (!drawn) uf.unite(id(r, k - 1), id(r, k));
      }
    for (int k = 1; k < nr; ++k)
      for (int c = 0; c < nc; ++c) {
        const double xa = g.col_bounds[c], xb = g.col_bounds[c + 1], q = 0.25 * (xb - xa);
        const bool drawn = std::any_of(hs.begin(), hs.end(), [&](const pdf::LineSegment& s) {
          const BBox b = s.bbox();
          return std::abs(s.midpoint().y - g.row_bounds[k]) <= tol && b.x0 <= xa + q &&
                 b.x1 >= xb - q;
        });
        if (!drawn) uf.unite(id(k - 1, c), id(k, c));
      }
  }

  if (!fully_ruled) {
    for (const BBox& b : boxes) {
      const auto* rule = spanned_by_rule(b, hs, g.col_bounds.back() - g.col_bounds.front());
      if (!rule) continue;
      const double x0 = std::min(rule->start.x, rule->end.x);
      const double x1 = std::max(rule->start.x, rule->end.x);
      const int r = locate(g.row_bounds, b.center().y);
      int first = -1, last = -1;
      for (int c = 0; c < nc; ++c) {
        const double w = g.col_bounds[c + 1] - g.col_bounds[c];
        if (std::min(x1, g.col_bounds[c + 1]) - std::max(x0, g.col_bounds[c]) > 0.5 * w) {
          if (first < 0) first = c;
          last = c;
        }
      }
      for (int c = first; first >= 0 && c <= last; ++c) uf.unite(id(r, first), id(r, c));
    }
  }

  // A run reaching deep across a separator joins every cell it covers.
  for (const BBox& b : boxes) {
    const double depth = cfg.merge_crossing * b.height();
    auto covered = [&](const std::vector<double>& bounds, double lo, double hi) {
      const int n = static_cast<int>(bounds.size()) - 1;
      const double mid = (lo + hi) / 2;
      int first = locate(bounds, mid), last = first;
      for (int i = 0; i < n; ++i) {
        const double ov = std::min(hi, bounds[i + 1]) - std::max(lo, bounds[i]);
        if (ov > depth) {
          first = std::min(first, i);
          last = std::max(last, i);
        }
      }
      return std::pair{first, last};
    };
    const auto [c0, c1] = covered(g.col_bounds, b.x0, b.x1);
    const auto [r0, r1] = covered(g.row_bounds, b.y0, b.y1);
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) uf.unite(id(r0, c0), id(r, c));
  }

  std::map<int, Span> groups;
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c) {
      const int root = uf.find(id(r, c));
      auto [it, fresh] = groups.try_emplace(root, Span{r, c, r, c});
      if (!fresh) {
        Span& s = it->second;
        s = {std::min(s.r0, r), std::min(s.c0, c), std::max(s.r1, r), std::max(s.c1, c)};
      }
    }
  std::vector<Span> spans;
  for (const auto& [root, s] : groups) spans.push_back(s);
  g.merges = normalize_merges(spans);
  return g;
}

}  // namespace docmine::table
