#include <algorithm>
#include <regex>

#include "docmine/table.hpp"
#include "layout/layout.hpp"

namespace docmine::table {

namespace {

struct Rule {
  double y, x0, x1;
  double length() const { return x1 - x0; }
};

bool is_caption(const std::string& text) {
  static const std::regex re(R"(^(Table|Fig\.?|Figure)\s*\d+)");
  return std::regex_search(text, re);
}

// Whitespace intervals of at least one em between consecutive runs.
std::vector<layout::Interval> gutters(const pdf::PageModel& page, const layout::Line& line) {
  std::vector<layout::Interval> out;
  for (std::size_t k = 1; k < line.runs.size(); ++k) {
    const BBox& a = page.text_runs[line.runs[k - 1]].bbox;
    const BBox& b = page.text_runs[line.runs[k]].bbox;
    if (b.x0 - a.x1 >= line.font_size) out.push_back({a.x1, b.x0});
  }
  return out;
}

std::vector<layout::Interval> intersect(const std::vector<layout::Interval>& a,
                                        const std::vector<layout::Interval>& b) {
  std::vector<layout::Interval> out;
  for (const auto& p : a)
    for (const auto& q : b) {
      const double lo = std::max(p.lo, q.lo), hi = std::min(p.hi, q.hi);
      if (hi > lo) out.push_back({lo, hi});
    }
  return out;
}

bool inside_image(const BBox& b, const std::vector<BBox>& images) {
  for (const BBox& img : images) {
    const BBox grown{img.x0 - 1, img.y0 - 1, img.x1 + 1, img.y1 + 1};
    if (grown.contains(b)) return true;
  }
  return false;
}

}  // namespace

std::vector<BBox> detect_regions(const pdf::PageModel& page, const Config& cfg) {
  std::vector<std::size_t> free_runs;
  for (std::size_t i = 0; i < page.text_runs.size(); ++i)
    if (!layout::near_any(page.text_runs[i].bbox, page.image_regions, cfg.image_margin))
      free_runs.push_back(i);
  if (free_runs.empty() && page.line_segments.empty()) return {};
  const auto lines = free_runs.empty() ? std::vector<layout::Line>{}
                                       : layout::group_lines(page.text_runs, free_runs);

  std::vector<Rule> rules;
  for (const auto& s : page.line_segments) {
    if (s.orientation != pdf::Orientation::Horizontal) continue;
    if (s.length() < cfg.rule_page_fraction * page.width) continue;
    if (inside_image(s.bbox(), page.image_regions)) continue;
    rules.push_back({s.midpoint().y, std::min(s.start.x, s.end.x), std::max(s.start.x, s.end.x)});
  }
  std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) { return a.y < b.y; });

  // A prose line or a caption between two rules ends a table.
  auto blocked = [&](const Rule& a, const Rule& b) {
    const double shorter = std::min(a.length(), b.length());
    const double overlap = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    if (overlap < 0.5 * shorter) return true;
    for (const auto& line : lines) {
      const double cy = line.box.center().y;
      if (cy <= a.y || cy >= b.y) continue;
      if (is_caption(layout::line_text(page.text_runs, line))) return true;
      if (gutters(page, line).empty() && line.box.width() > 0.5 * shorter) return true;
    }
    return false;
  };

  std::vector<BBox> ruled;
  std::vector<Rule> group;
  auto flush = [&] {
    if (group.size() >= 2) {
      BBox box{group[0].x0, group[0].y, group[0].x1, group[0].y};
      for (const Rule& r : group) box = box.united({r.x0, r.y, r.x1, r.y});
      const BBox zone{box.x0 - 3, box.y0 - 3, box.x1 + 3, box.y1 + 3};
      for (const auto& s : page.line_segments) {
        if (s.orientation != pdf::Orientation::Vertical) continue;
        const BBox sb = s.bbox();
        if (sb.x0 >= zone.x0 && sb.x1 <= zone.x1 && sb.y1 >= zone.y0 && sb.y0 <= zone.y1)
          box = box.united(sb);
      }
      ruled.push_back(box);
    }
    group.clear();
  };
  for (const Rule& r : rules) {
    if (!group.empty() && blocked(group.back(), r)) flush();
    group.push_back(r);
  }
  flush();

  // Unruled: consecutive lines sharing at least one column gutter.
  std::vector<BBox> unruled;
  std::vector<const layout::Line*> block;
  std::vector<layout::Interval> common;
  auto close_block = [&] {
    if (static_cast<double>(block.size()) >= cfg.unruled_min_lines) {
      BBox box = block.front()->box;
      for (const auto* l : block) box = box.united(l->box);
      unruled.push_back(box);
    }
    block.clear();
    common.clear();
  };
  auto in_ruled = [&](const BBox& b) {
    const Point c = b.center();
    return std::any_of(ruled.begin(), ruled.end(), [&](const BBox& r) {
      return BBox{r.x0 - 2, r.y0 - 2, r.x1 + 2, r.y1 + 2}.contains(c);
    });
  };
  // Lines without gutters (rows with empty cells) may sit inside a block when
  // they stay clear of its gutters and a gutter line follows.
  std::vector<const layout::Line*> pending;
  auto clears = [&](const layout::Line& line) {
    for (std::size_t i : line.runs)
      for (const auto& g : common)
        if (page.text_runs[i].bbox.x0 < g.hi && g.lo < page.text_runs[i].bbox.x1) return false;
    return true;
  };
  auto follows = [&](const layout::Line& line) {
    const auto* prev = pending.empty() ? block.back() : pending.back();
    return line.box.y0 - prev->box.y1 <= 2.5 * prev->box.height();
  };
  for (const auto& line : lines) {
    if (in_ruled(line.box)) {
      pending.clear();
      close_block();
      continue;
    }
    auto g = gutters(page, line);
    if (g.empty()) {
      if (!block.empty() && follows(line) && clears(line)) {
        pending.push_back(&line);
      } else {
        pending.clear();
        close_block();
      }
      continue;
    }
    if (!block.empty()) {
      const auto shared = intersect(common, g);
      if (follows(line) && !shared.empty()) {
        block.insert(block.end(), pending.begin(), pending.end());
        pending.clear();
        block.push_back(&line);
        common = shared;
        continue;
      }
      pending.clear();
      close_block();
    }
    block.push_back(&line);
    common = g;
  }
  close_block();

  std::vector<BBox> all = ruled;
  all.insert(all.end(), unruled.begin(), unruled.end());
  std::stable_sort(all.begin(), all.end(), [](const BBox& a, const BBox& b) {
    return a.y0 != b.y0 ? a.y0 < b.y0 : a.x0 < b.x0;
  });
  std::vector<BBox> out;
  for (const BBox& b : all) {
    const bool clash = std::any_of(out.begin(), out.end(), [&](const BBox& o) {
      return o.intersection(b).area() > 0;
    });
    if (!clash) out.push_back(b.clamped(page.width, page.height));
  }
  return out;
}

}  // namespace docmine::table
