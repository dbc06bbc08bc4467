#include "layout/layout.hpp"

#include <algorithm>
#include <numeric>

namespace docmine::layout {

std::vector<Line> group_lines(const std::vector<pdf::TextRun>& runs,
                              const std::vector<std::size_t>& subset) {
  std::vector<std::size_t> idx = subset;
  if (idx.empty()) {
    idx.resize(runs.size());
    std::iota(idx.begin(), idx.end(), 0);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return runs[a].bbox.center().y < runs[b].bbox.center().y;
  });

  std::vector<Line> lines;
  for (std::size_t i : idx) {
    const BBox& b = runs[i].bbox;
    bool placed = false;
    // Only the most recent lines can overlap a run sorted by center.
    for (std::size_t k = lines.size(); k-- > 0 && k + 3 >= lines.size();) {
      Line& line = lines[k];
      const double overlap = std::min(line.box.y1, b.y1) - std::max(line.box.y0, b.y0);
      const double smaller = std::min(line.box.height(), b.height());
      if (overlap >= 0.5 * smaller && smaller > 0) {
        line.runs.push_back(i);
        line.box = line.box.united(b);
        line.font_size = std::max(line.font_size, runs[i].font_size);
        placed = true;
        break;
      }
    }
    if (!placed) lines.push_back({{i}, b, runs[i].font_size});
  }
  for (Line& line : lines)
    std::stable_sort(line.runs.begin(), line.runs.end(), [&](std::size_t a, std::size_t b) {
      return runs[a].bbox.x0 < runs[b].bbox.x0;
    });
  std::stable_sort(lines.begin(), lines.end(),
                   [](const Line& a, const Line& b) { return a.box.y0 < b.box.y0; });
  return lines;
}

std::string line_text(const std::vector<pdf::TextRun>& runs, const Line& line) {
  std::string out;
  for (std::size_t i : line.runs) {
    if (!out.empty()) out.push_back(' ');
    out += runs[i].text;
  }
  return out;
}

std::vector<Interval> projection_gaps(std::vector<Interval> spans) {
  std::sort(spans.begin(), spans.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> gaps;
  if (spans.empty()) return gaps;
  double reach = spans.front().hi;
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].lo > reach) gaps.push_back({reach, spans[i].lo});
    reach = std::max(reach, spans[i].hi);
  }
  return gaps;
}

std::vector<double> cluster_positions(std::vector<double> values, double tol) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= values.size(); ++i) {
    if (i == values.size() || values[i] - values[i - 1] > tol) {
      double sum = 0.0;
      for (std::size_t k = start; k < i; ++k) sum += values[k];
      if (i > start) out.push_back(sum / static_cast<double>(i - start));
      start = i;
    }
  }
  return out;
}

std::vector<std::size_t> runs_in(const pdf::PageModel& page, const BBox& box) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < page.text_runs.size(); ++i)
    if (box.contains(page.text_runs[i].bbox.center())) out.push_back(i);
  return out;
}

bool near_any(const BBox& b, const std::vector<BBox>& boxes, double dist) {
  return std::any_of(boxes.begin(), boxes.end(),
                     [&](const BBox& o) { return box_distance(b, o) <= dist; });
}

}  // namespace docmine::layout
