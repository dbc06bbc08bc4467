#pragma once

#include <string>
#include <utility>
#include <vector>

#include "docmine/pdf.hpp"

namespace docmine::layout {

// A visual line: runs that share a vertical band, ordered left to right.
struct Line {
  std::vector<std::size_t> runs;  // indices into the page's text_runs
  BBox box;
  double font_size = 0.0;  // largest run size on the line
};

// Groups the given runs (all runs when subset is empty) into lines ordered top
// to bottom. Two runs share a line when their vertical overlap is at least half
// the smaller height.
std::vector<Line> group_lines(const std::vector<pdf::TextRun>& runs,
                              const std::vector<std::size_t>& subset = {});

// Runs of a line joined with single spaces.
std::string line_text(const std::vector<pdf::TextRun>& runs, const Line& line);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Uncovered gaps of the union of intervals, strictly between the first and the
// last covered point.
std::vector<Interval> projection_gaps(std::vector<Interval> spans);

// Sorted positions merged greedily while neighbors are within tol; each
// cluster is represented by its mean.
std::vector<double> cluster_positions(std::vector<double> values, double tol);

// Indices of runs whose center lies in the box (closed).
std::vector<std::size_t> runs_in(const pdf::PageModel& page, const BBox& box);

bool near_any(const BBox& b, const std::vector<BBox>& boxes, double dist);

}  // namespace docmine::layout
