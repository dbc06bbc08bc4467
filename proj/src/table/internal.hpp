#pragma once

#include <vector>

#include "docmine/table.hpp"

namespace docmine::table {

// Grows overlapping spans into their bounding rectangles until pairwise
// disjoint, drops 1x1 spans and sorts.
std::vector<Span> normalize_merges(std::vector<Span> spans);

}  // namespace docmine::table
