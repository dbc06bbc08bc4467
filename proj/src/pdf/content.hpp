#pragma once

#include "docmine/pdf.hpp"
#include "pdf/document.hpp"

namespace docmine::pdf::detail {

// Runs a page's content stream and collects text runs, rules and image
// placements in top-left page coordinates.
PageModel interpret_page(Document& doc, const PageEntry& entry, int index);

}  // namespace docmine::pdf::detail
