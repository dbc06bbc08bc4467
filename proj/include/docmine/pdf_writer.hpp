#pragma once

#include <string>
#include <string_view>
#include <deque>
#include <vector>

#include "docmine/pdf.hpp"

namespace docmine::pdf {

// Minimal PDF producer used for the fixture corpus. Draws Helvetica text
// (WinAnsi plus prime/double-prime), stroked rules and placed images, and
// reports the geometry it drew in the same page model the parser produces.
class PdfWriter {
 public:
  struct Options {
    bool compress = true;
    bool mark_encrypted = false;  // adds an /Encrypt entry (test input only)
  };

  class Page {
   public:
    // baseline_y is measured from the top of the page.
    TextRun text(double x, double baseline_y, double size, std::string_view utf8);
    LineSegment line(Point a, Point b, double width = 0.5);
    BBox image(const BBox& where);

    const PageModel& truth() const { return truth_; }

   private:
    friend class PdfWriter;
    Page(double w, double h, int index);
    std::string content_;
    PageModel truth_;
  };

  PdfWriter();
  explicit PdfWriter(Options opts);

  Page& add_page(double width = 612, double height = 792);
  std::size_t page_count() const { return pages_.size(); }
  Page& page(std::size_t i) { return pages_[i]; }

  std::string finish() const;

  // Width of a UTF-8 string in points at the given size, using the writer's
  // font metrics.
  static double text_width(std::string_view utf8, double size);

 private:
  Options opts_;
  std::deque<Page> pages_;  // stable references across add_page
};

}  // namespace docmine::pdf
