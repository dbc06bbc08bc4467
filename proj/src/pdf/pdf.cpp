#include "docmine/pdf.hpp"

#include <sodium.h>

#include <cmath>
#include <numbers>

#include "docmine/error.hpp"
#include "pdf/content.hpp"
#include "pdf/document.hpp"

namespace docmine::pdf {

namespace {
const double kOrientationTolerance = std::tan(2.0 * std::numbers::pi / 180.0);
}

Orientation classify(Point a, Point b) {
  const double dx = std::abs(b.x - a.x);
  const double dy = std::abs(b.y - a.y);
  if (dy <= kOrientationTolerance * dx) return Orientation::Horizontal;
  if (dx <= kOrientationTolerance * dy) return Orientation::Vertical;
  return Orientation::Other;
}

double LineSegment::length() const { return std::hypot(end.x - start.x, end.y - start.y); }

BBox LineSegment::bbox() const { return BBox::from_points(start.x, start.y, end.x, end.y); }

std::string content_checksum(std::string_view bytes) {
  if (sodium_init() < 0) fail(ErrorCode::Internal, "libsodium unavailable");
  unsigned char digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(digest, reinterpret_cast<const unsigned char*>(bytes.data()),
                     bytes.size());
  char hex[crypto_hash_sha256_BYTES * 2 + 1];
  sodium_bin2hex(hex, sizeof(hex), digest, sizeof(digest));
  return hex;
}

DocumentSource make_source(std::string doc_id, std::string filename, std::string bytes) {
  DocumentSource s;
  s.doc_id = std::move(doc_id);
  s.filename = std::move(filename);
  s.checksum = content_checksum(bytes);
  s.bytes = std::move(bytes);
  return s;
}

std::vector<PageModel> parse_bytes(std::string_view bytes) {
  detail::Document doc(bytes);
  std::vector<PageModel> pages;
  pages.reserve(doc.pages().size());
  int index = 0;
  for (const detail::PageEntry& entry : doc.pages())
    pages.push_back(detail::interpret_page(doc, entry, index++));
  return pages;
}

std::vector<PageModel> parse_document(DocumentSource& source) {
  auto pages = parse_bytes(source.bytes);
  source.page_count = static_cast<int>(pages.size());
  return pages;
}

PageModel crop_region(const PageModel& page, const BBox& region) {
  if (!region.valid() || region.area() <= 0.0)
    fail(ErrorCode::EmptyRegion, "crop region has zero area");
  if (!region.intersects(page.bounds()))
    fail(ErrorCode::EmptyRegion, "crop region does not intersect the page");

  PageModel out;
  out.page_index = page.page_index;
  out.width = region.width();
  out.height = region.height();
  const double dx = -region.x0;
  const double dy = -region.y0;
  auto clamp_pt = [&](Point p) {
    return Point{std::clamp(p.x + dx, 0.0, out.width), std::clamp(p.y + dy, 0.0, out.height)};
  };
  for (const TextRun& r : page.text_runs) {
    if (!region.contains(r.bbox.center())) continue;
    TextRun c = r;
    c.bbox = r.bbox.translated(dx, dy).clamped(out.width, out.height);
    out.text_runs.push_back(std::move(c));
  }
  for (const LineSegment& s : page.line_segments) {
    if (!region.contains(s.midpoint())) continue;
    LineSegment c = s;
    c.start = clamp_pt(s.start);
    c.end = clamp_pt(s.end);
    c.orientation = classify(c.start, c.end);
    out.line_segments.push_back(c);
  }
  for (const BBox& b : page.image_regions) {
    if (!region.contains(b.center())) continue;
    out.image_regions.push_back(b.translated(dx, dy).clamped(out.width, out.height));
  }
  out.image_only = out.text_runs.empty() && page.image_only;
  return out;
}

namespace {
const char* orientation_name(Orientation o) {
  switch (o) {
    case Orientation::Horizontal: return "horizontal";
    case Orientation::Vertical: return "vertical";
    default: return "other";
  }
}
Orientation orientation_from(const std::string& s) {
  if (s == "horizontal") return Orientation::Horizontal;
  if (s == "vertical") return Orientation::Vertical;
  return Orientation::Other;
}
}  // namespace

void to_json(nlohmann::json& j, const TextRun& r) {
  j = {{"text", r.text}, {"bbox", r.bbox}, {"font_size", r.font_size}};
}
void from_json(const nlohmann::json& j, TextRun& r) {
  r.text = j.at("text").get<std::string>();
  r.bbox = j.at("bbox").get<BBox>();
  r.font_size = j.at("font_size").get<double>();
}
void to_json(nlohmann::json& j, const LineSegment& s) {
  j = {{"start", s.start},
       {"end", s.end},
       {"thickness", s.thickness},
       {"orientation", orientation_name(s.orientation)}};
}
void from_json(const nlohmann::json& j, LineSegment& s) {
  s.start = j.at("start").get<Point>();
  s.end = j.at("end").get<Point>();
  s.thickness = j.value("thickness", 0.0);
  s.orientation = orientation_from(j.value("orientation", std::string("other")));
}
void to_json(nlohmann::json& j, const PageModel& p) {
  j = {{"page_index", p.page_index},       {"width", p.width},
       {"height", p.height},               {"text_runs", p.text_runs},
       {"line_segments", p.line_segments}, {"image_regions", p.image_regions},
       {"image_only", p.image_only}};
}
void from_json(const nlohmann::json& j, PageModel& p) {
  p.page_index = j.at("page_index").get<int>();
  p.width = j.at("width").get<double>();
  p.height = j.at("height").get<double>();
  p.text_runs = j.at("text_runs").get<std::vector<TextRun>>();
  p.line_segments = j.at("line_segments").get<std::vector<LineSegment>>();
  p.image_regions = j.at("image_regions").get<std::vector<BBox>>();
  p.image_only = j.value("image_only", false);
}

}  // namespace docmine::pdf
