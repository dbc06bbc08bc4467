#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "docmine/geometry.hpp"

namespace docmine::pdf {

struct TextRun {
  std::string text;  // UTF-8, whitespace-normalized, never empty
  BBox bbox;
  double font_size = 0.0;

  friend bool operator==(const TextRun&, const TextRun&) = default;
};

enum class Orientation { Horizontal, Vertical, Other };

struct LineSegment {
  Point start;
  Point end;
  double thickness = 0.0;
  Orientation orientation = Orientation::Other;

  double length() const;
  BBox bbox() const;
  Point midpoint() const { return {(start.x + end.x) / 2, (start.y + end.y) / 2}; }

  friend bool operator==(const LineSegment&, const LineSegment&) = default;
};

// Horizontal iff |dy| <= tan(2 deg)*|dx|, vertical symmetrically.
Orientation classify(Point a, Point b);

struct PageModel {
  int page_index = 0;
  double width = 0.0;
  double height = 0.0;
  std::vector<TextRun> text_runs;  // content-stream order
  std::vector<LineSegment> line_segments;
  std::vector<BBox> image_regions;
  // No text layer but raster content covering most of the page; content
  // recognition must go through an OCR client.
  bool image_only = false;

  BBox bounds() const { return {0, 0, width, height}; }

  friend bool operator==(const PageModel&, const PageModel&) = default;
};

struct DocumentSource {
  std::string doc_id;
  std::string filename;
  std::string bytes;
  std::string checksum;  // sha-256, lower-case hex
  int page_count = 0;
};

// Lower-case hex SHA-256 of the bytes.
std::string content_checksum(std::string_view bytes);

DocumentSource make_source(std::string doc_id, std::string filename,
                           std::string bytes);

// Throws MalformedPdf or EncryptedPdf. Sets source.page_count.
std::vector<PageModel> parse_document(DocumentSource& source);
std::vector<PageModel> parse_bytes(std::string_view bytes);

// Sub-model with the geometry whose center lies inside region, re-based to the
// region origin. Throws EmptyRegion for zero-area or non-intersecting regions.
PageModel crop_region(const PageModel& page, const BBox& region);

void to_json(nlohmann::json& j, const TextRun& r);
void from_json(const nlohmann::json& j, TextRun& r);
void to_json(nlohmann::json& j, const LineSegment& s);
void from_json(const nlohmann::json& j, LineSegment& s);
void to_json(nlohmann::json& j, const PageModel& p);
void from_json(const nlohmann::json& j, PageModel& p);

}  // namespace docmine::pdf
