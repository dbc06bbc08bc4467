#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "docmine/correction.hpp"
#include "docmine/geometry.hpp"
#include "docmine/pdf.hpp"

namespace docmine::table {

enum class Stage {
  Detected,
  RegionConfirmed,
  StructureProposed,
  StructureConfirmed,
  ContentProposed,
  ContentConfirmed,
};

std::string stage_name(Stage s);
Stage parse_stage(std::string_view name);  // ValidationError on unknown names

// Inclusive cell rectangle.
struct Span {
  int r0 = 0, c0 = 0, r1 = 0, c1 = 0;

  bool contains(int r, int c) const { return r >= r0 && r <= r1 && c >= c0 && c <= c1; }
  bool overlaps(const Span& o) const {
    return r0 <= o.r1 && o.r0 <= r1 && c0 <= o.c1 && o.c0 <= c1;
  }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct Grid {
  std::vector<double> row_bounds;  // strictly increasing y
  std::vector<double> col_bounds;  // strictly increasing x
  std::vector<Span> merges;        // sorted, pairwise disjoint, never 1x1

  int rows() const { return static_cast<int>(row_bounds.size()) - 1; }
  int cols() const { return static_cast<int>(col_bounds.size()) - 1; }
  BBox cell_box(int r, int c) const {
    return {col_bounds[c], row_bounds[r], col_bounds[c + 1], row_bounds[r + 1]};
  }
  BBox span_box(const Span& s) const {
    return {col_bounds[s.c0], row_bounds[s.r0], col_bounds[s.c1 + 1], row_bounds[s.r1 + 1]};
  }
  // Logical cell covering (r, c): its merge, or the 1x1 span.
  Span logical(int r, int c) const;
  // Every logical cell in row-major order of top-left corners.
  std::vector<Span> logical_cells() const;

  // Throws InvalidEdit when an invariant does not hold.
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

enum class CellSource { TextLayer, OcrClient, Manual };

struct Cell {
  int row = 0;  // top-left of the logical cell
  int col = 0;
  std::string text;
  CellSource source = CellSource::TextLayer;
  bool edited = false;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Artifact {
  std::string table_id;
  std::string doc_id;
  int page_index = 0;
  BBox region;
  Stage stage = Stage::Detected;
  std::optional<Grid> grid;
  std::optional<std::vector<Cell>> cells;
  std::int64_t created_at = 0;  // ms since epoch, UTC
  std::int64_t updated_at = 0;
  std::optional<std::int64_t> confirmed_at;  // set on ContentConfirmed

  const Cell* cell(int row, int col) const;

  friend bool operator==(const Artifact&, const Artifact&) = default;
};

struct Config {
  double rule_page_fraction = 0.4;   // ruled-table rule length / page width
  double separator_merge = 3.0;      // pt
  double gap_factor = 1.5;           // x separator gap vs median word gap
  double merge_crossing = 0.5;       // crossing depth vs run height
  double unruled_min_lines = 3;
  double image_margin = 12.0;        // runs this close to an image are ignored
};

// Pure geometric proposals.
std::vector<BBox> detect_regions(const pdf::PageModel& page, const Config& cfg = {});
Grid recognize_structure(const pdf::PageModel& page, const BBox& region, const Config& cfg = {});
// One cell per logical cell, from the runs whose center lies in region.
std::vector<Cell> recognize_content(const pdf::PageModel& page, const BBox& region,
                                    const Grid& grid);

// Logical cell a run box is assigned to: the cell containing its center,
// ties by overlap area, then topmost-leftmost. Centers outside the grid are
// clamped onto it.
Span assign_cell(const Grid& grid, const BBox& run);

// Text for a crop of an image-only page.
using OcrFn = std::function<std::string(int page_index, const BBox& crop)>;

// Staged operations. Each returns the correction to log, if any.
std::vector<Artifact> detect(const pdf::PageModel& page, const std::string& doc_id,
                             const Config& cfg = {});
Artifact manual_artifact(const pdf::PageModel& page, const std::string& doc_id,
                         const BBox& region);
std::optional<Correction> confirm_region(Artifact& a, const pdf::PageModel& page,
                                         const BBox& region);
void propose_structure(Artifact& a, const pdf::PageModel& page, const Config& cfg = {});

struct AddRow { double y; };
struct AddCol { double x; };
struct DeleteRow { int index; };
struct DeleteCol { int index; };
struct Merge { Span span; };
struct Split { int row; int col; };
using StructureEdit = std::variant<AddRow, AddCol, DeleteRow, DeleteCol, Merge, Split>;

// Pure edit on a grid; throws InvalidEdit.
Grid apply_edit(const Grid& grid, const StructureEdit& edit);
std::optional<Correction> edit_structure(Artifact& a, const StructureEdit& edit);

// Advances StructureProposed -> StructureConfirmed or ContentProposed ->
// ContentConfirmed. Repeating a confirm already reached is a no-op.
void confirm(Artifact& a, Stage target);

void propose_content(Artifact& a, const pdf::PageModel& page, const OcrFn& ocr = {});
std::optional<Correction> edit_cell(Artifact& a, int row, int col, const std::string& text);

// Moves to a strictly earlier stage and drops the data that stage does not own.
void revert(Artifact& a, Stage target);

// Row-major value grid with merged spans repeated on every covered position.
std::vector<std::vector<std::string>> value_grid(const Artifact& a);

void to_json(nlohmann::json& j, const Span& s);
void from_json(const nlohmann::json& j, Span& s);
void to_json(nlohmann::json& j, const Grid& g);
void from_json(const nlohmann::json& j, Grid& g);
void to_json(nlohmann::json& j, const Cell& c);
void from_json(const nlohmann::json& j, Cell& c);
void to_json(nlohmann::json& j, const Artifact& a);
void from_json(const nlohmann::json& j, Artifact& a);
StructureEdit parse_edit(const nlohmann::json& j);  // ValidationError
nlohmann::json edit_to_json(const StructureEdit& e);

}  // namespace docmine::table
