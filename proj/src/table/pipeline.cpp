#include <algorithm>
#include <cmath>

#include "docmine/clock.hpp"
#include "docmine/error.hpp"
#include "docmine/text_util.hpp"
#include "docmine/table.hpp"
#include "layout/layout.hpp"
#include "table/internal.hpp"

namespace docmine::table {

using nlohmann::json;

namespace {

const char* const kStageNames[] = {"Detected",           "RegionConfirmed",
                                   "StructureProposed",  "StructureConfirmed",
                                   "ContentProposed",    "ContentConfirmed"};

[[noreturn]] void invalid_stage(const Artifact& a, const std::string& op) {
  fail(ErrorCode::InvalidStage, op + " not allowed at stage " + stage_name(a.stage),
       {{"stage", stage_name(a.stage)}, {"table_id", a.table_id}});
}

[[noreturn]] void invalid_edit(const std::string& msg) { fail(ErrorCode::InvalidEdit, msg); }

void check_region(const pdf::PageModel& page, const BBox& r) {
  if (!r.valid() || r.area() <= 0) fail(ErrorCode::EmptyRegion, "region has zero area");
  const double eps = 1e-6;
  if (r.x0 < -eps || r.y0 < -eps || r.x1 > page.width + eps || r.y1 > page.height + eps)
    fail(ErrorCode::RegionOutOfPage, "region lies outside the page",
         {{"region", r}, {"page", page.bounds()}});
}

std::string cell_source_name(CellSource s) {
  switch (s) {
    case CellSource::TextLayer: return "text-layer";
    case CellSource::OcrClient: return "ocr-client";
    case CellSource::Manual: return "manual";
  }
  return "manual";
}

// Inserts bound v strictly between the ends, returning its index.
std::size_t insert_bound(std::vector<double>& bounds, double v) {
  if (!std::isfinite(v) || v <= bounds.front() || v >= bounds.back())
    invalid_edit("bound must lie strictly inside the grid");
  const auto it = std::lower_bound(bounds.begin(), bounds.end(), v);
  if (*it == v) invalid_edit("bound already exists");
  const auto pos = static_cast<std::size_t>(it - bounds.begin());
  bounds.insert(it, v);
  return pos;
}

}  // namespace

std::string stage_name(Stage s) { return kStageNames[static_cast<int>(s)]; }

Stage parse_stage(std::string_view name) {
  for (int i = 0; i < 6; ++i)
    if (name == kStageNames[i]) return static_cast<Stage>(i);
  fail(ErrorCode::ValidationError, "unknown stage: " + std::string(name));
}

// --- grid --------------------------------------------------------------------

Span Grid::logical(int r, int c) const {
  for (const Span& m : merges)
    if (m.contains(r, c)) return m;
  return {r, c, r, c};
}

std::vector<Span> Grid::logical_cells() const {
  std::vector<Span> out;
  for (int r = 0; r < rows(); ++r)
    for (int c = 0; c < cols(); ++c) {
      const Span s = logical(r, c);
      if (s.r0 == r && s.c0 == c) out.push_back(s);
    }
  return out;
}

void Grid::validate() const {
  auto increasing = [](const std::vector<double>& v) {
    if (v.size() < 2) return false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) return false;
      if (i && !(v[i] > v[i - 1])) return false;
    }
    return true;
  };
  if (!increasing(row_bounds)) invalid_edit("row bounds must be strictly increasing (>= 2)");
  if (!increasing(col_bounds)) invalid_edit("column bounds must be strictly increasing (>= 2)");
  for (std::size_t i = 0; i < merges.size(); ++i) {
    const Span& m = merges[i];
    if (m.r0 < 0 || m.c0 < 0 || m.r1 >= rows() || m.c1 >= cols() || m.r0 > m.r1 || m.c0 > m.c1)
      invalid_edit("merge outside the grid");
    if (m.r0 == m.r1 && m.c0 == m.c1) invalid_edit("merge covers a single cell");
    for (std::size_t j = i + 1; j < merges.size(); ++j)
      if (m.overlaps(merges[j])) invalid_edit("merges overlap");
  }
}

Grid apply_edit(const Grid& grid, const StructureEdit& edit) {
  Grid g = grid;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, AddRow> || std::is_same_v<T, AddCol>) {
          constexpr bool row = std::is_same_v<T, AddRow>;
          auto& bounds = row ? g.row_bounds : g.col_bounds;
          double v;
          if constexpr (row) v = e.y;
          else v = e.x;
          // The split row/column is p-1; spans covering it grow by one.
          const int p = static_cast<int>(insert_bound(bounds, v));
          for (Span& m : g.merges) {
            int& lo = row ? m.r0 : m.c0;
            int& hi = row ? m.r1 : m.c1;
            if (lo > p - 1) {
              ++lo;
              ++hi;
            } else if (hi >= p - 1) {
              ++hi;
            }
          }
        } else if constexpr (std::is_same_v<T, DeleteRow> || std::is_same_v<T, DeleteCol>) {
          constexpr bool row = std::is_same_v<T, DeleteRow>;
          auto& bounds = row ? g.row_bounds : g.col_bounds;
          const int n = static_cast<int>(bounds.size()) - 1;
          if (n < 2) invalid_edit("cannot delete the only row or column");
          if (e.index < 0 || e.index >= n) invalid_edit("index out of range");
          // The deleted row or column is absorbed by its successor, or by its
          // predecessor when it is the last one.
          const int b = e.index < n - 1 ? e.index + 1 : e.index;
          bounds.erase(bounds.begin() + b);
          for (Span& m : g.merges) {
            int& lo = row ? m.r0 : m.c0;
            int& hi = row ? m.r1 : m.c1;
            if (lo >= b) --lo;
            if (hi >= b) --hi;
          }
          g.merges = normalize_merges(g.merges);
        } else if constexpr (std::is_same_v<T, Merge>) {
          const Span& s = e.span;
          if (s.r0 < 0 || s.c0 < 0 || s.r1 >= g.rows() || s.c1 >= g.cols() || s.r0 > s.r1 ||
              s.c0 > s.c1)
            invalid_edit("merge outside the grid");
          if (s.r0 == s.r1 && s.c0 == s.c1) invalid_edit("merge covers a single cell");
          for (const Span& m : g.merges)
            if (m.overlaps(s)) invalid_edit("merge overlaps an existing merge");
          g.merges.push_back(s);
          std::sort(g.merges.begin(), g.merges.end());
        } else {
          const auto it = std::find_if(g.merges.begin(), g.merges.end(), [&](const Span& m) {
            return m.r0 == e.row && m.c0 == e.col;
          });
          if (it == g.merges.end()) invalid_edit("no merged cell starts at that position");
          g.merges.erase(it);
        }
      },
      edit);
  g.validate();
  return g;
}

// --- content -----------------------------------------------------------------

Span assign_cell(const Grid& grid, const BBox& run) {
  const BBox outer{grid.col_bounds.front(), grid.row_bounds.front(), grid.col_bounds.back(),
                   grid.row_bounds.back()};
  Point c = run.center();
  c.x = std::clamp(c.x, outer.x0, outer.x1);
  c.y = std::clamp(c.y, outer.y0, outer.y1);

  auto hits = [](const std::vector<double>& b, double v) {
    std::vector<int> out;
    for (int i = 0; i + 1 < static_cast<int>(b.size()); ++i)
      if (v >= b[i] && v <= b[i + 1]) out.push_back(i);
    return out;
  };
  std::vector<Span> candidates;
  for (int r : hits(grid.row_bounds, c.y))
    for (int col : hits(grid.col_bounds, c.x)) {
      const Span s = grid.logical(r, col);
      if (std::find(candidates.begin(), candidates.end(), s) == candidates.end())
        candidates.push_back(s);
    }
  Span best = candidates.front();
  double best_area = -1.0;
  for (const Span& s : candidates) {
    const double area = run.intersection(grid.span_box(s)).area();
    if (area > best_area || (area == best_area && std::pair(s.r0, s.c0) < std::pair(best.r0, best.c0))) {
      best = s;
      best_area = area;
    }
  }
  return best;
}

std::vector<Cell> recognize_content(const pdf::PageModel& page, const BBox& region,
                                    const Grid& grid) {
  const auto cells = grid.logical_cells();
  std::vector<std::vector<std::string>> parts(cells.size());
  for (std::size_t i : layout::runs_in(page, region)) {
    const Span s = assign_cell(grid, page.text_runs[i].bbox);
    const auto k = std::find(cells.begin(), cells.end(), s) - cells.begin();
    parts[static_cast<std::size_t>(k)].push_back(page.text_runs[i].text);
  }
  std::vector<Cell> out;
  for (std::size_t k = 0; k < cells.size(); ++k)
    out.push_back({cells[k].r0, cells[k].c0, text::join(parts[k], " "), CellSource::TextLayer,
                   false});
  return out;
}

// --- staged operations ---------------------------------------------------------

const Cell* Artifact::cell(int row, int col) const {
  if (!cells) return nullptr;
  for (const Cell& c : *cells)
    if (c.row == row && c.col == col) return &c;
  return nullptr;
}

std::vector<Artifact> detect(const pdf::PageModel& page, const std::string& doc_id,
                             const Config& cfg) {
  std::vector<Artifact> out;
  for (const BBox& r : detect_regions(page, cfg)) {
    Artifact a;
    a.doc_id = doc_id;
    a.page_index = page.page_index;
    a.region = r;
    out.push_back(a);
  }
  return out;
}

Artifact manual_artifact(const pdf::PageModel& page, const std::string& doc_id,
                         const BBox& region) {
  check_region(page, region);
  Artifact a;
  a.doc_id = doc_id;
  a.page_index = page.page_index;
  a.region = region;
  return a;
}

std::optional<Correction> confirm_region(Artifact& a, const pdf::PageModel& page,
                                         const BBox& region) {
  if (a.stage == Stage::RegionConfirmed && a.region == region) return std::nullopt;
  if (a.stage != Stage::Detected) invalid_stage(a, "confirm_region");
  check_region(page, region);
  std::optional<Correction> log;
  if (!(region == a.region))
    log = Correction{"table", stage_name(a.stage), "confirm_region", a.region, region};
  a.region = region;
  a.stage = Stage::RegionConfirmed;
  return log;
}

void propose_structure(Artifact& a, const pdf::PageModel& page, const Config& cfg) {
  if (a.stage != Stage::RegionConfirmed) invalid_stage(a, "recognize_structure");
  a.grid = recognize_structure(page, a.region, cfg);
  a.stage = Stage::StructureProposed;
}

std::optional<Correction> edit_structure(Artifact& a, const StructureEdit& edit) {
  if (a.stage != Stage::StructureProposed && a.stage != Stage::StructureConfirmed)
    invalid_stage(a, "edit_structure");
  Grid next = apply_edit(*a.grid, edit);
  Correction log{"table", stage_name(a.stage), "edit_structure",
                 json{{"grid", *a.grid}},
                 json{{"edit", edit_to_json(edit)}, {"grid", next}}};
  a.grid = std::move(next);
  a.stage = Stage::StructureProposed;
  a.cells.reset();
  return log;
}

void confirm(Artifact& a, Stage target) {
  if (a.stage == target &&
      (target == Stage::StructureConfirmed || target == Stage::ContentConfirmed))
    return;
  if (target == Stage::StructureConfirmed && a.stage == Stage::StructureProposed) {
    a.grid->validate();
    a.stage = target;
    return;
  }
  if (target == Stage::ContentConfirmed && a.stage == Stage::ContentProposed) {
    for (const Span& s : a.grid->logical_cells())
      if (!a.cell(s.r0, s.c0)) fail(ErrorCode::ValidationError, "cell content incomplete");
    a.stage = target;
    return;
  }
  invalid_stage(a, "confirm " + stage_name(target));
}

void propose_content(Artifact& a, const pdf::PageModel& page, const OcrFn& ocr) {
  if (a.stage != Stage::StructureConfirmed) invalid_stage(a, "recognize_content");
  if (page.image_only) {
    if (!ocr)
      fail(ErrorCode::OcrClientUnavailable, "image-only page needs an OCR client",
           {{"page_index", page.page_index}});
    std::vector<Cell> cells;
    for (const Span& s : a.grid->logical_cells())
      cells.push_back({s.r0, s.c0, text::collapse_whitespace(ocr(a.page_index, a.grid->span_box(s))),
                       CellSource::OcrClient, false});
    a.cells = std::move(cells);
  } else {
    a.cells = recognize_content(page, a.region, *a.grid);
  }
  a.stage = Stage::ContentProposed;
}

std::optional<Correction> edit_cell(Artifact& a, int row, int col, const std::string& text) {
  if (a.stage != Stage::ContentProposed) invalid_stage(a, "edit_cell");
  Cell* target = nullptr;
  for (Cell& c : *a.cells)
    if (c.row == row && c.col == col) target = &c;
  if (!target)
    fail(ErrorCode::UnknownCell, "no logical cell at that position", {{"row", row}, {"col", col}});
  if (target->text == text) return std::nullopt;
  Correction log{"table", stage_name(a.stage), "edit_cell",
                 json{{"row", row}, {"col", col}, {"text", target->text}},
                 json{{"row", row}, {"col", col}, {"text", text}}};
  target->text = text;
  target->source = CellSource::Manual;
  target->edited = true;
  return log;
}

void revert(Artifact& a, Stage target) {
  if (static_cast<int>(target) >= static_cast<int>(a.stage)) invalid_stage(a, "revert");
  if (target < Stage::ContentProposed) a.cells.reset();
  if (target < Stage::StructureProposed) a.grid.reset();
  if (target < Stage::ContentConfirmed) a.confirmed_at.reset();
  a.stage = target;
}

std::vector<std::vector<std::string>> value_grid(const Artifact& a) {
  if (!a.grid || !a.cells) return {};
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(a.grid->rows()),
                                            std::vector<std::string>(a.grid->cols()));
  for (int r = 0; r < a.grid->rows(); ++r)
    for (int c = 0; c < a.grid->cols(); ++c) {
      const Span s = a.grid->logical(r, c);
      if (const Cell* cell = a.cell(s.r0, s.c0)) out[r][c] = cell->text;
    }
  return out;
}

// --- json --------------------------------------------------------------------

void to_json(json& j, const Span& s) { j = json::array({s.r0, s.c0, s.r1, s.c1}); }

void from_json(const json& j, Span& s) {
  if (!j.is_array() || j.size() != 4) fail(ErrorCode::ValidationError, "span must be [r0,c0,r1,c1]");
  s = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

void to_json(json& j, const Grid& g) {
  j = {{"row_bounds", g.row_bounds}, {"col_bounds", g.col_bounds}, {"merges", g.merges}};
}

void from_json(const json& j, Grid& g) {
  g.row_bounds = j.at("row_bounds").get<std::vector<double>>();
  g.col_bounds = j.at("col_bounds").get<std::vector<double>>();
  g.merges = j.value("merges", json::array()).get<std::vector<Span>>();
}

void to_json(json& j, const Cell& c) {
  j = {{"row", c.row}, {"col", c.col}, {"text", c.text},
       {"source", cell_source_name(c.source)}, {"edited", c.edited}};
}

void from_json(const json& j, Cell& c) {
  c.row = j.at("row").get<int>();
  c.col = j.at("col").get<int>();
  c.text = j.at("text").get<std::string>();
  const std::string src = j.value("source", "text-layer");
  c.source = src == "ocr-client" ? CellSource::OcrClient
             : src == "manual"   ? CellSource::Manual
                                 : CellSource::TextLayer;
  c.edited = j.value("edited", false);
}

void to_json(json& j, const Artifact& a) {
  j = {{"table_id", a.table_id},
       {"doc_id", a.doc_id},
       {"page_index", a.page_index},
       {"region", a.region},
       {"stage", stage_name(a.stage)},
       {"grid", a.grid ? json(*a.grid) : json(nullptr)},
       {"cells", a.cells ? json(*a.cells) : json(nullptr)},
       {"created_at", iso8601(a.created_at)},
       {"updated_at", iso8601(a.updated_at)},
       {"confirmed_at", a.confirmed_at ? json(iso8601(*a.confirmed_at)) : json(nullptr)}};
}

void from_json(const json& j, Artifact& a) {
  a.table_id = j.at("table_id").get<std::string>();
  a.doc_id = j.at("doc_id").get<std::string>();
  a.page_index = j.at("page_index").get<int>();
  a.region = j.at("region").get<BBox>();
  a.stage = parse_stage(j.at("stage").get<std::string>());
  a.grid.reset();
  a.cells.reset();
  a.confirmed_at.reset();
  if (!j.at("grid").is_null()) a.grid = j.at("grid").get<Grid>();
  if (!j.at("cells").is_null()) a.cells = j.at("cells").get<std::vector<Cell>>();
  a.created_at = parse_iso8601(j.at("created_at").get<std::string>());
  a.updated_at = parse_iso8601(j.at("updated_at").get<std::string>());
  if (j.contains("confirmed_at") && !j["confirmed_at"].is_null())
    a.confirmed_at = parse_iso8601(j["confirmed_at"].get<std::string>());
}

StructureEdit parse_edit(const json& j) {
  try {
    const std::string op = j.at("op").get<std::string>();
    if (op == "add_row") return AddRow{j.at("y").get<double>()};
    if (op == "add_col") return AddCol{j.at("x").get<double>()};
    if (op == "delete_row") return DeleteRow{j.at("index").get<int>()};
    if (op == "delete_col") return DeleteCol{j.at("index").get<int>()};
    if (op == "merge") return Merge{j.at("span").get<Span>()};
    if (op == "split") return Split{j.at("row").get<int>(), j.at("col").get<int>()};
    fail(ErrorCode::ValidationError, "unknown structure edit: " + op);
  } catch (const json::exception& e) {
    fail(ErrorCode::ValidationError, std::string("bad structure edit: ") + e.what());
  }
}

json edit_to_json(const StructureEdit& e) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AddRow>) return {{"op", "add_row"}, {"y", v.y}};
        else if constexpr (std::is_same_v<T, AddCol>) return {{"op", "add_col"}, {"x", v.x}};
        else if constexpr (std::is_same_v<T, DeleteRow>) return {{"op", "delete_row"}, {"index", v.index}};
        else if constexpr (std::is_same_v<T, DeleteCol>) return {{"op", "delete_col"}, {"index", v.index}};
        else if constexpr (std::is_same_v<T, Merge>) return {{"op", "merge"}, {"span", v.span}};
        else return {{"op", "split"}, {"row", v.row}, {"col", v.col}};
      },
      e);
}

}  // namespace docmine::table
