#include <gtest/gtest.h>

#include <random>

#include "docmine/error.hpp"
#include "docmine/fixtures.hpp"
#include "docmine/pdf_writer.hpp"
#include "docmine/table.hpp"

using namespace docmine;
using namespace docmine::table;
using nlohmann::json;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

bool bounds_close(const std::vector<double>& a, const json& b, double tol) {
  const auto want = b.get<std::vector<double>>();
  if (a.size() != want.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - want[i]) > tol) return false;
  return true;
}

struct Fixture1 {
  fixtures::Fixture fx = fixtures::generate(0);
  std::vector<pdf::PageModel> pages = pdf::parse_bytes(fx.pdf);
  const json& table(int i) const { return fx.sidecar["tables"][i]; }
  const pdf::PageModel& page_of(int i) const { return pages[table(i)["page"].get<int>()]; }
};

Grid grid_of(std::vector<double> rows, std::vector<double> cols, std::vector<Span> merges = {}) {
  Grid g;
  g.row_bounds = std::move(rows);
  g.col_bounds = std::move(cols);
  g.merges = std::move(merges);
  return g;
}

// Reference assignment: scan every logical cell.
Span brute_force_assign(const Grid& g, const BBox& run) {
  Point c = run.center();
  c.x = std::clamp(c.x, g.col_bounds.front(), g.col_bounds.back());
  c.y = std::clamp(c.y, g.row_bounds.front(), g.row_bounds.back());
  Span best{-1, -1, -1, -1};
  double best_area = -1;
  for (const Span& s : g.logical_cells()) {
    const BBox box = g.span_box(s);
    if (!box.contains(c)) continue;
    const double area = run.intersection(box).area();
    if (area > best_area) {
      best = s;
      best_area = area;
    }
  }
  return best;
}

}  // namespace

TEST(TableDetect, BlankPageHasNoRegions) {
  pdf::PageModel page;
  page.width = 612;
  page.height = 792;
  EXPECT_TRUE(detect_regions(page).empty());
}

TEST(TableDetect, TwoStackedRuledTablesInOrder) {
  Fixture1 f;
  const auto regions = detect_regions(f.page_of(0));
  ASSERT_EQ(regions.size(), 2u);
  EXPECT_GE(iou(regions[0], f.table(0)["region"].get<BBox>()), 0.8);
  EXPECT_GE(iou(regions[1], f.table(1)["region"].get<BBox>()), 0.8);
  EXPECT_LT(regions[0].y1, regions[1].y0);
}

TEST(TableDetect, PhotoAndMapPagesHaveNoTables) {
  Fixture1 f;
  EXPECT_TRUE(detect_regions(f.pages[2]).empty());
  EXPECT_TRUE(detect_regions(f.pages[0]).empty());
}

TEST(TableDetect, Deterministic) {
  Fixture1 f;
  EXPECT_EQ(detect_regions(f.page_of(0)), detect_regions(f.page_of(0)));
}

TEST(TableStructure, FullyRuledThreeByFour) {
  Fixture1 f;
  const Grid g = recognize_structure(f.page_of(0), f.table(0)["region"].get<BBox>());
  EXPECT_EQ(g.rows(), 3);
  EXPECT_EQ(g.cols(), 4);
  EXPECT_TRUE(bounds_close(g.row_bounds, f.table(0)["row_bounds"], 1.0));
  EXPECT_TRUE(bounds_close(g.col_bounds, f.table(0)["col_bounds"], 1.0));
  EXPECT_TRUE(g.merges.empty());
}

TEST(TableStructure, SingleRunWithoutRulesIsOneCell) {
  pdf::PdfWriter w;
  w.add_page(300, 300).text(100, 120, 10, "lonely");
  const auto page = pdf::parse_bytes(w.finish())[0];
  const BBox region{50, 80, 250, 160};
  const Grid g = recognize_structure(page, region);
  EXPECT_EQ(g.row_bounds, (std::vector<double>{80, 160}));
  EXPECT_EQ(g.col_bounds, (std::vector<double>{50, 250}));
  EXPECT_TRUE(g.merges.empty());
}

TEST(TableStructure, EmptyRegionIsNoContent) {
  pdf::PageModel page;
  page.width = page.height = 500;
  EXPECT_EQ(code_of([&] { recognize_structure(page, {10, 10, 100, 100}); }), ErrorCode::NoContent);
}

TEST(TableStructure, HeaderSpanBecomesMerge) {
  int seen = 0;
  for (int i = 1; i < 40; ++i) {
    const auto fx = fixtures::generate(i);
    const auto pages = pdf::parse_bytes(fx.pdf);
    for (const auto& t : fx.sidecar["tables"]) {
      if (t["merges"].empty()) continue;
      ++seen;
      const Grid g = recognize_structure(pages[t["page"].get<int>()], t["region"].get<BBox>());
      EXPECT_EQ(json(g.merges), t["merges"]) << fx.name << " " << t["kind"];
      EXPECT_TRUE(bounds_close(g.col_bounds, t["col_bounds"], 1.0)) << fx.name;
    }
  }
  EXPECT_GE(seen, 5);
}

TEST(TableContent, RuledTableCellsExact) {
  Fixture1 f;
  const BBox region = f.table(0)["region"].get<BBox>();
  const Grid g = recognize_structure(f.page_of(0), region);
  const auto cells = recognize_content(f.page_of(0), region, g);
  ASSERT_EQ(cells.size(), 12u);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_EQ(cells[i].text, f.table(0)["cells"][i]["text"]);
    EXPECT_EQ(cells[i].source, CellSource::TextLayer);
  }
  EXPECT_EQ(cells[5].text, "312.4");
}

TEST(TableContent, EmptyCellIsPresent) {
  pdf::PdfWriter w;
  auto& p = w.add_page(300, 300);
  p.text(20, 30, 10, "a");
  const auto page = pdf::parse_bytes(w.finish())[0];
  const Grid g = grid_of({10, 40, 70}, {10, 100});
  const auto cells = recognize_content(page, {10, 10, 100, 70}, g);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].text, "a");
  EXPECT_EQ(cells[1].text, "");
}

TEST(TableContent, CenterOnSeparatorMatchesBruteForce) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> rows{0}, cols{0};
    const int nr = 1 + static_cast<int>(rng() % 5), nc = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < nr; ++i) rows.push_back(rows.back() + 5 + std::floor(u(rng) * 20));
    for (int i = 0; i < nc; ++i) cols.push_back(cols.back() + 5 + std::floor(u(rng) * 20));
    Grid g = grid_of(rows, cols);
    if (nr > 1 && nc > 1 && rng() % 2) g.merges.push_back({0, 0, 1, 1});
    // Centers snapped to bounds half of the time.
    auto coord = [&](const std::vector<double>& b) {
      return rng() % 2 ? b[rng() % b.size()] : b.front() - 5 + u(rng) * (b.back() - b.front() + 10);
    };
    const double cx = coord(cols), cy = coord(rows);
    const double hw = 0.5 + u(rng) * 8, hh = 0.5 + u(rng) * 5;
    const BBox run{cx - hw, cy - hh, cx + hw, cy + hh};
    EXPECT_EQ(assign_cell(g, run), brute_force_assign(g, run)) << trial;
  }
}

TEST(TableContent, EveryRunLandsInExactlyOneCell) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    pdf::PageModel page;
    page.width = page.height = 400;
    Grid g = grid_of({50, 80, 110, 140}, {50, 120, 190, 260});
    if (trial % 2) g.merges.push_back({0, 1, 1, 2});
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      const double x = 50 + (rng() % 2000) / 10.0, y = 50 + (rng() % 900) / 10.0;
      page.text_runs.push_back({"w" + std::to_string(i), {x - 4, y - 3, x + 4, y + 3}, 6});
    }
    const auto cells = recognize_content(page, {45, 45, 265, 145}, g);
    EXPECT_EQ(cells.size(), g.logical_cells().size());
    int words = 0;
    for (const auto& c : cells)
      for (std::size_t pos = 0; (pos = c.text.find('w', pos)) != std::string::npos; ++pos) ++words;
    EXPECT_EQ(words, n);
  }
}

TEST(TableEdit, AddColumnSplitsOneByOne) {
  const Grid g = apply_edit(grid_of({0, 10}, {0, 20}), AddCol{10});
  EXPECT_EQ(g.rows(), 1);
  EXPECT_EQ(g.cols(), 2);
}

TEST(TableEdit, MergeThenSplitRestores) {
  const Grid g0 = grid_of({0, 10, 20}, {0, 10, 20, 30});
  const Grid g1 = apply_edit(g0, Merge{{0, 0, 0, 1}});
  EXPECT_EQ(g1.merges.size(), 1u);
  EXPECT_EQ(apply_edit(g1, Split{0, 0}), g0);
}

TEST(TableEdit, InvalidEdits) {
  const Grid g = apply_edit(grid_of({0, 10, 20}, {0, 10, 20, 30}), Merge{{0, 0, 1, 1}});
  EXPECT_EQ(code_of([&] { apply_edit(g, Merge{{1, 1, 1, 2}}); }), ErrorCode::InvalidEdit);
  EXPECT_EQ(code_of([&] { apply_edit(g, Merge{{0, 2, 0, 2}}); }), ErrorCode::InvalidEdit);
  EXPECT_EQ(code_of([&] { apply_edit(g, Merge{{0, 2, 0, 3}}); }), ErrorCode::InvalidEdit);
  EXPECT_EQ(code_of([&] { apply_edit(g, AddRow{20}); }), ErrorCode::InvalidEdit);
  EXPECT_EQ(code_of([&] { apply_edit(g, AddRow{10}); }), ErrorCode::InvalidEdit);
  EXPECT_EQ(code_of([&] { apply_edit(g, AddCol{-1}); }), ErrorCode::InvalidEdit);
  EXPECT_EQ(code_of([&] { apply_edit(g, DeleteCol{3}); }), ErrorCode::InvalidEdit);
  EXPECT_EQ(code_of([&] { apply_edit(g, Split{1, 1}); }), ErrorCode::InvalidEdit);
  EXPECT_EQ(code_of([&] { apply_edit(grid_of({0, 1}, {0, 1}), DeleteRow{0}); }),
            ErrorCode::InvalidEdit);
}

TEST(TableEdit, AddRowInsideMergeGrowsIt) {
  const Grid g = apply_edit(grid_of({0, 10, 20}, {0, 10, 20}, {{0, 0, 1, 0}}), AddRow{5});
  EXPECT_EQ(g.row_bounds, (std::vector<double>{0, 5, 10, 20}));
  EXPECT_EQ(g.merges, (std::vector<Span>{{0, 0, 2, 0}}));
}

TEST(TableEdit, DeleteRowJoinsSuccessor) {
  const Grid g = apply_edit(grid_of({0, 10, 20, 30}, {0, 10, 20}, {{2, 0, 2, 1}}), DeleteRow{1});
  EXPECT_EQ(g.row_bounds, (std::vector<double>{0, 10, 30}));
  EXPECT_EQ(g.merges, (std::vector<Span>{{1, 0, 1, 1}}));
  const Grid last = apply_edit(grid_of({0, 10, 20}, {0, 10}), DeleteRow{1});
  EXPECT_EQ(last.row_bounds, (std::vector<double>{0, 20}));
}

TEST(TableEdit, RandomSequencesKeepInvariants) {
  std::mt19937 rng(3);
  for (int run = 0; run < 200; ++run) {
    Grid g = grid_of({0, 100}, {0, 100});
    for (int step = 0; step < 40; ++step) {
      StructureEdit e;
      const int r = static_cast<int>(rng() % 4), c = static_cast<int>(rng() % 4);
      switch (rng() % 6) {
        case 0: e = AddRow{static_cast<double>(rng() % 101)}; break;
        case 1: e = AddCol{static_cast<double>(rng() % 101)}; break;
        case 2: e = DeleteRow{r}; break;
        case 3: e = DeleteCol{c}; break;
        case 4: e = Merge{{r, c, r + static_cast<int>(rng() % 2), c + static_cast<int>(rng() % 2)}}; break;
        default: e = Split{r, c};
      }
      try {
        g = apply_edit(g, e);
      } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::InvalidEdit);
      }
      EXPECT_NO_THROW(g.validate());
    }
  }
}

class TablePipeline : public ::testing::Test {
 protected:
  Fixture1 f;
  Artifact a;
  void SetUp() override {
    auto found = detect(f.page_of(0), "doc1");
    ASSERT_EQ(found.size(), 2u);
    a = found[0];
    EXPECT_EQ(a.stage, Stage::Detected);
  }
  void to_content() {
    confirm_region(a, f.page_of(0), a.region);
    propose_structure(a, f.page_of(0));
    confirm(a, Stage::StructureConfirmed);
    propose_content(a, f.page_of(0));
  }
};

TEST_F(TablePipeline, UnchangedRegionLogsNothing) {
  EXPECT_FALSE(confirm_region(a, f.page_of(0), a.region).has_value());
  EXPECT_EQ(a.stage, Stage::RegionConfirmed);
  EXPECT_FALSE(confirm_region(a, f.page_of(0), a.region).has_value());  // repeat is a no-op
}

TEST_F(TablePipeline, ShiftedRegionLogsOldAndNew) {
  const BBox old = a.region;
  const BBox moved = old.translated(0, 2);
  const auto log = confirm_region(a, f.page_of(0), moved);
  ASSERT_TRUE(log.has_value());
  EXPECT_EQ(log->before, json(old));
  EXPECT_EQ(log->after, json(moved));
  EXPECT_EQ(log->module, "table");
}

TEST_F(TablePipeline, RegionOutsidePage) {
  EXPECT_EQ(code_of([&] { confirm_region(a, f.page_of(0), {500, 700, 700, 800}); }),
            ErrorCode::RegionOutOfPage);
}

TEST_F(TablePipeline, ConfirmRegionLateIsInvalidStage) {
  to_content();
  EXPECT_EQ(a.stage, Stage::ContentProposed);
  EXPECT_EQ(code_of([&] { confirm_region(a, f.page_of(0), a.region); }), ErrorCode::InvalidStage);
}

TEST_F(TablePipeline, EditConfirmEdit) {
  to_content();
  const auto log = edit_cell(a, 1, 1, "312.5");
  ASSERT_TRUE(log.has_value());
  EXPECT_EQ(log->before["text"], "312.4");
  EXPECT_TRUE(a.cell(1, 1)->edited);
  confirm(a, Stage::ContentConfirmed);
  confirm(a, Stage::ContentConfirmed);
  EXPECT_EQ(code_of([&] { edit_cell(a, 1, 1, "x"); }), ErrorCode::InvalidStage);
}

TEST_F(TablePipeline, UnknownCell) {
  to_content();
  EXPECT_EQ(code_of([&] { edit_cell(a, 7, 0, "x"); }), ErrorCode::UnknownCell);
}

TEST_F(TablePipeline, RevertDropsDownstream) {
  to_content();
  confirm(a, Stage::ContentConfirmed);
  revert(a, Stage::StructureConfirmed);
  EXPECT_FALSE(a.cells.has_value());
  EXPECT_TRUE(a.grid.has_value());
  revert(a, Stage::RegionConfirmed);
  EXPECT_FALSE(a.grid.has_value());
  EXPECT_EQ(code_of([&] { revert(a, Stage::RegionConfirmed); }), ErrorCode::InvalidStage);
}

TEST_F(TablePipeline, StructureEditAfterConfirmReopens) {
  confirm_region(a, f.page_of(0), a.region);
  propose_structure(a, f.page_of(0));
  confirm(a, Stage::StructureConfirmed);
  ASSERT_TRUE(edit_structure(a, Merge{{1, 0, 1, 1}}).has_value());
  EXPECT_EQ(a.stage, Stage::StructureProposed);
  EXPECT_EQ(code_of([&] { propose_content(a, f.page_of(0)); }), ErrorCode::InvalidStage);
}

TEST_F(TablePipeline, ImageOnlyPageNeedsOcr) {
  pdf::PageModel scan = f.page_of(0);
  scan.text_runs.clear();
  scan.image_only = true;
  confirm_region(a, f.page_of(0), a.region);
  propose_structure(a, f.page_of(0));
  confirm(a, Stage::StructureConfirmed);
  EXPECT_EQ(code_of([&] { propose_content(a, scan); }), ErrorCode::OcrClientUnavailable);
  propose_content(a, scan, [](int, const BBox& b) { return " cell at " + std::to_string(int(b.x0)); });
  EXPECT_EQ(a.cells->front().source, CellSource::OcrClient);
  EXPECT_EQ(a.cells->front().text, "cell at 156");
}

TEST_F(TablePipeline, JsonRoundTrip) {
  to_content();
  a.table_id = "t1";
  a.created_at = 1717200000000;
  a.updated_at = 1717200000123;
  const json j = a;
  EXPECT_EQ(j["stage"], "ContentProposed");
  EXPECT_EQ(j["created_at"], "2024-06-01T00:00:00.000Z");
  EXPECT_EQ(j.get<Artifact>(), a);
}
