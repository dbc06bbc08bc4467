#include <gtest/gtest.h>

#include "docmine/fixtures.hpp"
#include "docmine/pdf.hpp"

using namespace docmine;

TEST(Fixtures, EveryFixtureParsesToItsTruth) {
  for (int i = 0; i < 24; ++i) {
    const auto fx = fixtures::generate(i);
    const auto pages = pdf::parse_bytes(fx.pdf);
    const auto& truth = fx.sidecar["pages"];
    ASSERT_EQ(pages.size(), truth.size()) << fx.name;
    for (std::size_t p = 0; p < pages.size(); ++p) {
      const auto want = truth[p].get<pdf::PageModel>();
      ASSERT_EQ(pages[p].text_runs.size(), want.text_runs.size()) << fx.name << " p" << p;
      for (std::size_t k = 0; k < want.text_runs.size(); ++k) {
        EXPECT_EQ(pages[p].text_runs[k].text, want.text_runs[k].text);
        EXPECT_NEAR(pages[p].text_runs[k].bbox.x1, want.text_runs[k].bbox.x1, 0.5);
      }
      EXPECT_EQ(pages[p].line_segments.size(), want.line_segments.size()) << fx.name;
      EXPECT_EQ(pages[p].image_regions.size(), want.image_regions.size()) << fx.name;
    }
    EXPECT_FALSE(fx.sidecar["tables"].empty());
    EXPECT_EQ(fx.sidecar["maps"].size(), 1u);
  }
}

TEST(Fixtures, SeedDeterminism) {
  EXPECT_EQ(fixtures::generate(5).pdf, fixtures::generate(5).pdf);
  EXPECT_NE(fixtures::generate(5, 1).pdf, fixtures::generate(5, 2).pdf);
}

TEST(Fixtures, DegreeLabels) {
  EXPECT_EQ(fixtures::format_degree(-15.5, true), "15°30′S");
  EXPECT_EQ(fixtures::format_degree(120.25, false), "120°15′E");
  EXPECT_EQ(fixtures::format_degree(-96.0, false), "96°W");
  EXPECT_EQ(fixtures::format_degree(12.5, true, true), "12.50");
}
