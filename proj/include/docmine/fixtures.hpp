#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace docmine::fixtures {

// One synthetic scientific article: PDF bytes plus a ground-truth sidecar.
//
// Sidecar layout (JSON):
//   name, meta{title, authors[], venue, year, doi, abstract},
//   pages[]    page models exactly as drawn (runs, segments, images),
//   tables[]   {page, kind: ruled|booktabs|unruled, region, row_bounds,
//               col_bounds, merges[[r0,c0,r1,c1]], cells[{row,col,text}]},
//   maps[]     {page, region, gridlines[{axis, pixel_pos, value, label}],
//               longitude{a,b}, latitude{a,b}},
//   photos[]   unlabeled image boxes {page, region},
//   sections[] {heading, text, kind: body|caption},
//   entities[] {label, text}
struct Fixture {
  std::string name;
  std::string pdf;
  nlohmann::json sidecar;
};

// Fixture 0 is hand-authored and independent of the seed; the rest are drawn
// from a seeded generator.
Fixture generate(int index, std::uint64_t seed = 20240601);
std::vector<Fixture> generate_corpus(int count, std::uint64_t seed = 20240601);

// Writes <name>.pdf and <name>.json per fixture.
void write_corpus(const std::filesystem::path& dir, int count,
                  std::uint64_t seed = 20240601);

// Label formatting used by the map fixtures, e.g. "15°30′S".
std::string format_degree(double value, bool latitude, bool bare = false);

}  // namespace docmine::fixtures
