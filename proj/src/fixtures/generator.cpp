#include "docmine/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "docmine/error.hpp"
#include "docmine/pdf_writer.hpp"
#include "docmine/text_util.hpp"

namespace docmine::fixtures {

using nlohmann::json;
using pdf::PdfWriter;

namespace {

constexpr double kLeft = 72.0;
constexpr double kTextWidth = 468.0;
constexpr double kTop = 72.0;
constexpr double kBottom = 740.0;
constexpr double kBodySize = 9.0;
constexpr double kBodyLeading = 11.5;
constexpr double kHeadingSize = 12.0;
constexpr double kCaptionSize = 8.5;
constexpr double kCellPad = 5.0;
constexpr double kLabelSize = 7.0;

// Deterministic helpers that do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  int uniform(int lo, int hi) {  // inclusive
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(eng_() % span);
  }
  double real(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) / 9007199254740992.0);
  }
  bool chance(double p) { return real(0, 1) < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 eng_;
};

std::string fmt_fixed(double v, int decimals) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(decimals);
  os << v;
  return os.str();
}

std::vector<std::string> words_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::vector<std::string> wrap(const std::string& text, double size, double width) {
  std::vector<std::string> lines;
  std::string cur;
  for (const std::string& w : words_of(text)) {
    const std::string cand = cur.empty() ? w : cur + " " + w;
    if (!cur.empty() && PdfWriter::text_width(cand, size) > width) {
      lines.push_back(cur);
      cur = w;
    } else {
      cur = cand;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

struct TableSpec {
  std::string kind;  // ruled | booktabs | unruled
  std::vector<std::vector<std::string>> rows;
  int span_col = -1;  // header cell (0, span_col) spans span_col..span_col+1
  int header_rows = 1;
};

class Composer {
 public:
  explicit Composer(PdfWriter& w) : w_(w) { new_page(); }

  void new_page() {
    page_ = &w_.add_page(612, 792);
    page_index_ = static_cast<int>(w_.page_count()) - 1;
    y_ = kTop;
  }
  void ensure(double h) {
    if (y_ + h > kBottom) new_page();
  }
  void skip(double h) { y_ += h; }
  double y() const { return y_; }
  int page_index() const { return page_index_; }
  PdfWriter::Page& page() { return *page_; }

  void lines(const std::string& text, double size, double leading) {
    for (const std::string& line : wrap(text, size, kTextWidth)) {
      ensure(leading);
      page_->text(kLeft, y_ + 0.8 * size, size, line);
      y_ += leading;
    }
  }

  void heading(const std::string& title) {
    ensure(40);
    y_ += 8;
    page_->text(kLeft, y_ + 0.8 * kHeadingSize, kHeadingSize, title);
    y_ += kHeadingSize + 6;
    sections_.push_back({{"heading", title}, {"text", ""}, {"kind", "body"}});
  }

  void paragraph(const std::string& text) {
    lines(text, kBodySize, kBodyLeading);
    y_ += 6;
    append_body(text);
  }

  void caption(const std::string& text) {
    ensure(24);
    lines(text, kCaptionSize, 10.5);
    y_ += 8;
    sections_.push_back({{"heading", ""}, {"text", text}, {"kind", "caption"}});
  }

  json table(const TableSpec& spec, double size);
  json map(Rng& rng, int variant);
  json photo(double height);

  json sections() const { return sections_; }

 private:
  void append_body(const std::string& text) {
    // Body text after a caption continues the last headed section.
    for (auto it = sections_.rbegin(); it != sections_.rend(); ++it) {
      if ((*it)["kind"] == "body") {
        std::string cur = (*it)["text"].get<std::string>();
        (*it)["text"] = cur.empty() ? text : cur + " " + text;
        return;
      }
    }
  }

  PdfWriter& w_;
  PdfWriter::Page* page_ = nullptr;
  int page_index_ = 0;
  double y_ = kTop;
  json sections_ = json::array();
};

json Composer::table(const TableSpec& spec, double size) {
  const int nrows = static_cast<int>(spec.rows.size());
  const int ncols = static_cast<int>(spec.rows[0].size());
  auto spanned = [&](int r, int c) {  // covered but not top-left
    return r == 0 && spec.span_col >= 0 && c == spec.span_col + 1;
  };

  std::vector<double> widths(ncols, 0.0);
  for (int r = 0; r < nrows; ++r)
    for (int c = 0; c < ncols; ++c) {
      if (spanned(r, c) || (r == 0 && c == spec.span_col)) continue;
      widths[c] = std::max(widths[c], PdfWriter::text_width(spec.rows[r][c], size));
    }
  for (double& w : widths) w = std::max(w, 12.0) + 2 * kCellPad + 6.0;
  if (spec.span_col >= 0) {
    const double need = PdfWriter::text_width(spec.rows[0][spec.span_col], size) + 2 * kCellPad;
    const double have = widths[spec.span_col] + widths[spec.span_col + 1];
    if (have < need) {
      widths[spec.span_col] += (need - have) / 2 + 1;
      widths[spec.span_col + 1] += (need - have) / 2 + 1;
    }
  }
  double total = 0.0;
  for (double w : widths) total += w;
  const double min_total = spec.kind == "unruled" ? 0.0 : 300.0;
  if (total < min_total) {
    const double k = min_total / total;
    for (double& w : widths) w *= k;
    total = min_total;
  }
  const double row_h = 2.0 * size;
  ensure(row_h * nrows + 12);
  const double x0 = kLeft + (kTextWidth - total) / 2.0;
  const double top = y_ + 2.0;

  std::vector<double> col_x{x0};
  for (double w : widths) col_x.push_back(col_x.back() + w);
  std::vector<double> row_y;
  for (int r = 0; r <= nrows; ++r) row_y.push_back(top + r * row_h);

  // text
  json cells = json::array();
  std::vector<std::vector<BBox>> boxes(nrows, std::vector<BBox>(ncols, BBox{1, 1, 0, 0}));
  for (int r = 0; r < nrows; ++r) {
    const double baseline = row_y[r] + row_h / 2 + 0.3 * size;
    for (int c = 0; c < ncols; ++c) {
      if (spanned(r, c)) continue;
      const std::string& t = spec.rows[r][c];
      cells.push_back({{"row", r}, {"col", c}, {"text", text::collapse_whitespace(t)}});
      if (t.empty()) continue;
      double x = col_x[c] + kCellPad;
      if (r == 0 && c == spec.span_col)
        x = (col_x[c] + col_x[c + 2]) / 2 - PdfWriter::text_width(t, size) / 2;
      const auto run = page_->text(x, baseline, size, t);
      boxes[r][c] = run.bbox;
    }
  }

  const double x1 = col_x.back();
  const double y1 = row_y.back();
  json merges = json::array();
  if (spec.span_col >= 0) merges.push_back({0, spec.span_col, 0, spec.span_col + 1});

  std::vector<double> row_bounds = row_y;
  std::vector<double> col_bounds = col_x;
  BBox region{x0, top, x1, y1};

  if (spec.kind == "ruled") {
    for (double y : row_y) page_->line({x0, y}, {x1, y}, 0.5);
    for (int r = 0; r < nrows; ++r)
      for (int k = 0; k <= ncols; ++k) {
        if (r == 0 && spec.span_col >= 0 && k == spec.span_col + 1) continue;
        page_->line({col_x[k], row_y[r]}, {col_x[k], row_y[r + 1]}, 0.5);
      }
  } else {
    // Column separators sit midway in the whitespace between columns.
    for (int k = 1; k < ncols; ++k) {
      double right = -1e9, left = 1e9;
      for (int r = 0; r < nrows; ++r) {
        // The spanning header run is not part of either column.
        const bool skip_left = r == 0 && k - 1 == spec.span_col;
        const bool skip_right = r == 0 && k == spec.span_col;
        if (!skip_left && boxes[r][k - 1].valid()) right = std::max(right, boxes[r][k - 1].x1);
        if (!skip_right && boxes[r][k].valid()) left = std::min(left, boxes[r][k].x0);
      }
      col_bounds[k] = (right + left) / 2.0;
    }
    if (spec.kind == "booktabs") {
      page_->line({x0, top}, {x1, top}, 0.8);
      page_->line({x0, row_y[spec.header_rows]}, {x0 + total, row_y[spec.header_rows]}, 0.5);
      if (spec.span_col >= 0)  // cmidrule under the spanning header
        page_->line({col_x[spec.span_col] + 3, row_y[1]}, {col_x[spec.span_col + 2] - 3, row_y[1]},
                    0.4);
      page_->line({x0, y1}, {x1, y1}, 0.8);
    } else {
      double rx0 = 1e9, ry0 = 1e9, rx1 = -1e9, ry1 = -1e9;
      for (const auto& row : boxes)
        for (const BBox& b : row)
          if (b.valid()) {
            rx0 = std::min(rx0, b.x0);
            ry0 = std::min(ry0, b.y0);
            rx1 = std::max(rx1, b.x1);
            ry1 = std::max(ry1, b.y1);
          }
      region = {rx0, ry0, rx1, ry1};
      row_bounds.front() = ry0;
      row_bounds.back() = ry1;
      col_bounds.front() = rx0;
      col_bounds.back() = rx1;
    }
  }
  y_ = y1 + 10;
  return {{"page", page_index_},   {"kind", spec.kind},       {"region", region},
          {"row_bounds", row_bounds}, {"col_bounds", col_bounds}, {"merges", merges},
          {"cells", cells},          {"rows", spec.rows}};
}

json Composer::map(Rng& rng, int variant) {
  const double w = 280 + rng.uniform(0, 40);
  const double h = 220 + rng.uniform(0, 60);
  ensure(h + 50);
  const double x0 = kLeft + 70 + rng.uniform(0, 40);
  const double y0 = y_ + 18;
  const BBox region = page_->image({x0, y0, x0 + w, y0 + h});
  const double x1 = region.x1;
  const double y1 = region.y1;
  page_->line({x0, y0}, {x1, y0}, 0.6);
  page_->line({x0, y1}, {x1, y1}, 0.6);
  page_->line({x0, y0}, {x0, y1}, 0.6);
  page_->line({x1, y0}, {x1, y1}, 0.6);

  const std::vector<double> steps{0.25, 0.5, 1.0, 2.0, 5.0};
  const double lon_step = rng.pick(steps);
  const double lat_step = rng.pick(steps);
  const int n_lon = rng.uniform(2, 6);
  const int n_lat = rng.uniform(2, 6);
  const double lon_start = lon_step * std::floor(rng.real(-170, 170 - lon_step * n_lon) / lon_step);
  const double lat_top = lat_step * std::floor(rng.real(-80 + lat_step * n_lat, 80) / lat_step);
  const double inset = 18.0;
  const double dx = (w - 2 * inset) / (n_lon - 1);
  const double dy = (h - 2 * inset) / (n_lat - 1);

  const bool full_lines = variant % 2 == 0;
  const bool duplicate_top = variant % 3 == 1;
  const bool bare = variant % 5 == 4;

  json gridlines = json::array();
  for (int k = 0; k < n_lon; ++k) {
    const double x = x0 + inset + k * dx;
    const double value = lon_start + k * lon_step;
    if (full_lines) page_->line({x, y0}, {x, y1}, 0.3);
    else page_->line({x, y1}, {x, y1 + 4}, 0.5);
    const std::string label = format_degree(value, false, bare);
    const double lw = PdfWriter::text_width(label, kLabelSize);
    page_->text(x - lw / 2, y1 + 5 + 0.8 * kLabelSize, kLabelSize, label);
    if (duplicate_top) {
      if (!full_lines) page_->line({x, y0 - 4}, {x, y0}, 0.5);
      page_->text(x - lw / 2, y0 - 5 - 0.2 * kLabelSize, kLabelSize, label);
    }
    gridlines.push_back({{"axis", "longitude"}, {"pixel_pos", x - x0}, {"value", value},
                         {"label", label}});
  }
  for (int k = 0; k < n_lat; ++k) {
    const double y = y0 + inset + k * dy;
    const double value = lat_top - k * lat_step;
    if (full_lines) page_->line({x0, y}, {x1, y}, 0.3);
    else page_->line({x0 - 4, y}, {x0, y}, 0.5);
    const std::string label = format_degree(value, true, bare);
    const double lw = PdfWriter::text_width(label, kLabelSize);
    page_->text(x0 - 6 - lw, y + 0.3 * kLabelSize, kLabelSize, label);
    gridlines.push_back({{"axis", "latitude"}, {"pixel_pos", y - y0}, {"value", value},
                         {"label", label}});
  }
  y_ = y1 + 22;
  const double a_lon = lon_step / dx;
  const double a_lat = -lat_step / dy;
  return {{"page", page_index_},
          {"region", region},
          {"gridlines", gridlines},
          {"longitude", {{"a", a_lon}, {"b", lon_start - a_lon * inset}}},
          {"latitude", {{"a", a_lat}, {"b", lat_top - a_lat * inset}}},
          {"full_lines", full_lines}};
}

json Composer::photo(double height) {
  ensure(height + 30);
  const BBox b = page_->image({kLeft + 100, y_ + 4, kLeft + 360, y_ + 4 + height});
  y_ = b.y1 + 10;
  return {{"page", page_index_}, {"region", b}};
}

// --- content pools -----------------------------------------------------------

const std::vector<std::string> kLocalities{
    "Palma Sola", "Riachuelos", "Veracruz", "Tethys", "Sichuan Basin", "Qinling",
    "Tarim", "Ordos", "Yangtze Platform", "Pamir", "Tibet", "Lhasa Terrane"};
const std::vector<std::string> kTopics{
    "zircon U–Pb geochronology", "carbon isotope stratigraphy", "foraminiferal biostratigraphy",
    "sandstone provenance", "detrital zircon ages", "conodont biozonation",
    "paleomagnetic constraints", "radiolarian chert ages"};
const std::vector<std::string> kSettings{
    "beach sediments", "the Permian–Triassic boundary", "a passive margin succession",
    "Cretaceous red beds", "an ophiolitic melange", "Jurassic black shales"};
const std::vector<std::string> kSurnames{
    "Moreno", "Hale", "Ibarra", "Chen", "Okafor", "Lindqvist", "Sato", "Dubois",
    "Kowalski", "Haddad", "Novak", "Pereira", "Fischer", "Wang"};
const std::vector<std::string> kJournals{
    "Journal of Sedimentary Provinces", "Earth History Letters", "Basin Research Reports",
    "Review of Stratigraphy", "Geochronology Notes"};
const std::vector<std::string> kAttrHeaders{
    "Age (Ma)", "Depth (m)", "Th/U", "U (ppm)", "Pb (ppm)", "Lithology", "Height (m)",
    "d13C", "Fe2O3 (wt%)", "Error (Ma)"};
const std::vector<std::string> kLithologies{"sandstone", "shale", "limestone", "chert",
                                            "siltstone", "tuff", "marl"};

std::string initials_name(Rng& rng) {
  const char a = static_cast<char>('A' + rng.uniform(0, 25));
  return std::string(1, a) + ". " + rng.pick(kSurnames);
}

std::string cell_value(Rng& rng, const std::string& header, int row) {
  if (header == "Lithology") return rng.pick(kLithologies);
  if (header == "Th/U") return fmt_fixed(rng.real(0.1, 1.9), 2);
  if (header == "Depth (m)" || header == "Height (m)") return fmt_fixed(rng.real(0.5, 420), 1);
  if (header == "d13C") return fmt_fixed(rng.real(-6, 5), 2);
  return fmt_fixed(rng.real(1, 900) + row, 1);
}

std::string coordinate_phrase(Rng& rng) {
  return format_degree(rng.uniform(1, 60) + rng.uniform(0, 3) * 0.25, true) + ", " +
         format_degree(rng.uniform(1, 170) + rng.uniform(0, 3) * 0.25, false);
}

TableSpec random_table(Rng& rng, const std::string& kind, const std::string& prefix) {
  TableSpec spec;
  spec.kind = kind;
  const int ncols = rng.uniform(2, 8);
  int nrows = rng.uniform(kind == "unruled" ? 3 : 2, 10);
  const bool span = kind != "unruled" && ncols >= 3 && rng.chance(0.5);
  std::vector<std::string> header{"Sample ID"};
  std::vector<std::string> pool = kAttrHeaders;
  for (int c = 1; c < ncols; ++c) {
    const std::size_t i = static_cast<std::size_t>(rng.uniform(0, static_cast<int>(pool.size()) - 1));
    header.push_back(pool[i]);
    pool.erase(pool.begin() + static_cast<long>(i));
  }
  if (span) {
    spec.span_col = rng.uniform(1, ncols - 2);
    std::vector<std::string> top = header;
    std::vector<std::string> sub(ncols, "");
    top[spec.span_col] = "Measured values";
    top[spec.span_col + 1] = "";
    sub[spec.span_col] = header[spec.span_col];
    sub[spec.span_col + 1] = header[spec.span_col + 1];
    spec.rows.push_back(top);
    spec.rows.push_back(sub);
    spec.header_rows = 2;
    nrows = std::max(nrows, 3);
  } else {
    spec.rows.push_back(header);
  }
  const int data_rows = nrows - spec.header_rows;
  for (int r = 0; r < data_rows; ++r) {
    std::vector<std::string> row{prefix + "-" + (r < 9 ? "0" : "") + std::to_string(r + 1)};
    for (int c = 1; c < ncols; ++c)
      row.push_back(rng.chance(0.06) ? "" : cell_value(rng, header[c], r));
    spec.rows.push_back(row);
  }
  return spec;
}

// Size that lets the table fit the text block.
double table_font_size(const TableSpec& spec) {
  for (double size : {8.0, 7.0, 6.0, 5.0}) {
    double total = 0.0;
    const std::size_t ncols = spec.rows[0].size();
    for (std::size_t c = 0; c < ncols; ++c) {
      double w = 0.0;
      for (const auto& row : spec.rows) w = std::max(w, PdfWriter::text_width(row[c], size));
      total += std::max(w, 12.0) + 2 * kCellPad + 6.0;
    }
    if (total <= kTextWidth) return size;
  }
  return 5.0;
}

struct Front {
  std::string title;
  std::vector<std::string> authors;
  std::string venue;
  int year = 0;
  std::string doi;
  std::string abstract;
};

void write_front(Composer& doc, const Front& f) {
  doc.lines(f.title, 15.0, 19.0);
  doc.skip(4);
  std::string authors;
  for (std::size_t i = 0; i < f.authors.size(); ++i) {
    if (i) authors += (i + 1 == f.authors.size()) ? " and " : ", ";
    authors += f.authors[i];
  }
  doc.lines(authors, 10.0, 13.0);
  doc.lines(f.venue, kBodySize, 11.0);
  doc.lines("doi:" + f.doi, 8.0, 10.0);
  doc.skip(4);
  doc.heading("Abstract");
  doc.paragraph(f.abstract);
}

json meta_json(const Front& f) {
  return {{"title", f.title}, {"authors", f.authors}, {"venue", f.venue},
          {"year", f.year},   {"doi", f.doi},         {"abstract", f.abstract}};
}

Fixture finish(const std::string& name, PdfWriter& w, Composer& doc, const Front& front,
               json tables, json maps, json photos, json entities) {
  Fixture fx;
  fx.name = name;
  fx.pdf = w.finish();
  json pages = json::array();
  for (std::size_t i = 0; i < w.page_count(); ++i) pages.push_back(w.page(i).truth());
  fx.sidecar = {{"name", name},         {"meta", meta_json(front)}, {"pages", pages},
                {"tables", tables},     {"maps", maps},             {"photos", photos},
                {"sections", doc.sections()}, {"entities", entities}};
  return fx;
}

Fixture fixture_one() {
  PdfWriter w;
  Composer doc(w);
  Front f;
  f.title =
      "Detrital zircon U–Pb geochronology and geochemistry of the Riachuelos and Palma Sola "
      "beach sediments, Veracruz State, Gulf of Mexico: a new insight on palaeoenvironment";
  f.authors = {"L. Moreno", "T. Hale", "R. Ibarra"};
  f.venue = "Journal of Sedimentary Provinces 2020, 14(2): 101–118";
  f.year = 2020;
  f.doi = "10.1000/jsp.2020.0142";
  f.abstract =
      "We report detrital zircon ages and bulk geochemistry of modern beach sands from two "
      "localities on the Gulf of Mexico coast. The age spectra record Grenvillian and "
      "Pan-African sources recycled through the coastal plain.";
  write_front(doc, f);
  doc.heading("1 Introduction");
  doc.paragraph(
      "Samples were collected at 23°45′N, 120°10′E near Palma Sola in the central-western "
      "Tethys realm. Sediment supply to the beach is dominated by short coastal rivers.");
  doc.new_page();
  doc.heading("2 Methods");
  doc.paragraph(
      "Zircon grains were separated with heavy liquids and dated by laser ablation. "
      "Ages quoted below are concordant results only.");
  json tables = json::array();
  doc.caption("Table 1. Zircon U–Pb results.");
  TableSpec t1;
  t1.kind = "ruled";
  t1.rows = {{"Sample ID", "Age (Ma)", "Depth (m)", "Th/U"},
             {"RP-01", "312.4", "1.5", "0.42"},
             {"RP-02", "1045.0", "2.0", "0.77"}};
  tables.push_back(doc.table(t1, 8.0));
  doc.paragraph(
      "Lithology of each sample was described in the field before sieving and is listed "
      "separately because two further samples were not dated.");
  doc.caption("Table 2. Sample lithology.");
  TableSpec t2;
  t2.kind = "ruled";
  t2.rows = {{"Sample ID", "Lithology"},
             {"RP-02", "medium sand"},
             {"RP-03", "coarse sand"}};
  tables.push_back(doc.table(t2, 8.0));
  doc.new_page();
  doc.heading("3 Results");
  doc.paragraph("The sampled beach lies within the mapped area shown below.");

  // Map with exact, evenly spaced gridlines: 96°30′W..95°30′W, 19°30′N..18°30′N.
  json maps = json::array();
  {
    PdfWriter::Page& p = doc.page();
    const double x0 = 160, y0 = doc.y() + 6, w_ = 300, h_ = 240;
    const BBox region = p.image({x0, y0, x0 + w_, y0 + h_});
    p.line({x0, y0}, {x0 + w_, y0}, 0.6);
    p.line({x0, y0 + h_}, {x0 + w_, y0 + h_}, 0.6);
    p.line({x0, y0}, {x0, y0 + h_}, 0.6);
    p.line({x0 + w_, y0}, {x0 + w_, y0 + h_}, 0.6);
    json gl = json::array();
    const double lons[3] = {-96.5, -96.0, -95.5};
    for (int k = 0; k < 3; ++k) {
      const double x = x0 + 30 + 120 * k;
      p.line({x, y0}, {x, y0 + h_}, 0.3);
      const std::string label = format_degree(lons[k], false);
      const double lw = PdfWriter::text_width(label, kLabelSize);
      p.text(x - lw / 2, y0 + h_ + 5 + 0.8 * kLabelSize, kLabelSize, label);
      gl.push_back({{"axis", "longitude"}, {"pixel_pos", x - x0}, {"value", lons[k]}, {"label", label}});
    }
    const double lats[3] = {19.5, 19.0, 18.5};
    for (int k = 0; k < 3; ++k) {
      const double y = y0 + 20 + 100 * k;
      p.line({x0, y}, {x0 + w_, y}, 0.3);
      const std::string label = format_degree(lats[k], true);
      const double lw = PdfWriter::text_width(label, kLabelSize);
      p.text(x0 - 6 - lw, y + 0.3 * kLabelSize, kLabelSize, label);
      gl.push_back({{"axis", "latitude"}, {"pixel_pos", y - y0}, {"value", lats[k]}, {"label", label}});
    }
    maps.push_back({{"page", doc.page_index()},
                    {"region", region},
                    {"gridlines", gl},
                    {"longitude", {{"a", 0.5 / 120.0}, {"b", -96.5 - 30 * 0.5 / 120.0}}},
                    {"latitude", {{"a", -0.5 / 100.0}, {"b", 19.5 + 20 * 0.5 / 100.0}}},
                    {"full_lines", true}});
    doc.skip(h_ + 30);
  }
  doc.caption("Fig. 1. Location map of the sampled beach.");
  json entities = json::array({{{"label", "coordinate"}, {"text", "23°45′N"}},
                               {{"label", "coordinate"}, {"text", "120°10′E"}},
                               {{"label", "locality"}, {"text", "Palma Sola"}},
                               {{"label", "locality"}, {"text", "Tethys"}}});
  return finish("fixture01", w, doc, f, tables, maps, json::array(), entities);
}

Fixture fixture_random(int index, std::uint64_t seed) {
  Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(index));
  PdfWriter w({.compress = index % 3 != 0});
  Composer doc(w);
  Front f;
  const std::string locality = rng.pick(kLocalities);
  f.title = "New " + rng.pick(kTopics) + " of " + rng.pick(kSettings) + " from the " +
            locality + " area";
  const int nauth = rng.uniform(1, 4);
  for (int i = 0; i < nauth; ++i) f.authors.push_back(initials_name(rng));
  f.year = rng.uniform(1985, 2023);
  f.venue = rng.pick(kJournals) + " " + std::to_string(f.year) + ", " +
            std::to_string(rng.uniform(1, 60)) + ": " + std::to_string(rng.uniform(1, 400)) +
            "–" + std::to_string(rng.uniform(401, 900));
  f.doi = "10." + std::to_string(rng.uniform(1000, 9999)) + "/fx." + std::to_string(index) +
          "." + std::to_string(f.year);
  f.abstract = "This study presents " + rng.pick(kTopics) + " for " + rng.pick(kSettings) +
               " exposed near " + locality + ". The results refine the regional framework "
               "and constrain the depositional age of the succession.";
  write_front(doc, f);
  const std::string coords = coordinate_phrase(rng);
  doc.heading("1 Introduction");
  doc.paragraph("The section near " + locality + " was logged at " + coords +
                " and sampled at regular intervals for laboratory work.");
  doc.new_page();
  doc.heading("2 Methods");
  doc.paragraph("Standard preparation procedures were followed and all measurements were "
                "replicated to estimate analytical uncertainty.");

  const std::vector<std::string> kinds{"ruled", "booktabs", "unruled", "ruled", "booktabs"};
  const std::string prefix(1, static_cast<char>('A' + index % 26));
  json tables = json::array();
  const int ntables = index % 4 == 1 ? 2 : 1;
  for (int t = 0; t < ntables; ++t) {
    const std::string kind = kinds[static_cast<std::size_t>(index + t) % kinds.size()];
    TableSpec spec = random_table(rng, kind, prefix + std::string(t ? "B" : "A"));
    doc.caption("Table " + std::to_string(t + 1) + ". Results for the " + locality + " samples.");
    tables.push_back(doc.table(spec, table_font_size(spec)));
    if (t + 1 < ntables)
      doc.paragraph("Additional measurements from the upper part of the section are "
                    "listed in the following table together with field descriptions.");
  }
  doc.new_page();
  doc.heading("3 Results");
  doc.paragraph("The study area and its graticule are shown in the location map below.");
  json maps = json::array();
  maps.push_back(doc.map(rng, index));
  doc.caption("Fig. 1. Location map of the " + locality + " area.");
  json photos = json::array();
  if (index % 2 == 0) {
    photos.push_back(doc.photo(90));
    doc.caption("Fig. 2. Field photograph of the outcrop.");
  }
  json entities = json::array({{{"label", "locality"}, {"text", locality}}});
  char name[32];
  std::snprintf(name, sizeof(name), "fixture%02d", index + 1);
  return finish(name, w, doc, f, tables, maps, photos, entities);
}

}  // namespace

std::string format_degree(double value, bool latitude, bool bare) {
  if (bare) return fmt_fixed(value, std::abs(value - std::round(value)) < 1e-9 ? 0 : 2);
  const double a = std::abs(value);
  int deg = static_cast<int>(std::floor(a + 1e-9));
  int minutes = static_cast<int>(std::round((a - deg) * 60.0));
  if (minutes == 60) {
    ++deg;
    minutes = 0;
  }
  std::string s = std::to_string(deg) + "°";
  if (minutes) s += std::to_string(minutes) + "′";
  if (value == 0.0) return s;
  s += latitude ? (value > 0 ? "N" : "S") : (value > 0 ? "E" : "W");
  return s;
}

Fixture generate(int index, std::uint64_t seed) {
  if (index == 0) return fixture_one();
  return fixture_random(index, seed);
}

std::vector<Fixture> generate_corpus(int count, std::uint64_t seed) {
  std::vector<Fixture> out;
  for (int i = 0; i < count; ++i) out.push_back(generate(i, seed));
  return out;
}

void write_corpus(const std::filesystem::path& dir, int count, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (const Fixture& fx : generate_corpus(count, seed)) {
    std::ofstream(dir / (fx.name + ".pdf"), std::ios::binary) << fx.pdf;
    std::ofstream(dir / (fx.name + ".json")) << fx.sidecar.dump(2) << "\n";
  }
}

}  // namespace docmine::fixtures
