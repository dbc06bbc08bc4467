#include <gtest/gtest.h>

#include <random>

#include "docmine/error.hpp"
#include "docmine/integrate.hpp"
#include "docmine/text_util.hpp"
#include "oracles/join.hpp"

using namespace docmine;
using namespace docmine::integrate;
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

HeaderConfig header(std::vector<std::string> fields, std::string key = "") {
  HeaderConfig h{std::move(fields), ""};
  h.key_field = key.empty() ? h.fields.front() : key;
  return h;
}

TableInput table(std::string id, std::int64_t at, Grid values, const HeaderConfig& h) {
  TableInput t{std::move(id), at, std::move(values), {}};
  t.mapping = infer_column_mapping(t.values, h);
  return t;
}

std::string random_text(std::mt19937_64& rng, int max_len) {
  static const std::vector<std::string> pieces{"a", "B", " ", ",", "\"", "\n", "\r", "é", "°", "′", "x y", "0", "\t", "&", "<", ">"};
  std::string s;
  const int n = static_cast<int>(rng() % static_cast<unsigned>(max_len + 1));
  for (int i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
  return s;
}

}  // namespace

TEST(Mapping, NormalizedHeaderMatch) {
  const HeaderConfig h = header({"sample id", "age", "depth"});
  const ColumnMapping m = infer_column_mapping({{"Sample  ID", "Age (Ma)", "Th/U", "AGE"}}, h);
  ASSERT_EQ(m.columns.size(), 4u);
  EXPECT_EQ(m.columns[0], "sample id");
  EXPECT_EQ(m.columns[1], "age");
  EXPECT_FALSE(m.columns[2]);
  EXPECT_FALSE(m.columns[3]);  // duplicate match
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_EQ(header_key("Depth (m)"), "depth");
}

TEST(Mapping, OverrideChecks) {
  const HeaderConfig h = header({"a", "b"});
  check_mapping({{"a", std::nullopt, "b"}, {}}, h, 3);
  EXPECT_EQ(code_of([&] { check_mapping({{"a", "a"}, {}}, h, 2); }), ErrorCode::DuplicateField);
  EXPECT_EQ(code_of([&] { check_mapping({{"z"}, {}}, h, 1); }), ErrorCode::UnknownField);
}

TEST(Rows, FullOuterJoinExample) {
  const HeaderConfig h = header({"Sample ID", "Age", "Depth"});
  DocumentInput d{"d1", "7", {}, {}, {}};
  d.tables.push_back(table("tA", 1, {{"Sample ID", "Age"}, {"S1", "10"}, {"S2", "20"}}, h));
  d.tables.push_back(table("tB", 2, {{"Sample ID", "Depth"}, {"S2", "1.5"}, {"S3", "2.5"}}, h));
  const DocumentDataset ds = build_document_rows(d, &h);
  EXPECT_EQ(ds.columns, (std::vector<std::string>{"Sample ID", "Age", "Depth", "Metadata ID"}));
  EXPECT_EQ(ds.rows, (Grid{{"S1", "10", "", "7"}, {"S2", "20", "1.5", "7"}, {"S3", "", "2.5", "7"}}));
  EXPECT_TRUE(ds.provenance[0][2].is_null());
  EXPECT_EQ(ds.provenance[1][2]["ids"], json::array({"tB"}));
  EXPECT_EQ(ds.provenance[1][3]["source"], "meta");
}

TEST(Rows, LaterConfirmationWinsAndIsRecorded) {
  const HeaderConfig h = header({"Sample ID", "Age"});
  DocumentInput d{"d1", "1", {}, {}, {}};
  d.tables.push_back(table("late", 9, {{"Sample ID", "Age"}, {"S2", "25"}}, h));
  d.tables.push_back(table("early", 3, {{"Sample ID", "Age"}, {"S2", "20"}}, h));
  const DocumentDataset ds = build_document_rows(d, &h);
  EXPECT_EQ(ds.rows[0][1], "25");
  EXPECT_EQ(ds.provenance[0][1]["conflicts"], (json::array({{{"id", "early"}, {"value", "20"}}})));
}

TEST(Rows, BroadcastAndPoints) {
  const HeaderConfig h = header({"Sample ID", "Locality", "Latitude", "Longitude"});
  DocumentInput d{"d1", "1", {}, {}, {}};
  d.tables.push_back(table("t", 1, {{"Sample ID"}, {"S1"}, {"S2"}}, h));
  d.spans = {{"s1", "Locality", "Palma Sola"}, {"s2", "Locality", "Tethys"}, {"s3", "Locality", "Tethys"}};
  d.points = {{"p1", "S2", 19.25, -96.5}, {"p2", std::nullopt, 18.0, -95.0}};
  const DocumentDataset ds = build_document_rows(d, &h);
  EXPECT_EQ(ds.rows, (Grid{{"S1", "Palma Sola; Tethys", "18", "-95", "1"},
                           {"S2", "Palma Sola; Tethys", "19.25", "-96.5", "1"}}));
  EXPECT_EQ(ds.provenance[1][2]["ids"], json::array({"p1"}));
  EXPECT_EQ(ds.provenance[0][1]["ids"], json::array({"s1", "s2", "s3"}));
}

TEST(Rows, SyntheticRowAndErrors) {
  const HeaderConfig h = header({"Sample ID", "Locality"});
  DocumentInput d{"d1", "4", {}, {{"s", "Locality", "Tethys"}}, {}};
  EXPECT_EQ(build_document_rows(d, &h).rows, (Grid{{"", "Tethys", "4"}}));
  EXPECT_EQ(code_of([&] { build_document_rows(d, nullptr); }), ErrorCode::NoHeaderConfig);
  const HeaderConfig none;
  EXPECT_EQ(code_of([&] { build_document_rows(d, &none); }), ErrorCode::NoHeaderConfig);
  d.tables.push_back(table("t", 1, {{"Locality"}, {"x"}}, h));
  EXPECT_EQ(code_of([&] { build_document_rows(d, &h); }), ErrorCode::KeyFieldUnmapped);
  d.tables[0] = table("t", 1, {{"Other"}, {"x"}}, h);  // maps nothing: ignored
  EXPECT_EQ(build_document_rows(d, &h).rows.size(), 1u);
}

TEST(Rows, MatchesJoinOracle) {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 500; ++trial) {
    const int nf = 1 + static_cast<int>(rng() % 6);
    std::vector<std::string> fields;
    for (int f = 0; f < nf; ++f) fields.push_back("F" + std::to_string(f));
    std::optional<int> lat, lon;
    if (nf >= 3 && rng() % 2) {
      fields[static_cast<std::size_t>(nf - 2)] = "Latitude";
      fields[static_cast<std::size_t>(nf - 1)] = "Longitude";
      lat = nf - 2;
      lon = nf - 1;
    }
    const int key = static_cast<int>(rng() % static_cast<unsigned>(nf));
    const HeaderConfig h = header(fields, fields[static_cast<std::size_t>(key)]);
    DocumentInput d{"d", "m" + std::to_string(trial), {}, {}, {}};
    std::vector<oracle::JTable> jt;
    const int nt = static_cast<int>(rng() % 4);  // 0..3 tables
    int budget = 100;
    for (int t = 0; t < nt; ++t) {
      std::vector<int> cols{key};
      for (int f = 0; f < nf; ++f)
        if (f != key && rng() % 2) cols.push_back(f);
      std::shuffle(cols.begin(), cols.end(), rng);
      Grid g(1);
      oracle::JTable o{static_cast<long>(rng() % 5), {}, {}};
      for (int f : cols) {
        g[0].push_back(rng() % 2 ? fields[static_cast<std::size_t>(f)] : text::case_fold(fields[static_cast<std::size_t>(f)]) + " (u)");
        o.field_of.push_back(f);
      }
      const int nr = static_cast<int>(rng() % static_cast<unsigned>(std::min(budget, 40) + 1));
      budget -= nr;
      for (int r = 0; r < nr; ++r) {
        std::vector<std::string> row;
        for (int f : cols)
          row.push_back(f == key ? (rng() % 10 ? "K" + std::to_string(rng() % 12) : "")
                                 : (rng() % 3 ? std::to_string(rng() % 4) : ""));
        g.push_back(row);
        o.rows.push_back(row);
      }
      TableInput ti = table("t" + std::to_string(t), o.order, g, h);
      d.tables.push_back(ti);
      jt.push_back(o);
    }
    std::vector<oracle::JSpan> js;
    for (int s = static_cast<int>(rng() % 4); s > 0; --s) {
      const int f = static_cast<int>(rng() % static_cast<unsigned>(nf));
      const std::string v = "v" + std::to_string(rng() % 3);
      d.spans.push_back({"s" + std::to_string(s), fields[static_cast<std::size_t>(f)], v});
      js.push_back({f, v});
    }
    std::vector<oracle::JPoint> jp;
    for (int p = static_cast<int>(rng() % 4); p > 0; --p) {
      std::optional<std::string> k;
      if (rng() % 2) k = "K" + std::to_string(rng() % 12);
      const double la = static_cast<double>(rng() % 1000) / 8.0 - 60, lo = static_cast<double>(rng() % 1000) / 4.0 - 120;
      d.points.push_back({"p" + std::to_string(p), k, la, lo});
      char a[32], b[32];
      std::snprintf(a, sizeof a, "%g", la);
      std::snprintf(b, sizeof b, "%g", lo);
      // points on keys no table has are dropped with a warning
      bool known = !k;
      for (const auto& t : jt)
        for (std::size_t c = 0; c < t.field_of.size(); ++c)
          if (t.field_of[c] == key)
            for (const auto& r : t.rows) known = known || r[c] == *k;
      if (known) jp.push_back({k, a, b});
    }
    const DocumentDataset ds = build_document_rows(d, &h);
    const auto want = oracle::join(jt, nf, key, lat, lon, js, jp, d.metadata_id);
    ASSERT_EQ(ds.rows, want) << "trial " << trial;
    for (const auto& row : ds.rows) ASSERT_EQ(row.back(), d.metadata_id);
  }
}

TEST(Header, FromSpreadsheet) {
  const HeaderConfig h = header_from_spreadsheet("sample id,locality,age\nS1,x,3\n");
  EXPECT_EQ(h.fields, (std::vector<std::string>{"sample id", "locality", "age"}));
  EXPECT_EQ(h.key_field, "sample id");
  const std::string x = to_xlsx({{"Sheet1", {{"Sample ID", "", "Age"}}}});
  EXPECT_EQ(header_from_spreadsheet(x, "h.xlsx").fields, (std::vector<std::string>{"Sample ID", "Age"}));
  EXPECT_EQ(code_of([] { header_from_spreadsheet(",,\n1,2,3\n"); }), ErrorCode::EmptyHeaderRow);
  EXPECT_EQ(code_of([] { header_from_spreadsheet(""); }), ErrorCode::EmptyHeaderRow);
  EXPECT_EQ(code_of([] { header_from_spreadsheet("\"open,quote\n"); }), ErrorCode::UnparseableFile);
  EXPECT_EQ(code_of([] { header_from_spreadsheet(std::string("a\0b", 3)); }), ErrorCode::UnparseableFile);
  EXPECT_EQ(code_of([] { header_from_spreadsheet("PK\x03\x04garbage", "x.xlsx"); }), ErrorCode::UnparseableFile);
}

TEST(Header, Edits) {
  HeaderConfig h = header({"sample id", "locality", "age"});
  h = edit_header(h, {RemoveField{"locality"}});
  EXPECT_EQ(h.fields.size(), 2u);
  EXPECT_EQ(code_of([&] { edit_header(h, {AddField{"age", {}}}); }), ErrorCode::DuplicateField);
  EXPECT_EQ(code_of([&] { edit_header(h, {RemoveField{"nope"}}); }), ErrorCode::UnknownField);
  EXPECT_EQ(code_of([&] { edit_header(h, {SetKey{"nope"}}); }), ErrorCode::UnknownField);
  EXPECT_EQ(code_of([&] { edit_header(h, {RemoveField{"sample id"}}); }), ErrorCode::KeyRemoved);
  const HeaderConfig moved = edit_header(h, {RemoveField{"sample id"}, SetKey{"age"}});
  EXPECT_EQ(moved.key_field, "age");
  const HeaderConfig added = edit_header(h, {AddField{"depth", 1}});
  EXPECT_EQ(added.fields, (std::vector<std::string>{"sample id", "depth", "age"}));
  EXPECT_EQ(h.fields.size(), 2u);  // input untouched
}

TEST(Project, ReferenceIdsAndMismatch) {
  const HeaderConfig h = header({"Sample ID", "Age"});
  DocumentDataset a{"d1", {"Sample ID", "Age", kMetadataId}, {{"S1", "1", "1"}, {"S2", "2", "1"}, {"S3", "", "1"}}, {}, {}};
  DocumentDataset b{"d2", {"Sample ID", "Age", kMetadataId}, {{"T1", "", "2"}, {"T2", "5", "2"}}, {}, {}};
  meta::MetaRecord ma, mb;
  ma.title = "A";
  mb.title = "B";
  const ProjectDataset p = integrate_project({a, b}, {ma, mb}, h);
  EXPECT_EQ(p.columns.back(), kReferenceId);
  ASSERT_EQ(p.rows.size(), 5u);
  std::vector<std::string> refs;
  for (const auto& r : p.rows) refs.push_back(r.back());
  EXPECT_EQ(refs, (std::vector<std::string>{"1", "1", "1", "2", "2"}));
  EXPECT_EQ(p.references[1].meta.title, "B");
  EXPECT_TRUE(integrate_project({}, {}, h).rows.empty());
  b.columns = {"Sample ID", kMetadataId};
  EXPECT_EQ(code_of([&] { integrate_project({a, b}, {ma, mb}, h); }), ErrorCode::HeaderMismatch);
}

TEST(Files, CsvQuoting) {
  EXPECT_EQ(to_csv({{"He said \"hi\", twice", "plain"}}), "\"He said \"\"hi\"\", twice\",plain\n");
  EXPECT_EQ(to_csv({{"a\nb", "c\rd", ""}}), "\"a\nb\",\"c\rd\",\n");
  EXPECT_EQ(parse_csv("a,b\r\n\"x\"\"y\",\r\n"), (Grid{{"a", "b"}, {"x\"y", ""}}));
  EXPECT_EQ(parse_csv("\xEF\xBB\xBFh\n"), (Grid{{"h"}}));
  EXPECT_EQ(code_of([] { parse_csv("\"a\"b\n"); }), ErrorCode::UnparseableFile);
  EXPECT_EQ(code_of([] { parse_csv("\xff\xfe"); }), ErrorCode::UnparseableFile);
}

TEST(Files, RoundTrips) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int cols = 1 + static_cast<int>(rng() % 6);
    const int rows = static_cast<int>(rng() % 30);
    Grid g;
    for (int r = 0; r < rows; ++r) {
      std::vector<std::string> row;
      for (int c = 0; c < cols; ++c) row.push_back(random_text(rng, 5));
      g.push_back(row);
    }
    ASSERT_EQ(parse_csv(to_csv(g)), g) << trial;
    const auto sheets = parse_xlsx(to_xlsx({{"Dataset", g}, {"References", {{"x"}}}}));
    ASSERT_EQ(sheets.size(), 2u);
    ASSERT_EQ(sheets[0].name, "Dataset");
    ASSERT_EQ(sheets[0].cells, g) << trial;
    ASSERT_EQ(sheets[1].cells, (Grid{{"x"}}));
  }
}

TEST(Files, ExportEmptyAndReferences) {
  const ProjectDataset empty{{"Sample ID", kReferenceId}, {}, {}};
  EXPECT_EQ(export_project(empty, "csv"), "Sample ID,Reference ID\n");
  ProjectDataset p{{"Sample ID", kReferenceId}, {{"S1", "1"}}, {}};
  meta::MetaRecord m;
  m.title = "T";
  m.authors = {{"A. B", "C. D"}};
  m.year = 2020;
  p.references.push_back({1, "d1", m});
  const auto sheets = parse_xlsx(export_project(p, "xlsx"));
  ASSERT_EQ(sheets.size(), 2u);
  EXPECT_EQ(sheets[1].name, "References");
  EXPECT_EQ(sheets[1].cells[1][0], "1");
  EXPECT_EQ(sheets[1].cells[1][2], "A. B; C. D");
  EXPECT_EQ(sheets[1].cells[1][6], "A. B, C. D (2020). T.");
  EXPECT_EQ(code_of([&] { export_project(p, "ods"); }), ErrorCode::ValidationError);
}
