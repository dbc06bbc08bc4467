#include <algorithm>
#include <cstdio>
#include <map>

#include "docmine/error.hpp"
#include "docmine/integrate.hpp"
#include "docmine/text_util.hpp"

namespace docmine::integrate {

using nlohmann::json;

namespace {

struct Cell {
  std::string value;
  std::string source;
  std::vector<std::string> ids;
  json conflicts = json::array();

  bool empty() const { return value.empty(); }
  void set(std::string v, std::string src, std::vector<std::string> from) {
    value = std::move(v);
    source = std::move(src);
    ids = std::move(from);
  }
  void conflict(const std::vector<std::string>& from, const std::string& v) {
    for (const std::string& id : from) conflicts.push_back({{"id", id}, {"value", v}});
  }
  json provenance() const {
    if (value.empty()) return nullptr;
    json p{{"source", source}, {"ids", ids}};
    if (!conflicts.empty()) p["conflicts"] = conflicts;
    return p;
  }
};

std::string format_degrees(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::optional<std::size_t> coordinate_field(const HeaderConfig& h, std::initializer_list<const char*> names) {
  for (std::size_t i = 0; i < h.fields.size(); ++i)
    for (const char* n : names)
      if (header_key(h.fields[i]) == n) return i;
  return std::nullopt;
}

// Joined distinct values in first-seen order.
struct Bag {
  std::vector<std::string> values;
  std::vector<std::string> ids;
  void add(const std::string& v, const std::string& id) {
    if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
    ids.push_back(id);
  }
  std::string joined() const { return text::join(values, "; "); }
};

std::vector<std::string> reference_columns(const char* id_column) {
  return {id_column, "Title", "Authors", "Venue", "Year", "DOI", "Citation"};
}

std::vector<std::string> reference_row(const std::string& id, const meta::MetaRecord& m) {
  return {id,
          m.title.value_or(""),
          m.authors ? text::join(*m.authors, "; ") : "",
          m.venue.value_or(""),
          m.year ? std::to_string(*m.year) : "",
          m.doi.value_or(""),
          citation(m)};
}

std::string export_sheets(std::vector<Sheet> sheets, std::string_view format) {
  if (format == "csv") return to_csv(sheets.front().cells);
  if (format == "xlsx") return to_xlsx(sheets);
  fail(ErrorCode::ValidationError, "unknown export format: " + std::string(format));
}

}  // namespace

DocumentDataset build_document_rows(const DocumentInput& doc, const HeaderConfig* header) {
  if (!header || header->fields.empty()) fail(ErrorCode::NoHeaderConfig, "the project has no header configuration");
  const HeaderConfig& h = *header;
  const std::size_t nf = h.fields.size();
  const auto key_at = static_cast<std::size_t>(
      std::find(h.fields.begin(), h.fields.end(), h.key_field) - h.fields.begin());
  auto field_at = [&](const std::string& f) -> std::optional<std::size_t> {
    const auto it = std::find(h.fields.begin(), h.fields.end(), f);
    if (it == h.fields.end()) return std::nullopt;
    return static_cast<std::size_t>(it - h.fields.begin());
  };

  DocumentDataset out;
  out.doc_id = doc.doc_id;
  out.columns = h.fields;
  out.columns.push_back(kMetadataId);

  std::vector<std::vector<Cell>> rows;
  std::map<std::string, std::size_t> row_of;

  // 1-2: keyed tables, full outer join on the key, in confirmation order.
  std::vector<const TableInput*> tables;
  for (const TableInput& t : doc.tables) tables.push_back(&t);
  std::stable_sort(tables.begin(), tables.end(), [](const TableInput* a, const TableInput* b) {
    return std::tie(a->confirmed_at, a->table_id) < std::tie(b->confirmed_at, b->table_id);
  });
  for (const TableInput* t : tables) {
    std::vector<std::optional<std::size_t>> target(t->mapping.columns.size());
    std::optional<std::size_t> key_col;
    bool any = false;
    for (std::size_t c = 0; c < t->mapping.columns.size(); ++c) {
      if (!t->mapping.columns[c]) continue;
      target[c] = field_at(*t->mapping.columns[c]);
      if (!target[c]) {
        out.warnings.push_back("table " + t->table_id + " maps to unknown field " + *t->mapping.columns[c]);
        continue;
      }
      any = true;
      if (*target[c] == key_at) key_col = c;
    }
    if (!any) {
      out.warnings.push_back("table " + t->table_id + " maps no header field; skipped");
      continue;
    }
    if (!key_col)
      fail(ErrorCode::KeyFieldUnmapped, "table " + t->table_id + " has no column for " + h.key_field,
           {{"table_id", t->table_id}, {"key_field", h.key_field}});
    int keyless = 0;
    for (std::size_t r = 1; r < t->values.size(); ++r) {
      const auto& vals = t->values[r];
      const std::string key = *key_col < vals.size() ? text::collapse_whitespace(vals[*key_col]) : "";
      if (key.empty()) {
        ++keyless;
        continue;
      }
      auto [it, fresh] = row_of.emplace(key, rows.size());
      if (fresh) {
        rows.emplace_back(nf);
        rows.back()[key_at].set(key, "table", {});
      }
      auto& row = rows[it->second];
      row[key_at].ids.push_back(t->table_id);
      for (std::size_t c = 0; c < target.size(); ++c) {
        if (!target[c] || c == *key_col || c >= vals.size() || vals[c].empty()) continue;
        Cell& cell = row[*target[c]];
        if (cell.empty()) {
          cell.set(vals[c], "table", {t->table_id});
        } else if (cell.value == vals[c]) {
          if (std::find(cell.ids.begin(), cell.ids.end(), t->table_id) == cell.ids.end())
            cell.ids.push_back(t->table_id);
        } else {
          cell.conflict(cell.ids, cell.value);  // the later table wins
          cell.set(vals[c], "table", {t->table_id});
        }
      }
    }
    if (keyless) out.warnings.push_back("table " + t->table_id + ": " + std::to_string(keyless) + " rows without a key skipped");
  }
  if (rows.empty()) rows.emplace_back(nf);

  // 4: attached points fill coordinates on their key's row.
  const auto lat = coordinate_field(h, {"latitude", "lat"});
  const auto lon = coordinate_field(h, {"longitude", "lon", "long"});
  std::map<std::size_t, std::pair<Bag, Bag>> attached;
  Bag free_lat, free_lon;
  for (const PointInput& p : doc.points) {
    if (!lat && !lon) break;
    if (p.key) {
      const auto it = row_of.find(text::collapse_whitespace(*p.key));
      if (it == row_of.end()) {
        out.warnings.push_back("point " + p.point_id + " is attached to unknown key " + *p.key);
        continue;
      }
      attached[it->second].first.add(format_degrees(p.latitude), p.point_id);
      attached[it->second].second.add(format_degrees(p.longitude), p.point_id);
    } else {
      free_lat.add(format_degrees(p.latitude), p.point_id);
      free_lon.add(format_degrees(p.longitude), p.point_id);
    }
  }
  auto fill = [](Cell& cell, const Bag& bag, const char* source) {
    if (bag.values.empty()) return;
    if (cell.empty()) cell.set(bag.joined(), source, bag.ids);
    else if (cell.value != bag.joined()) cell.conflict(bag.ids, bag.joined());
  };
  for (const auto& [r, bags] : attached) {
    if (lat) fill(rows[r][*lat], bags.first, "point");
    if (lon) fill(rows[r][*lon], bags.second, "point");
  }

  // 3: document-scoped values broadcast to every row.
  std::map<std::size_t, Bag> spans;
  for (const SpanInput& s : doc.spans) {
    const auto f = field_at(s.field);
    if (!f) {
      out.warnings.push_back("span " + s.span_id + " is linked to unknown field " + s.field);
      continue;
    }
    if (*f == key_at) {
      out.warnings.push_back("span " + s.span_id + " is linked to the key field; ignored");
      continue;
    }
    spans[*f].add(s.text, s.span_id);
  }
  for (auto& row : rows) {
    for (const auto& [f, bag] : spans) fill(row[f], bag, "span");
    if (lat) fill(row[*lat], free_lat, "point");
    if (lon) fill(row[*lon], free_lon, "point");
  }

  for (const auto& row : rows) {
    std::vector<std::string> values;
    std::vector<Provenance> prov;
    for (const Cell& c : row) {
      values.push_back(c.value);
      prov.push_back(c.provenance());
    }
    values.push_back(doc.metadata_id);
    prov.push_back(doc.metadata_id.empty() ? json(nullptr) : json{{"source", "meta"}, {"ids", {doc.doc_id}}});
    out.rows.push_back(std::move(values));
    out.provenance.push_back(std::move(prov));
  }
  return out;
}

ProjectDataset integrate_project(const std::vector<DocumentDataset>& docs,
                                 const std::vector<meta::MetaRecord>& metas,
                                 const HeaderConfig& header) {
  if (metas.size() != docs.size()) fail(ErrorCode::Internal, "one metadata record per document expected");
  std::vector<std::string> expected = header.fields;
  expected.push_back(kMetadataId);
  ProjectDataset p;
  p.columns = header.fields;
  p.columns.push_back(kReferenceId);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const DocumentDataset& d = docs[i];
    if (d.columns != expected)
      fail(ErrorCode::HeaderMismatch, "dataset of " + d.doc_id + " was built under another header; integrate it again",
           {{"doc_id", d.doc_id}});
    const int ref = static_cast<int>(i) + 1;
    for (const auto& row : d.rows) {
      std::vector<std::string> r(row.begin(), row.end() - 1);
      r.push_back(std::to_string(ref));
      p.rows.push_back(std::move(r));
    }
    p.references.push_back({ref, d.doc_id, metas[i]});
  }
  return p;
}

std::string citation(const meta::MetaRecord& m) {
  std::string s = m.authors ? text::join(*m.authors, ", ") : "";
  if (m.year) s += (s.empty() ? "(" : " (") + std::to_string(*m.year) + ")";
  if (!s.empty()) s += ". ";
  if (m.title) s += *m.title + ". ";
  if (m.venue) s += *m.venue + ". ";
  if (m.doi) s += "doi:" + *m.doi;
  return text::collapse_whitespace(s);
}

std::string export_document(const DocumentDataset& d, const meta::MetaRecord* meta, std::string_view format) {
  Grid values{d.columns};
  values.insert(values.end(), d.rows.begin(), d.rows.end());
  Grid refs{reference_columns(kMetadataId)};
  if (meta && !d.rows.empty()) refs.push_back(reference_row(d.rows.front().back(), *meta));
  return export_sheets({{"Dataset", values}, {"References", refs}}, format);
}

std::string export_project(const ProjectDataset& p, std::string_view format) {
  Grid values{p.columns};
  values.insert(values.end(), p.rows.begin(), p.rows.end());
  Grid refs{reference_columns(kReferenceId)};
  for (const Reference& r : p.references) refs.push_back(reference_row(std::to_string(r.reference_id), r.meta));
  return export_sheets({{"Dataset", values}, {"References", refs}}, format);
}

void to_json(json& j, const DocumentDataset& d) {
  j = {{"doc_id", d.doc_id}, {"columns", d.columns}, {"rows", d.rows},
       {"provenance", d.provenance}, {"warnings", d.warnings}};
}

void from_json(const json& j, DocumentDataset& d) {
  d.doc_id = j.at("doc_id").get<std::string>();
  d.columns = j.at("columns").get<std::vector<std::string>>();
  d.rows = j.at("rows").get<Grid>();
  d.provenance = j.value("provenance", json::array()).get<std::vector<std::vector<Provenance>>>();
  d.warnings = j.value("warnings", std::vector<std::string>{});
}

void to_json(json& j, const ProjectDataset& p) {
  json refs = json::array();
  for (const Reference& r : p.references)
    refs.push_back({{"reference_id", r.reference_id}, {"doc_id", r.doc_id}, {"meta", r.meta}});
  j = {{"columns", p.columns}, {"rows", p.rows}, {"references", refs}};
}

}  // namespace docmine::integrate
