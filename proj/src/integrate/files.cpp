#include <algorithm>
#include <map>
#include <memory>

#include <expat.h>

#include "docmine/error.hpp"
#include "docmine/integrate.hpp"
#include "docmine/text_util.hpp"
#include "integrate/zip.hpp"

namespace docmine::integrate {

namespace {

[[noreturn]] void unparseable(const std::string& what) {
  fail(ErrorCode::UnparseableFile, what);
}

// --- csv ----------------------------------------------------------------------

bool needs_quotes(const std::string& v) {
  return v.find_first_of(",\"\n\r") != std::string::npos;
}

void put_field(std::string& out, const std::string& v) {
  if (!needs_quotes(v)) {
    out += v;
    return;
  }
  out += '"';
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

// --- xml ----------------------------------------------------------------------

std::string xml_escape(std::string_view s, bool attribute) {
  std::string out;
  for (char32_t c : text::to_u32(s)) {
    switch (c) {
      case U'&': out += "&amp;"; break;
      case U'<': out += "&lt;"; break;
      case U'>': out += "&gt;"; break;
      case U'"': out += attribute ? "&quot;" : "\""; break;
      case U'\r': out += "&#13;"; break;
      case U'\t': out += attribute ? "&#9;" : "\t"; break;
      case U'\n': out += attribute ? "&#10;" : "\n"; break;
      default:
        // Characters XML 1.0 cannot carry become U+FFFD.
        if (c < 0x20 || c == 0xFFFE || c == 0xFFFF || (c >= 0xD800 && c <= 0xDFFF)) c = 0xFFFD;
        text::append_utf8(out, c);
    }
  }
  return out;
}

struct XNode {
  std::string name;  // local name, namespace prefix removed
  std::map<std::string, std::string> attrs;
  std::vector<std::unique_ptr<XNode>> kids;
  std::string text;

  const XNode* child(std::string_view n) const {
    for (const auto& k : kids)
      if (k->name == n) return k.get();
    return nullptr;
  }
  std::string attr(const std::string& n) const {
    const auto it = attrs.find(n);
    return it == attrs.end() ? "" : it->second;
  }
  // Concatenated text of every <t> below this node (rich text runs).
  void collect_t(std::string& out) const {
    if (name == "t") out += text;
    for (const auto& k : kids) k->collect_t(out);
  }
};

std::string local_name(const char* n) {
  std::string s(n);
  const auto colon = s.rfind(':');
  return colon == std::string::npos ? s : s.substr(colon + 1);
}

std::unique_ptr<XNode> parse_xml(const std::string& doc) {
  struct State {
    std::unique_ptr<XNode> root;
    std::vector<XNode*> stack;
  } st;
  XML_Parser p = XML_ParserCreate("UTF-8");
  XML_SetUserData(p, &st);
  XML_SetElementHandler(
      p,
      [](void* ud, const XML_Char* name, const XML_Char** atts) {
        auto* s = static_cast<State*>(ud);
        auto node = std::make_unique<XNode>();
        node->name = local_name(name);
        for (int i = 0; atts[i]; i += 2) node->attrs[local_name(atts[i])] = atts[i + 1];
        XNode* raw = node.get();
        if (s->stack.empty()) s->root = std::move(node);
        else s->stack.back()->kids.push_back(std::move(node));
        s->stack.push_back(raw);
      },
      [](void* ud, const XML_Char*) { static_cast<State*>(ud)->stack.pop_back(); });
  XML_SetCharacterDataHandler(p, [](void* ud, const XML_Char* s, int len) {
    auto* st = static_cast<State*>(ud);
    if (!st->stack.empty()) st->stack.back()->text.append(s, static_cast<std::size_t>(len));
  });
  const bool ok = XML_Parse(p, doc.data(), static_cast<int>(doc.size()), 1) == XML_STATUS_OK;
  std::string err = ok ? "" : XML_ErrorString(XML_GetErrorCode(p));
  XML_ParserFree(p);
  if (!ok || !st.root) unparseable("malformed XML in workbook: " + err);
  return std::move(st.root);
}

std::string column_letters(std::size_t col) {
  std::string s;
  ++col;
  while (col) {
    s.insert(s.begin(), static_cast<char>('A' + (col - 1) % 26));
    col = (col - 1) / 26;
  }
  return s;
}

// "BC12" -> column index 54; rows are taken from the row element.
std::optional<std::size_t> column_of(const std::string& ref) {
  std::size_t col = 0, i = 0;
  while (i < ref.size() && ref[i] >= 'A' && ref[i] <= 'Z') col = col * 26 + static_cast<std::size_t>(ref[i++] - 'A' + 1);
  if (i == 0) return std::nullopt;
  return col - 1;
}

std::string sheet_xml(const Grid& g) {
  std::string x =
      "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
      "<worksheet xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\"><sheetData>";
  for (std::size_t r = 0; r < g.size(); ++r) {
    x += "<row r=\"" + std::to_string(r + 1) + "\">";
    for (std::size_t c = 0; c < g[r].size(); ++c)
      x += "<c r=\"" + column_letters(c) + std::to_string(r + 1) + "\" t=\"inlineStr\"><is><t xml:space=\"preserve\">" +
           xml_escape(g[r][c], false) + "</t></is></c>";
    x += "</row>";
  }
  return x + "</sheetData></worksheet>";
}

std::string resolve_target(const std::string& target) {
  if (!target.empty() && target[0] == '/') return target.substr(1);
  return "xl/" + target;
}

}  // namespace

std::string to_csv(const Grid& grid) {
  std::string out;
  for (const auto& row : grid) {
    if (row.size() == 1 && row[0].empty()) {
      out += "\"\"\n";  // keeps a lone empty field distinct from nothing
      continue;
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      put_field(out, row[c]);
    }
    out += '\n';
  }
  return out;
}

Grid parse_csv(std::string_view s) {
  if (s.substr(0, 3) == "\xEF\xBB\xBF") s.remove_prefix(3);
  if (s.find('\0') != std::string_view::npos) unparseable("binary data is not CSV");
  if (text::to_utf8(text::to_u32(s)) != s) unparseable("CSV is not valid UTF-8");
  Grid out;
  std::vector<std::string> row;
  std::string field;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    bool quoted = false;
    field.clear();
    if (s[i] == '"') {
      quoted = true;
      ++i;
      while (true) {
        if (i >= n) unparseable("unterminated quoted field");
        if (s[i] == '"') {
          if (i + 1 < n && s[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += s[i++];
      }
    }
    while (i < n && s[i] != ',' && s[i] != '\n' && !(s[i] == '\r' && i + 1 < n && s[i + 1] == '\n') &&
           !(s[i] == '\r' && i + 1 == n)) {
      if (quoted) unparseable("text after closing quote");
      field += s[i++];
    }
    row.push_back(field);
    if (i >= n) break;
    if (s[i] == ',') {
      ++i;
      if (i == n) row.push_back("");
      continue;
    }
    i += s[i] == '\r' ? 2 : 1;
    out.push_back(std::move(row));
    row.clear();
  }
  if (!row.empty()) out.push_back(std::move(row));
  return out;
}

std::string to_xlsx(const std::vector<Sheet>& sheets) {
  std::vector<zip::Entry> e;
  std::string types =
      "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
      "<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">"
      "<Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>"
      "<Default Extension=\"xml\" ContentType=\"application/xml\"/>"
      "<Override PartName=\"/xl/workbook.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>";
  std::string book =
      "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
      "<workbook xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\" "
      "xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\"><sheets>";
  std::string rels =
      "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
      "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">";
  for (std::size_t k = 0; k < sheets.size(); ++k) {
    const std::string n = std::to_string(k + 1);
    types += "<Override PartName=\"/xl/worksheets/sheet" + n +
             ".xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>";
    book += "<sheet name=\"" + xml_escape(sheets[k].name, true) + "\" sheetId=\"" + n + "\" r:id=\"rId" + n + "\"/>";
    rels += "<Relationship Id=\"rId" + n +
            "\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet\" "
            "Target=\"worksheets/sheet" + n + ".xml\"/>";
  }
  types += "</Types>";
  book += "</sheets></workbook>";
  rels += "</Relationships>";
  e.push_back({"[Content_Types].xml", types});
  e.push_back({"_rels/.rels",
               "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
               "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
               "<Relationship Id=\"rId1\" "
               "Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument\" "
               "Target=\"xl/workbook.xml\"/></Relationships>"});
  e.push_back({"xl/workbook.xml", book});
  e.push_back({"xl/_rels/workbook.xml.rels", rels});
  for (std::size_t k = 0; k < sheets.size(); ++k)
    e.push_back({"xl/worksheets/sheet" + std::to_string(k + 1) + ".xml", sheet_xml(sheets[k].cells)});
  return zip::write(e);
}

std::vector<Sheet> parse_xlsx(std::string_view bytes) {
  std::map<std::string, std::string> parts;
  for (zip::Entry& e : zip::read(bytes)) parts[e.name] = std::move(e.data);
  auto part = [&](const std::string& name) -> const std::string& {
    const auto it = parts.find(name);
    if (it == parts.end()) unparseable("workbook part missing: " + name);
    return it->second;
  };
  const auto book = parse_xml(part("xl/workbook.xml"));
  const auto rels = parse_xml(part("xl/_rels/workbook.xml.rels"));
  std::map<std::string, std::string> targets;
  for (const auto& r : rels->kids) targets[r->attr("Id")] = resolve_target(r->attr("Target"));

  std::vector<std::string> shared;
  if (parts.count("xl/sharedStrings.xml"))
    for (const auto& si : parse_xml(parts["xl/sharedStrings.xml"])->kids) {
      std::string s;
      si->collect_t(s);
      shared.push_back(s);
    }

  std::vector<Sheet> out;
  const XNode* sheets = book->child("sheets");
  if (!sheets) unparseable("workbook has no sheets");
  for (const auto& sh : sheets->kids) {
    Sheet sheet;
    sheet.name = sh->attr("name");
    const auto ws = parse_xml(part(targets[sh->attr("id")]));
    const XNode* data = ws->child("sheetData");
    if (!data) unparseable("worksheet has no sheetData");
    for (const auto& row : data->kids) {
      std::size_t r = sheet.cells.size();
      if (const std::string ra = row->attr("r"); !ra.empty()) r = std::stoul(ra) - 1;
      if (r < sheet.cells.size() || r > 1048575) unparseable("rows out of order");
      sheet.cells.resize(r + 1);
      auto& cells = sheet.cells[r];
      for (const auto& c : row->kids) {
        if (c->name != "c") continue;
        std::size_t col = cells.size();
        if (auto k = column_of(c->attr("r"))) col = *k;
        if (col < cells.size() || col > 16383) unparseable("cells out of order");
        cells.resize(col + 1);
        const std::string type = c->attr("t");
        std::string value;
        if (type == "inlineStr") {
          if (const XNode* is = c->child("is")) is->collect_t(value);
        } else if (const XNode* v = c->child("v")) {
          value = v->text;
          if (type == "s") {
            const std::size_t idx = std::stoul(value);
            if (idx >= shared.size()) unparseable("shared string index out of range");
            value = shared[idx];
          } else if (type == "b") {
            value = value == "1" ? "TRUE" : "FALSE";
          }
        }
        cells[col] = value;
      }
    }
    out.push_back(std::move(sheet));
  }
  return out;
}

}  // namespace docmine::integrate
