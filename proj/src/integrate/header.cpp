#include <algorithm>
#include <regex>

#include "docmine/error.hpp"
#include "docmine/integrate.hpp"
#include "docmine/text_util.hpp"

namespace docmine::integrate {

using nlohmann::json;

namespace {

bool has_field(const HeaderConfig& h, const std::string& name) {
  return std::find(h.fields.begin(), h.fields.end(), name) != h.fields.end();
}

[[noreturn]] void unknown_field(const std::string& name) {
  fail(ErrorCode::UnknownField, "no header field " + name, {{"field", name}});
}

bool is_xlsx(std::string_view bytes, std::string_view filename) {
  const auto ends = [&](std::string_view suf) {
    return filename.size() >= suf.size() &&
           text::case_fold(filename.substr(filename.size() - suf.size())) == suf;
  };
  return bytes.substr(0, 4) == std::string_view("PK\x03\x04", 4) || ends(".xlsx");
}

}  // namespace

void validate(const HeaderConfig& h) {
  std::vector<std::string> seen;
  for (const std::string& f : h.fields) {
    if (text::collapse_whitespace(f).empty()) fail(ErrorCode::ValidationError, "field names must not be empty");
    if (std::find(seen.begin(), seen.end(), f) != seen.end())
      fail(ErrorCode::DuplicateField, "duplicate field " + f, {{"field", f}});
    seen.push_back(f);
  }
  if (!h.fields.empty() && !has_field(h, h.key_field))
    fail(ErrorCode::ValidationError, "key field must be one of the fields", {{"key_field", h.key_field}});
}

std::string header_key(std::string_view s) {
  static const std::regex units(R"(\([^()]*\))");
  return text::comparison_key(std::regex_replace(std::string(s), units, " "));
}

HeaderConfig header_from_spreadsheet(std::string_view bytes, std::string_view filename) {
  Grid grid;
  if (is_xlsx(bytes, filename)) {
    const auto sheets = parse_xlsx(bytes);
    if (!sheets.empty()) grid = sheets[0].cells;
  } else {
    grid = parse_csv(bytes);
  }
  HeaderConfig h;
  if (!grid.empty())
    for (const std::string& cell : grid[0]) {
      const std::string name = text::collapse_whitespace(cell);
      if (!name.empty() && !has_field(h, name)) h.fields.push_back(name);
    }
  if (h.fields.empty()) fail(ErrorCode::EmptyHeaderRow, "the first row has no field names");
  h.key_field = h.fields.front();
  return h;
}

HeaderConfig edit_header(HeaderConfig h, const std::vector<HeaderEdit>& batch) {
  bool key_removed = false;
  for (const HeaderEdit& e : batch) {
    if (const auto* add = std::get_if<AddField>(&e)) {
      const std::string name = text::collapse_whitespace(add->name);
      if (name.empty()) fail(ErrorCode::ValidationError, "field names must not be empty");
      if (has_field(h, name)) fail(ErrorCode::DuplicateField, "duplicate field " + name, {{"field", name}});
      const int n = static_cast<int>(h.fields.size());
      const int pos = add->position.value_or(n);
      if (pos < 0 || pos > n)
        fail(ErrorCode::ValidationError, "position out of range", {{"position", pos}});
      h.fields.insert(h.fields.begin() + pos, name);
      if (h.fields.size() == 1 && h.key_field.empty()) h.key_field = name;
    } else if (const auto* rm = std::get_if<RemoveField>(&e)) {
      const auto it = std::find(h.fields.begin(), h.fields.end(), rm->name);
      if (it == h.fields.end()) unknown_field(rm->name);
      h.fields.erase(it);
      if (rm->name == h.key_field) {
        key_removed = true;
        h.key_field.clear();
      }
    } else {
      const std::string& name = std::get<SetKey>(e).name;
      if (!has_field(h, name)) unknown_field(name);
      h.key_field = name;
      key_removed = false;
    }
  }
  if (key_removed) fail(ErrorCode::KeyRemoved, "the key field was removed without naming a new key");
  return h;
}

HeaderEdit parse_header_edit(const json& j) {
  try {
    const std::string op = j.at("op").get<std::string>();
    if (op == "add") {
      AddField a{j.at("name").get<std::string>(), std::nullopt};
      if (j.contains("position") && !j["position"].is_null()) a.position = j["position"].get<int>();
      return a;
    }
    if (op == "remove") return RemoveField{j.at("name").get<std::string>()};
    if (op == "set_key") return SetKey{j.at("name").get<std::string>()};
    fail(ErrorCode::ValidationError, "unknown header edit: " + op);
  } catch (const json::exception& e) {
    fail(ErrorCode::ValidationError, std::string("bad header edit: ") + e.what());
  }
}

ColumnMapping infer_column_mapping(const Grid& values, const HeaderConfig& h) {
  ColumnMapping m;
  if (values.empty()) return m;
  std::vector<std::string> used;
  for (std::size_t c = 0; c < values[0].size(); ++c) {
    const std::string k = header_key(values[0][c]);
    std::optional<std::string> hit;
    if (!k.empty())
      for (const std::string& f : h.fields)
        if (header_key(f) == k) {
          hit = f;
          break;
        }
    if (hit && std::find(used.begin(), used.end(), *hit) != used.end()) {
      m.warnings.push_back("column " + std::to_string(c) + " (\"" + values[0][c] + "\") also matches field \"" +
                           *hit + "\"; ignored");
      hit.reset();
    }
    if (hit) used.push_back(*hit);
    m.columns.push_back(hit);
  }
  return m;
}

void check_mapping(const ColumnMapping& m, const HeaderConfig& h, std::size_t columns) {
  if (m.columns.size() > columns)
    fail(ErrorCode::ValidationError, "mapping has more entries than the table has columns");
  std::vector<std::string> used;
  for (const auto& f : m.columns) {
    if (!f) continue;
    if (!has_field(h, *f)) unknown_field(*f);
    if (std::find(used.begin(), used.end(), *f) != used.end())
      fail(ErrorCode::DuplicateField, "field mapped twice: " + *f, {{"field", *f}});
    used.push_back(*f);
  }
}

void to_json(json& j, const HeaderConfig& h) { j = {{"fields", h.fields}, {"key_field", h.key_field}}; }

void from_json(const json& j, HeaderConfig& h) {
  h.fields = j.at("fields").get<std::vector<std::string>>();
  h.key_field = j.value("key_field", h.fields.empty() ? "" : h.fields.front());
}

void to_json(json& j, const ColumnMapping& m) {
  json cols = json::array();
  for (const auto& c : m.columns) cols.push_back(c ? json(*c) : json(nullptr));
  j = {{"columns", cols}, {"warnings", m.warnings}};
}

void from_json(const json& j, ColumnMapping& m) {
  m.columns.clear();
  for (const json& c : j.at("columns"))
    m.columns.push_back(c.is_null() ? std::nullopt : std::optional(c.get<std::string>()));
  m.warnings = j.value("warnings", std::vector<std::string>{});
}

}  // namespace docmine::integrate
