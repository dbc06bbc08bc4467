#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "docmine/metadata.hpp"

namespace docmine::integrate {

inline constexpr const char* kMetadataId = "Metadata ID";
inline constexpr const char* kReferenceId = "Reference ID";

struct HeaderConfig {
  std::vector<std::string> fields;
  std::string key_field;

  friend bool operator==(const HeaderConfig&, const HeaderConfig&) = default;
};

// Throws ValidationError (empty or duplicate names, key not a field).
void validate(const HeaderConfig& h);

using Grid = std::vector<std::vector<std::string>>;

// First row of a CSV or XLSX file (first sheet). Throws UnparseableFile or
// EmptyHeaderRow.
HeaderConfig header_from_spreadsheet(std::string_view bytes, std::string_view filename = "");

struct AddField {
  std::string name;
  std::optional<int> position;  // end when absent
};
struct RemoveField {
  std::string name;
};
struct SetKey {
  std::string name;
};
using HeaderEdit = std::variant<AddField, RemoveField, SetKey>;

// Applies a batch atomically. Removing the key is allowed only when a later
// SetKey in the same batch designates a new one. Throws DuplicateField,
// UnknownField or KeyRemoved.
HeaderConfig edit_header(HeaderConfig h, const std::vector<HeaderEdit>& batch);
HeaderEdit parse_header_edit(const nlohmann::json& j);

// Header matching key: case fold, drop parenthesized units, collapse spaces.
std::string header_key(std::string_view s);

struct ColumnMapping {
  std::vector<std::optional<std::string>> columns;  // per table column
  std::vector<std::string> warnings;

  friend bool operator==(const ColumnMapping&, const ColumnMapping&) = default;
};

ColumnMapping infer_column_mapping(const Grid& values, const HeaderConfig& h);
// Checks a user override: fields exist, each used once. Throws UnknownField
// or DuplicateField.
void check_mapping(const ColumnMapping& m, const HeaderConfig& h, std::size_t columns);

struct TableInput {
  std::string table_id;
  std::int64_t confirmed_at = 0;
  Grid values;  // first row is the header row
  ColumnMapping mapping;
};

struct SpanInput {
  std::string span_id;
  std::string field;
  std::string text;
};

struct PointInput {
  std::string point_id;
  std::optional<std::string> key;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct DocumentInput {
  std::string doc_id;
  std::string metadata_id;
  std::vector<TableInput> tables;
  std::vector<SpanInput> spans;  // linked spans only
  std::vector<PointInput> points;
};

// Per cell: null when empty, else {"source": table|span|point|meta,
// "ids": [...]} plus "conflicts": [{"id", "value"}] when values disagreed.
using Provenance = nlohmann::json;

struct DocumentDataset {
  std::string doc_id;
  std::vector<std::string> columns;  // header fields + Metadata ID
  Grid rows;
  std::vector<std::vector<Provenance>> provenance;
  std::vector<std::string> warnings;

  friend bool operator==(const DocumentDataset&, const DocumentDataset&) = default;
};

// Throws NoHeaderConfig or KeyFieldUnmapped.
DocumentDataset build_document_rows(const DocumentInput& doc, const HeaderConfig* header);

struct Reference {
  int reference_id = 0;
  std::string doc_id;
  meta::MetaRecord meta;

  friend bool operator==(const Reference&, const Reference&) = default;
};

struct ProjectDataset {
  std::vector<std::string> columns;  // header fields + Reference ID
  Grid rows;
  std::vector<Reference> references;

  friend bool operator==(const ProjectDataset&, const ProjectDataset&) = default;
};

// docs in import order, metas aligned with docs. Throws HeaderMismatch.
ProjectDataset integrate_project(const std::vector<DocumentDataset>& docs,
                                 const std::vector<meta::MetaRecord>& metas,
                                 const HeaderConfig& header);

// Plain "Authors (Year). Title. Venue. doi:..." line.
std::string citation(const meta::MetaRecord& m);

// --- files -------------------------------------------------------------------

std::string to_csv(const Grid& grid);
Grid parse_csv(std::string_view bytes);  // throws UnparseableFile

struct Sheet {
  std::string name;
  Grid cells;
};
std::string to_xlsx(const std::vector<Sheet>& sheets);
std::vector<Sheet> parse_xlsx(std::string_view bytes);  // throws UnparseableFile

// Values sheet (columns + rows) and, for xlsx, a "References" sheet.
std::string export_document(const DocumentDataset& d, const meta::MetaRecord* meta,
                            std::string_view format);
std::string export_project(const ProjectDataset& p, std::string_view format);

void to_json(nlohmann::json& j, const HeaderConfig& h);
void from_json(const nlohmann::json& j, HeaderConfig& h);
void to_json(nlohmann::json& j, const ColumnMapping& m);
void from_json(const nlohmann::json& j, ColumnMapping& m);
void to_json(nlohmann::json& j, const DocumentDataset& d);
void from_json(const nlohmann::json& j, DocumentDataset& d);
void to_json(nlohmann::json& j, const ProjectDataset& p);

}  // namespace docmine::integrate
