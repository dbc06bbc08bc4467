#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "docmine/pdf.hpp"

namespace docmine::meta {

// Every field is optional so that the same type can carry a partial
// extractor output. A saved record must have a non-empty title.
struct MetaRecord {
  std::optional<std::string> title;
  std::optional<std::vector<std::string>> authors;
  std::optional<std::string> venue;
  std::optional<int> year;
  std::optional<std::string> doi;
  std::optional<std::string> abstract;
  bool edited_by_user = false;

  friend bool operator==(const MetaRecord&, const MetaRecord&) = default;
};

struct SourceCandidate {
  std::string source_id;
  int priority = 0;  // lower is more trusted
  MetaRecord fields;

  friend bool operator==(const SourceCandidate&, const SourceCandidate&) = default;
};

// Throws ValidationError: year outside [1500, 2100], empty author names,
// and (when require_title) a missing or blank title.
void validate(const MetaRecord& r, bool require_title);

// Trims and collapses whitespace in every text field; drops fields that end
// up empty.
MetaRecord tidy(MetaRecord r);

// Built-in extractor over the first page.
MetaRecord heuristic_meta(const std::vector<pdf::PageModel>& pages);

class Adapter {
 public:
  virtual ~Adapter() = default;
  virtual std::string id() const = 0;
  virtual int priority() const = 0;
  // May throw; the caller skips a failing adapter.
  virtual MetaRecord extract(const pdf::DocumentSource& doc) const = 0;
};

// POSTs the PDF bytes (application/pdf) to url and reads a JSON object with
// the MetaRecord fields from the response.
class HttpAdapter : public Adapter {
 public:
  HttpAdapter(std::string id, std::string url, int priority,
              std::chrono::milliseconds timeout = std::chrono::seconds(30));
  std::string id() const override { return id_; }
  int priority() const override { return priority_; }
  MetaRecord extract(const pdf::DocumentSource& doc) const override;

 private:
  std::string id_;
  std::string url_;
  int priority_;
  std::chrono::milliseconds timeout_;
};

// Strict parse of an adapter payload. Throws ValidationError.
MetaRecord parse_payload(const nlohmann::json& j);

inline constexpr const char* kBuiltinSource = "builtin";

// The built-in candidate (priority builtin_priority) first, then one per
// adapter that answered with a valid payload.
std::vector<SourceCandidate> extract_meta_candidates(
    const pdf::DocumentSource& doc, const std::vector<pdf::PageModel>& pages,
    const std::vector<std::shared_ptr<const Adapter>>& adapters = {}, int builtin_priority = 0);

// Per field: a value supplied by more than half of the candidates that supply
// the field wins; otherwise the value of the most trusted candidate does.
// Values compare after NFC, whitespace collapse and case folding; author lists
// compare as whole lists. Throws NoCandidates.
MetaRecord vote_merge(const std::vector<SourceCandidate>& candidates);

void to_json(nlohmann::json& j, const MetaRecord& r);
void from_json(const nlohmann::json& j, MetaRecord& r);
void to_json(nlohmann::json& j, const SourceCandidate& c);
void from_json(const nlohmann::json& j, SourceCandidate& c);

}  // namespace docmine::meta
