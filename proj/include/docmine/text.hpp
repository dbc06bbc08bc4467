#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "docmine/correction.hpp"
#include "docmine/pattern.hpp"
#include "docmine/pdf.hpp"

namespace docmine::text {

enum class SectionKind { Body, Caption };

struct Section {
  int index = 0;
  std::string heading;  // empty for captions and untitled text
  std::string text;     // offsets count code points of this string
  SectionKind kind = SectionKind::Body;
  int page_index = 0;   // page where the section starts

  friend bool operator==(const Section&, const Section&) = default;
};

// Reading-order sections: body text grouped under headings, captions as their
// own sections. Front matter before the first heading, table regions and map
// labels are excluded.
std::vector<Section> extract_sections(const std::vector<pdf::PageModel>& pages);

struct Rule {
  std::optional<std::string> pattern;
  std::vector<std::string> gazetteer;  // exact terms, matched at word edges
  bool ignore_case = false;

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct LabelConfig {
  std::string label;
  std::vector<Rule> rules;
  bool visible = true;
  std::optional<std::string> linked_field;

  friend bool operator==(const LabelConfig&, const LabelConfig&) = default;
};

// Compiles every rule and checks label names are unique and non-empty.
// Throws InvalidRule (bad pattern, empty rule) or ValidationError (names).
void validate_labels(const std::vector<LabelConfig>& configs);

enum class SpanSource { Auto, Manual };

struct EntitySpan {
  std::string span_id;
  std::string doc_id;
  int section_index = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;
  std::string text;
  SpanSource source = SpanSource::Auto;
  std::optional<std::string> linked_field;
  bool stale = false;  // section text no longer matches

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

// Per label, leftmost-longest non-overlapping matches of the union of its
// rules. Spans come without ids, ordered by section, label order, start.
std::vector<EntitySpan> auto_annotate(const std::vector<Section>& sections,
                                      const std::vector<LabelConfig>& configs,
                                      const std::string& doc_id = "");

// Replaces the auto spans with a fresh annotation. Manual spans are kept.
// An auto span found again at the same place keeps its id and link. New spans
// get ids from next_id.
template <typename NextId>
std::vector<EntitySpan> reannotate(const std::vector<EntitySpan>& current,
                                   const std::vector<Section>& sections,
                                   const std::vector<LabelConfig>& configs,
                                   const std::string& doc_id, NextId next_id);

// Validates and builds a manual span; an existing span with the same range
// and label is returned instead. Throws InvalidOffsets or UnknownLabel.
EntitySpan make_manual_span(const std::vector<EntitySpan>& current,
                            const std::vector<Section>& sections,
                            const std::vector<LabelConfig>& configs, const std::string& doc_id,
                            int section_index, std::size_t start, std::size_t end,
                            const std::string& label, bool* existed = nullptr);

// Removes a span; deleting an auto span yields a negative-feedback entry.
// Throws UnknownSpan.
std::optional<Correction> delete_span(std::vector<EntitySpan>& spans, const std::string& span_id);

// field empty/absent unlinks. Throws UnknownSpan or UnknownField.
const EntitySpan& link_span(std::vector<EntitySpan>& spans, const std::string& span_id,
                            const std::optional<std::string>& field,
                            const std::vector<std::string>& header_fields);

// Flags spans whose section is gone or whose text no longer matches. Returns
// the number of stale spans.
int mark_stale(std::vector<EntitySpan>& spans, const std::vector<Section>& sections);

// Spans of visible labels; a pure filter.
std::vector<EntitySpan> visible_spans(const std::vector<EntitySpan>& spans,
                                      const std::vector<LabelConfig>& configs);

std::string kind_name(SectionKind k);
std::string source_name(SpanSource s);

void to_json(nlohmann::json& j, const Section& s);
void from_json(const nlohmann::json& j, Section& s);
void to_json(nlohmann::json& j, const Rule& r);
void from_json(const nlohmann::json& j, Rule& r);
void to_json(nlohmann::json& j, const LabelConfig& c);
void from_json(const nlohmann::json& j, LabelConfig& c);
void to_json(nlohmann::json& j, const EntitySpan& s);
void from_json(const nlohmann::json& j, EntitySpan& s);

// --- template definitions -----------------------------------------------------

template <typename NextId>
std::vector<EntitySpan> reannotate(const std::vector<EntitySpan>& current,
                                   const std::vector<Section>& sections,
                                   const std::vector<LabelConfig>& configs,
                                   const std::string& doc_id, NextId next_id) {
  std::vector<EntitySpan> out;
  for (const EntitySpan& s : current)
    if (s.source == SpanSource::Manual) out.push_back(s);
  for (EntitySpan& fresh : auto_annotate(sections, configs, doc_id)) {
    bool kept = false;
    for (const EntitySpan& old : current)
      if (old.source == SpanSource::Auto && old.section_index == fresh.section_index &&
          old.start == fresh.start && old.end == fresh.end && old.label == fresh.label) {
        fresh.span_id = old.span_id;
        fresh.linked_field = old.linked_field;
        kept = true;
        break;
      }
    if (!kept) fresh.span_id = next_id();
    out.push_back(std::move(fresh));
  }
  return out;
}

}  // namespace docmine::text
