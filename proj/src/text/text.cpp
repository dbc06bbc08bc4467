#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <unordered_map>

#include <unicode/uchar.h>

#include "docmine/error.hpp"
#include "docmine/map.hpp"
#include "docmine/table.hpp"
#include "docmine/text.hpp"
#include "docmine/text_util.hpp"
#include "layout/layout.hpp"

namespace docmine::text {

using nlohmann::json;

namespace {

bool is_caption_start(const std::string& line) {
  static const std::regex re(R"(^(Table|Fig\.?|Figure)\s*\d+[.:])");
  return std::regex_search(line, re);
}

bool starts_with_abstract(const std::string& line) {
  return case_fold(line).rfind("abstract", 0) == 0;
}

// Character-weighted mode of line font sizes, to 0.1 pt.
double body_size(const std::vector<pdf::PageModel>& pages,
                 const std::vector<std::vector<layout::Line>>& lines) {
  std::map<long, std::size_t> weight;
  for (std::size_t p = 0; p < pages.size(); ++p)
    for (const auto& l : lines[p])
      for (std::size_t i : l.runs)
        weight[std::lround(pages[p].text_runs[i].font_size * 10)] += pages[p].text_runs[i].text.size();
  if (weight.empty()) return 0;
  const auto best = std::max_element(weight.begin(), weight.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  return static_cast<double>(best->first) / 10.0;
}

std::vector<std::size_t> prose_runs(const pdf::PageModel& page) {
  const auto tables = table::detect_regions(page);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < page.text_runs.size(); ++i) {
    const pdf::TextRun& r = page.text_runs[i];
    const Point c = r.bbox.center();
    if (std::any_of(tables.begin(), tables.end(), [&](const BBox& t) { return t.contains(c); })) continue;
    bool image_text = false;
    for (const BBox& img : page.image_regions)
      if (img.contains(c) || (box_distance(img, r.bbox) <= 12.0 && map::is_degree_label(r.text)))
        image_text = true;
    if (!image_text) keep.push_back(i);
  }
  return keep;
}

struct Matcher {
  std::vector<Pattern> patterns;
  // Gazetteer terms keyed by their first (folded) code point.
  std::unordered_map<char32_t, std::vector<std::pair<std::u32string, bool>>> terms;
};

char32_t fold_cp(char32_t c) {
  return static_cast<char32_t>(u_foldCase(static_cast<UChar32>(c), U_FOLD_CASE_DEFAULT));
}

Matcher compile(const LabelConfig& cfg) {
  Matcher m;
  for (const Rule& r : cfg.rules) {
    if (!r.pattern && r.gazetteer.empty())
      fail(ErrorCode::InvalidRule, "rule of label " + cfg.label + " has neither pattern nor gazetteer");
    if (r.pattern) {
      try {
        m.patterns.emplace_back(*r.pattern, r.ignore_case);
      } catch (const Error& e) {
        json d = e.detail();
        d["label"] = cfg.label;
        d["pattern"] = *r.pattern;
        fail(ErrorCode::InvalidRule, e.what(), d);
      }
    }
    for (const std::string& t : r.gazetteer) {
      std::u32string term = to_u32(nfc(collapse_whitespace(t)));
      if (term.empty()) fail(ErrorCode::InvalidRule, "empty gazetteer term in label " + cfg.label);
      const char32_t k = r.ignore_case ? fold_cp(term[0]) : term[0];
      m.terms[k].push_back({std::move(term), r.ignore_case});
    }
  }
  return m;
}

bool term_at(std::u32string_view text, std::size_t pos, const std::u32string& term, bool fold) {
  if (pos + term.size() > text.size()) return false;
  for (std::size_t k = 0; k < term.size(); ++k) {
    const char32_t a = text[pos + k], b = term[k];
    if (a != b && !(fold && fold_cp(a) == fold_cp(b))) return false;
  }
  // Word edges: a term that starts or ends with a letter or digit must not
  // continue a word in the text.
  const auto alnum = [](char32_t c) { return is_alnum(c); };
  if (alnum(term.front()) && pos > 0 && alnum(text[pos - 1])) return false;
  const std::size_t end = pos + term.size();
  if (alnum(term.back()) && end < text.size() && alnum(text[end])) return false;
  return true;
}

std::optional<std::size_t> longest_at(const Matcher& m, std::u32string_view text, std::size_t pos) {
  std::optional<std::size_t> best;
  for (const Pattern& p : m.patterns)
    if (auto e = p.longest_at(text, pos); e && (!best || *e > *best)) best = e;
  for (const bool fold : {false, true}) {
    const char32_t k = fold ? fold_cp(text[pos]) : text[pos];
    const auto it = m.terms.find(k);
    if (it == m.terms.end()) continue;
    for (const auto& [term, term_fold] : it->second) {
      if (term_fold != fold) continue;
      if (term_at(text, pos, term, fold) && (!best || pos + term.size() > *best))
        best = pos + term.size();
    }
  }
  return best;
}

[[noreturn]] void unknown_span(const std::string& id) {
  fail(ErrorCode::UnknownSpan, "no span " + id, {{"span_id", id}});
}

}  // namespace

// --- sections -----------------------------------------------------------------

std::vector<Section> extract_sections(const std::vector<pdf::PageModel>& pages) {
  std::vector<std::vector<layout::Line>> lines;
  for (const auto& p : pages) {
    const auto keep = prose_runs(p);
    lines.push_back(keep.empty() ? std::vector<layout::Line>{} : layout::group_lines(p.text_runs, keep));
  }
  const double body = body_size(pages, lines);
  std::vector<Section> out;
  if (body <= 0) return out;

  // The title block (largest size at the top of the first page) is front
  // matter, not a heading.
  std::size_t title_end = 0;
  if (!lines.empty() && !lines[0].empty()) {
    double top = 0;
    for (const auto& l : lines[0]) top = std::max(top, l.font_size);
    std::size_t k = 0;
    while (std::abs(lines[0][k].font_size - top) > 0.5) ++k;
    while (k < lines[0].size() && std::abs(lines[0][k].font_size - top) <= 0.5) ++k;
    title_end = k;
  }

  bool front = true;
  int body_at = -1;     // section receiving body text
  int caption_at = -1;  // open caption
  double caption_size = 0;
  const layout::Line* prev = nullptr;
  auto append = [](Section& s, const std::string& t) {
    s.text = s.text.empty() ? t : s.text + " " + t;
  };
  auto open = [&](std::string heading, SectionKind kind, int page) {
    out.push_back({static_cast<int>(out.size()), std::move(heading), "", kind, page});
    return static_cast<int>(out.size()) - 1;
  };

  for (std::size_t p = 0; p < pages.size(); ++p) {
    for (std::size_t li = 0; li < lines[p].size(); ++li) {
      const layout::Line& line = lines[p][li];
      const std::string t = layout::line_text(pages[p].text_runs, line);
      const layout::Line* before = prev;
      prev = &line;
      if (p == 0 && li < title_end) continue;
      const bool heading = line.font_size >= body + 1.5;
      if (heading || (front && starts_with_abstract(t))) {
        front = false;
        caption_at = -1;
        if (!heading) {
          body_at = open("Abstract", SectionKind::Body, static_cast<int>(p));
          std::string rest = collapse_whitespace(t.substr(8));
          if (!rest.empty() && (rest[0] == ':' || rest[0] == '.')) rest = collapse_whitespace(rest.substr(1));
          if (!rest.empty()) append(out[static_cast<std::size_t>(body_at)], rest);
        } else {
          body_at = open(t, SectionKind::Body, static_cast<int>(p));
        }
        continue;
      }
      if (is_caption_start(t)) {
        caption_at = open("", SectionKind::Caption, static_cast<int>(p));
        caption_size = line.font_size;
        append(out[static_cast<std::size_t>(caption_at)], t);
        continue;
      }
      if (caption_at >= 0 && before && std::abs(line.font_size - caption_size) <= 0.25 &&
          out[static_cast<std::size_t>(caption_at)].page_index == static_cast<int>(p) &&
          line.box.y0 - before->box.y1 <= 0.8 * line.box.height()) {
        append(out[static_cast<std::size_t>(caption_at)], t);
        continue;
      }
      caption_at = -1;
      if (front) continue;
      if (body_at < 0) body_at = open("", SectionKind::Body, static_cast<int>(p));
      append(out[static_cast<std::size_t>(body_at)], t);
    }
  }
  return out;
}

// --- labels and annotation ----------------------------------------------------

void validate_labels(const std::vector<LabelConfig>& configs) {
  std::vector<std::string> seen;
  for (const LabelConfig& c : configs) {
    if (collapse_whitespace(c.label).empty()) fail(ErrorCode::ValidationError, "label name must not be empty");
    const std::string key = comparison_key(c.label);
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      fail(ErrorCode::ValidationError, "duplicate label " + c.label, {{"label", c.label}});
    seen.push_back(key);
    compile(c);
  }
}

std::vector<EntitySpan> auto_annotate(const std::vector<Section>& sections,
                                      const std::vector<LabelConfig>& configs,
                                      const std::string& doc_id) {
  std::vector<std::pair<const LabelConfig*, Matcher>> compiled;
  for (const LabelConfig& c : configs) compiled.emplace_back(&c, compile(c));
  std::vector<EntitySpan> out;
  for (const Section& s : sections) {
    const std::u32string text = to_u32(s.text);
    for (const auto& [cfg, m] : compiled) {
      std::size_t pos = 0;
      while (pos < text.size()) {
        const auto end = longest_at(m, text, pos);
        if (!end) {
          ++pos;
          continue;
        }
        EntitySpan span;
        span.doc_id = doc_id;
        span.section_index = s.index;
        span.start = pos;
        span.end = *end;
        span.label = cfg->label;
        span.text = to_utf8(std::u32string_view(text).substr(pos, *end - pos));
        out.push_back(std::move(span));
        pos = *end;
      }
    }
  }
  return out;
}

EntitySpan make_manual_span(const std::vector<EntitySpan>& current,
                            const std::vector<Section>& sections,
                            const std::vector<LabelConfig>& configs, const std::string& doc_id,
                            int section_index, std::size_t start, std::size_t end,
                            const std::string& label, bool* existed) {
  const auto sec = std::find_if(sections.begin(), sections.end(),
                                [&](const Section& s) { return s.index == section_index; });
  const json where{{"section_index", section_index}, {"start", start}, {"end", end}};
  if (sec == sections.end()) fail(ErrorCode::InvalidOffsets, "no such section", where);
  const std::size_t len = codepoint_count(sec->text);
  if (start >= end || end > len) fail(ErrorCode::InvalidOffsets, "offsets outside the section", where);
  if (std::none_of(configs.begin(), configs.end(), [&](const LabelConfig& c) { return c.label == label; }))
    fail(ErrorCode::UnknownLabel, "no label " + label, {{"label", label}});
  if (existed) *existed = false;
  for (const EntitySpan& s : current)
    if (s.section_index == section_index && s.start == start && s.end == end && s.label == label) {
      if (existed) *existed = true;
      return s;
    }
  EntitySpan span;
  span.doc_id = doc_id;
  span.section_index = section_index;
  span.start = start;
  span.end = end;
  span.label = label;
  span.text = substr_cp(sec->text, start, end);
  span.source = SpanSource::Manual;
  return span;
}

std::optional<Correction> delete_span(std::vector<EntitySpan>& spans, const std::string& span_id) {
  const auto it = std::find_if(spans.begin(), spans.end(),
                               [&](const EntitySpan& s) { return s.span_id == span_id; });
  if (it == spans.end()) unknown_span(span_id);
  std::optional<Correction> log;
  if (it->source == SpanSource::Auto) log = Correction{"text", "auto", "delete_span", *it, nullptr};
  spans.erase(it);
  return log;
}

const EntitySpan& link_span(std::vector<EntitySpan>& spans, const std::string& span_id,
                            const std::optional<std::string>& field,
                            const std::vector<std::string>& header_fields) {
  const auto it = std::find_if(spans.begin(), spans.end(),
                               [&](const EntitySpan& s) { return s.span_id == span_id; });
  if (it == spans.end()) unknown_span(span_id);
  if (!field || field->empty()) {
    it->linked_field.reset();
    return *it;
  }
  if (std::find(header_fields.begin(), header_fields.end(), *field) == header_fields.end())
    fail(ErrorCode::UnknownField, "no header field " + *field, {{"field", *field}});
  it->linked_field = *field;
  return *it;
}

int mark_stale(std::vector<EntitySpan>& spans, const std::vector<Section>& sections) {
  int n = 0;
  for (EntitySpan& s : spans) {
    const auto sec = std::find_if(sections.begin(), sections.end(),
                                  [&](const Section& x) { return x.index == s.section_index; });
    s.stale = sec == sections.end() || s.end > codepoint_count(sec->text) ||
              substr_cp(sec->text, s.start, s.end) != s.text;
    n += s.stale;
  }
  return n;
}

std::vector<EntitySpan> visible_spans(const std::vector<EntitySpan>& spans,
                                      const std::vector<LabelConfig>& configs) {
  std::vector<EntitySpan> out;
  for (const EntitySpan& s : spans) {
    const auto c = std::find_if(configs.begin(), configs.end(),
                                [&](const LabelConfig& l) { return l.label == s.label; });
    if (c == configs.end() || c->visible) out.push_back(s);
  }
  return out;
}

// --- json ---------------------------------------------------------------------

std::string kind_name(SectionKind k) { return k == SectionKind::Body ? "body" : "caption"; }
std::string source_name(SpanSource s) { return s == SpanSource::Auto ? "auto" : "manual"; }

void to_json(json& j, const Section& s) {
  j = {{"index", s.index}, {"heading", s.heading}, {"text", s.text},
       {"kind", kind_name(s.kind)}, {"page_index", s.page_index}};
}

void from_json(const json& j, Section& s) {
  s.index = j.at("index").get<int>();
  s.heading = j.value("heading", "");
  s.text = j.at("text").get<std::string>();
  s.kind = j.value("kind", "body") == "caption" ? SectionKind::Caption : SectionKind::Body;
  s.page_index = j.value("page_index", 0);
}

void to_json(json& j, const Rule& r) {
  j = json::object();
  if (r.pattern) j["pattern"] = *r.pattern;
  if (!r.gazetteer.empty()) j["gazetteer"] = r.gazetteer;
  if (r.ignore_case) j["ignore_case"] = true;
}

void from_json(const json& j, Rule& r) {
  if (!j.is_object()) fail(ErrorCode::InvalidRule, "rule must be an object");
  r.pattern.reset();
  if (j.contains("pattern") && !j["pattern"].is_null()) r.pattern = j["pattern"].get<std::string>();
  r.gazetteer = j.value("gazetteer", std::vector<std::string>{});
  r.ignore_case = j.value("ignore_case", false);
}

void to_json(json& j, const LabelConfig& c) {
  j = {{"label", c.label}, {"rules", c.rules}, {"visible", c.visible},
       {"linked_field", c.linked_field ? json(*c.linked_field) : json(nullptr)}};
}

void from_json(const json& j, LabelConfig& c) {
  c.label = j.at("label").get<std::string>();
  c.rules = j.value("rules", json::array()).get<std::vector<Rule>>();
  c.visible = j.value("visible", true);
  c.linked_field.reset();
  if (j.contains("linked_field") && !j["linked_field"].is_null())
    c.linked_field = j["linked_field"].get<std::string>();
}

void to_json(json& j, const EntitySpan& s) {
  j = {{"span_id", s.span_id},
       {"doc_id", s.doc_id},
       {"section_index", s.section_index},
       {"start", s.start},
       {"end", s.end},
       {"label", s.label},
       {"text", s.text},
       {"source", source_name(s.source)},
       {"linked_field", s.linked_field ? json(*s.linked_field) : json(nullptr)},
       {"stale", s.stale}};
}

void from_json(const json& j, EntitySpan& s) {
  s.span_id = j.at("span_id").get<std::string>();
  s.doc_id = j.value("doc_id", "");
  s.section_index = j.at("section_index").get<int>();
  s.start = j.at("start").get<std::size_t>();
  s.end = j.at("end").get<std::size_t>();
  s.label = j.at("label").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.source = j.value("source", "auto") == "manual" ? SpanSource::Manual : SpanSource::Auto;
  s.linked_field.reset();
  if (j.contains("linked_field") && !j["linked_field"].is_null())
    s.linked_field = j["linked_field"].get<std::string>();
  s.stale = j.value("stale", false);
}

}  // namespace docmine::text
