#include <algorithm>
#include <cmath>
#include <map>
#include <regex>

#include <httplib.h>

#include "docmine/error.hpp"
#include "docmine/metadata.hpp"
#include "docmine/text_util.hpp"
#include "layout/layout.hpp"

namespace docmine::meta {

using nlohmann::json;

namespace {

bool same_size(double a, double b) { return std::abs(a - b) <= 0.5; }

std::optional<std::string> tidy_text(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  std::string t = text::collapse_whitespace(*s);
  if (t.empty()) return std::nullopt;
  return t;
}

bool is_doi_line(const std::string& s) {
  const std::string k = text::case_fold(s);
  return k.rfind("doi", 0) == 0 || k.find("doi.org/") != std::string::npos;
}

std::optional<std::string> find_doi(const std::string& s) {
  static const std::regex re(R"(10\.\d{4,9}/[^\s"<>]+)");
  std::smatch m;
  if (!std::regex_search(s, m, re)) return std::nullopt;
  std::string doi = m.str();
  while (!doi.empty() && std::string(".,;)]").find(doi.back()) != std::string::npos) doi.pop_back();
  return doi;
}

std::optional<int> find_year(const std::string& s) {
  static const std::regex re(R"((^|[^0-9])([0-9]{4})(?![0-9]))");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    const int y = std::stoi((*it)[2].str());
    if (y >= 1500 && y <= 2100) return y;
  }
  return std::nullopt;
}

// "A. One, B. Two and C. Three" -> names; affiliation marks are stripped.
std::vector<std::string> split_authors(const std::string& s) {
  static const std::regex sep(R"(\s*(?:,|;|&|\band\b)\s*)");
  std::vector<std::string> out;
  for (std::sregex_token_iterator it(s.begin(), s.end(), sep, -1), end; it != end; ++it) {
    std::string name = text::collapse_whitespace(it->str());
    while (!name.empty() && (std::isdigit(static_cast<unsigned char>(name.back())) || name.back() == '*'))
      name.pop_back();
    name = text::collapse_whitespace(name);
    if (!name.empty()) out.push_back(name);
  }
  return out;
}

bool starts_with_abstract(const std::string& line) {
  return text::case_fold(line).rfind("abstract", 0) == 0;
}

std::string comparison_key(const std::vector<std::string>& authors) {
  std::string k;
  for (const std::string& a : authors) k += text::comparison_key(a) + '\x1f';
  return k;
}

template <typename T, typename Get, typename Key>
std::optional<T> vote(const std::vector<const SourceCandidate*>& by_trust, Get get, Key key) {
  struct Tally {
    int count = 0;
    const T* first = nullptr;  // most trusted supplier's value
  };
  std::map<std::string, Tally> tally;
  int supplied = 0;
  const T* fallback = nullptr;
  for (const SourceCandidate* c : by_trust) {
    const std::optional<T>& v = get(c->fields);
    if (!v) continue;
    ++supplied;
    if (!fallback) fallback = &*v;
    Tally& t = tally[key(*v)];
    ++t.count;
    if (!t.first) t.first = &*v;
  }
  if (!supplied) return std::nullopt;
  for (const auto& [k, t] : tally)
    if (2 * t.count > supplied) return *t.first;
  return *fallback;
}

std::optional<std::string> text_field(const json& j, const char* name) {
  if (!j.contains(name) || j[name].is_null()) return std::nullopt;
  if (!j[name].is_string()) fail(ErrorCode::ValidationError, std::string(name) + " must be text");
  return j[name].get<std::string>();
}

}  // namespace

void validate(const MetaRecord& r, bool require_title) {
  if (require_title && (!r.title || text::collapse_whitespace(*r.title).empty()))
    fail(ErrorCode::ValidationError, "title must not be empty", {{"field", "title"}});
  if (r.year && (*r.year < 1500 || *r.year > 2100))
    fail(ErrorCode::ValidationError, "year must lie in [1500, 2100]",
         {{"field", "year"}, {"value", *r.year}});
  if (r.authors)
    for (const std::string& a : *r.authors)
      if (text::collapse_whitespace(a).empty())
        fail(ErrorCode::ValidationError, "author names must not be empty", {{"field", "authors"}});
}

MetaRecord tidy(MetaRecord r) {
  r.title = tidy_text(r.title);
  r.venue = tidy_text(r.venue);
  r.doi = tidy_text(r.doi);
  r.abstract = tidy_text(r.abstract);
  if (r.authors) {
    std::vector<std::string> names;
    for (const std::string& a : *r.authors)
      if (auto t = tidy_text(a)) names.push_back(*t);
    r.authors = names.empty() ? std::nullopt : std::optional(names);
  }
  return r;
}

// --- built-in extractor -------------------------------------------------------

MetaRecord heuristic_meta(const std::vector<pdf::PageModel>& pages) {
  MetaRecord r;
  if (pages.empty() || pages[0].text_runs.empty()) return r;
  const pdf::PageModel& page = pages[0];
  const auto lines = layout::group_lines(page.text_runs);
  std::vector<std::string> texts;
  for (const auto& l : lines) texts.push_back(layout::line_text(page.text_runs, l));

  double top = 0;
  for (const auto& l : lines) top = std::max(top, l.font_size);
  std::size_t t0 = 0;
  while (!same_size(lines[t0].font_size, top)) ++t0;
  std::size_t t1 = t0;
  while (t1 < lines.size() && same_size(lines[t1].font_size, top)) ++t1;
  std::vector<std::string> title(texts.begin() + static_cast<long>(t0), texts.begin() + static_cast<long>(t1));
  r.title = text::join(title, " ");

  std::size_t abs_at = t1;
  while (abs_at < lines.size() && !starts_with_abstract(texts[abs_at])) ++abs_at;

  // Front matter between title and abstract: the first block of same-size
  // lines names the authors, the next non-DOI block the venue.
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t i = t1; i < abs_at; ++i) {
    if (is_doi_line(texts[i])) continue;
    if (blocks.empty() || !same_size(lines[blocks.back().back()].font_size, lines[i].font_size) ||
        blocks.back().back() + 1 != i)
      blocks.emplace_back();
    blocks.back().push_back(i);
  }
  auto block_text = [&](const std::vector<std::size_t>& b) {
    std::vector<std::string> parts;
    for (std::size_t i : b) parts.push_back(texts[i]);
    return text::join(parts, " ");
  };
  if (!blocks.empty()) {
    auto names = split_authors(block_text(blocks[0]));
    if (!names.empty()) r.authors = names;
  }
  if (blocks.size() > 1) r.venue = block_text(blocks[1]);

  std::string front;
  for (std::size_t i = t1; i < abs_at; ++i) front += texts[i] + "\n";
  r.year = find_year(front);
  if (!r.year) r.year = find_year(*r.title);
  std::string all;
  for (const auto& t : texts) all += t + "\n";
  r.doi = find_doi(all);

  if (abs_at < lines.size()) {
    std::vector<std::string> body;
    std::string first = texts[abs_at].substr(std::string("abstract").size());
    first = text::collapse_whitespace(first);
    if (!first.empty() && (first[0] == ':' || first[0] == '.' || first[0] == '-'))
      first = text::collapse_whitespace(first.substr(1));
    if (!first.empty()) body.push_back(first);
    // An inline abstract continues at the heading size; otherwise the body
    // size is taken from the first line after the heading.
    const double size = !first.empty() || abs_at + 1 >= lines.size()
                            ? lines[abs_at].font_size
                            : lines[abs_at + 1].font_size;
    for (std::size_t i = abs_at + 1; i < lines.size(); ++i) {
      if (!same_size(lines[i].font_size, size)) break;
      const double gap = lines[i].box.y0 - lines[i - 1].box.y1;
      if (i > abs_at + 1 && gap > 1.5 * lines[i].box.height()) break;
      body.push_back(texts[i]);
    }
    if (!body.empty()) r.abstract = text::join(body, " ");
  }
  return tidy(std::move(r));
}

// --- adapters -----------------------------------------------------------------

HttpAdapter::HttpAdapter(std::string id, std::string url, int priority,
                         std::chrono::milliseconds timeout)
    : id_(std::move(id)), url_(std::move(url)), priority_(priority), timeout_(timeout) {}

MetaRecord HttpAdapter::extract(const pdf::DocumentSource& doc) const {
  static const std::regex re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url_, m, re)) fail(ErrorCode::ValidationError, "unsupported adapter url: " + url_);
  httplib::Client cli(m[1].str());
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  const std::string path = m[2].matched ? m[2].str() : "/";
  auto res = cli.Post(path, doc.bytes, "application/pdf");
  if (!res) fail(ErrorCode::Internal, "adapter " + id_ + " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    fail(ErrorCode::Internal, "adapter " + id_ + " answered " + std::to_string(res->status));
  const json j = json::parse(res->body, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ValidationError, "adapter " + id_ + " sent malformed JSON");
  return parse_payload(j);
}

MetaRecord parse_payload(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ValidationError, "payload must be an object");
  MetaRecord r;
  r.title = text_field(j, "title");
  r.venue = text_field(j, "venue");
  r.doi = text_field(j, "doi");
  r.abstract = text_field(j, "abstract");
  if (j.contains("authors") && !j["authors"].is_null()) {
    const json& a = j["authors"];
    if (!a.is_array()) fail(ErrorCode::ValidationError, "authors must be a list");
    std::vector<std::string> names;
    for (const json& n : a) {
      if (!n.is_string()) fail(ErrorCode::ValidationError, "author names must be text");
      names.push_back(n.get<std::string>());
    }
    r.authors = names;
  }
  if (j.contains("year") && !j["year"].is_null()) {
    const json& y = j["year"];
    if (y.is_number_integer()) r.year = y.get<int>();
    else if (y.is_string() && std::regex_match(y.get<std::string>(), std::regex("[0-9]{4}")))
      r.year = std::stoi(y.get<std::string>());
    else fail(ErrorCode::ValidationError, "year must be an integer");
  }
  r = tidy(std::move(r));
  validate(r, false);
  return r;
}

std::vector<SourceCandidate> extract_meta_candidates(
    const pdf::DocumentSource& doc, const std::vector<pdf::PageModel>& pages,
    const std::vector<std::shared_ptr<const Adapter>>& adapters, int builtin_priority) {
  std::vector<SourceCandidate> out{{kBuiltinSource, builtin_priority, heuristic_meta(pages)}};
  for (const auto& ad : adapters) {
    try {
      out.push_back({ad->id(), ad->priority(), ad->extract(doc)});
    } catch (const std::exception&) {
      // a failing extractor only means fewer votes
    }
  }
  return out;
}

// --- voting -------------------------------------------------------------------

MetaRecord vote_merge(const std::vector<SourceCandidate>& candidates) {
  if (candidates.empty()) fail(ErrorCode::NoCandidates, "no metadata candidates");
  std::vector<SourceCandidate> tidied;
  for (const SourceCandidate& c : candidates) tidied.push_back({c.source_id, c.priority, tidy(c.fields)});
  std::vector<const SourceCandidate*> by_trust;
  for (const SourceCandidate& c : tidied) by_trust.push_back(&c);
  std::sort(by_trust.begin(), by_trust.end(), [](const SourceCandidate* a, const SourceCandidate* b) {
    return std::tie(a->priority, a->source_id) < std::tie(b->priority, b->source_id);
  });
  auto str_key = [](const std::string& s) { return text::comparison_key(s); };
  MetaRecord r;
  r.title = vote<std::string>(by_trust, [](const MetaRecord& m) -> auto& { return m.title; }, str_key);
  r.venue = vote<std::string>(by_trust, [](const MetaRecord& m) -> auto& { return m.venue; }, str_key);
  r.doi = vote<std::string>(by_trust, [](const MetaRecord& m) -> auto& { return m.doi; }, str_key);
  r.abstract = vote<std::string>(by_trust, [](const MetaRecord& m) -> auto& { return m.abstract; }, str_key);
  r.authors = vote<std::vector<std::string>>(
      by_trust, [](const MetaRecord& m) -> auto& { return m.authors; },
      [](const std::vector<std::string>& a) { return comparison_key(a); });
  r.year = vote<int>(by_trust, [](const MetaRecord& m) -> auto& { return m.year; },
                     [](int y) { return std::to_string(y); });
  return r;
}

// --- json ---------------------------------------------------------------------

void to_json(json& j, const MetaRecord& r) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  j = {{"title", opt(r.title)},   {"authors", r.authors ? json(*r.authors) : json::array()},
       {"venue", opt(r.venue)},   {"year", opt(r.year)},
       {"doi", opt(r.doi)},       {"abstract", opt(r.abstract)},
       {"edited_by_user", r.edited_by_user}};
}

void from_json(const json& j, MetaRecord& r) {
  r = parse_payload(j);
  r.edited_by_user = j.value("edited_by_user", false);
}

void to_json(json& j, const SourceCandidate& c) {
  j = {{"source_id", c.source_id}, {"priority", c.priority}, {"fields", c.fields}};
}

void from_json(const json& j, SourceCandidate& c) {
  c.source_id = j.at("source_id").get<std::string>();
  c.priority = j.at("priority").get<int>();
  c.fields = j.at("fields").get<MetaRecord>();
}

}  // namespace docmine::meta
