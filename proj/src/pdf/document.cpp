#include "pdf/document.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>

#include "docmine/error.hpp"

namespace docmine::pdf::detail {

namespace {

[[noreturn]] void malformed(const std::string& what) {
  fail(ErrorCode::MalformedPdf, "malformed PDF: " + what);
}

constexpr int kMaxTreeDepth = 64;

std::size_t rfind_in_tail(std::string_view data, std::string_view needle,
                          std::size_t tail) {
  const std::size_t from = data.size() > tail ? data.size() - tail : 0;
  const std::size_t pos = data.rfind(needle);
  if (pos == std::string_view::npos || pos < from) return std::string_view::npos;
  return pos;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

Document::Document(std::string_view data) : data_(data) {
  const std::size_t header = data_.substr(0, 1024).find("%PDF-");
  if (header == std::string_view::npos) malformed("missing %PDF header");

  bool loaded = false;
  const std::size_t sx = rfind_in_tail(data_, "startxref", 4096);
  if (sx != std::string_view::npos) {
    try {
      Lexer lx(data_, sx + 9);
      const Object off = lx.parse(false);
      if (off.is_number()) loaded = load_xref_chain(static_cast<std::size_t>(off.number()));
    } catch (const Error&) {
      loaded = false;
    }
  }
  if (!loaded || !dict_get(trailer_.get(), "Root")) {
    xref_.clear();
    cache_.clear();
    trailer_.reset();
    reconstruct();
  }
  if (!trailer_) malformed("no trailer");
  if (dict_get(trailer_.get(), "Encrypt"))
    fail(ErrorCode::EncryptedPdf, "document is password protected");

  const Dict* root = resolve_dict(dict_get(trailer_.get(), "Root"));
  if (!root) malformed("missing document catalog");
  const Object* pages = dict_get(root, "Pages");
  if (!pages) malformed("missing page tree");
  const double letter[4] = {0, 0, 612, 792};
  collect_pages(*pages, Object{}, letter, 0);
}

bool Document::load_xref_chain(std::size_t startxref) {
  std::vector<std::size_t> seen;
  std::size_t off = startxref;
  while (true) {
    if (off >= data_.size()) return false;
    if (std::find(seen.begin(), seen.end(), off) != seen.end()) break;
    seen.push_back(off);
    Lexer lx(data_, off);
    std::shared_ptr<const Dict> section_trailer;
    if (lx.peek_word() == "xref") {
      load_xref_table(lx);
      lx.skip_ws();
      if (lx.peek_word() != "trailer") return false;
      lx.seek(lx.pos() + 7);
      const Object t = lx.parse();
      auto* sp = std::get_if<std::shared_ptr<const Dict>>(&t.v);
      if (!sp) return false;
      section_trailer = *sp;
      // Hybrid files carry an additional xref stream.
      if (const Object* xs = dict_get(section_trailer.get(), "XRefStm");
          xs && xs->is_number()) {
        const Object sobj = parse_indirect_at(static_cast<std::size_t>(xs->number()), -1);
        load_xref_stream(sobj);
      }
    } else {
      const Object sobj = parse_indirect_at(off, -1);
      const Stream* s = sobj.stream();
      if (!s || !dict_get(s->dict.get(), "Type") ||
          !dict_get(s->dict.get(), "Type")->is_name("XRef"))
        return false;
      load_xref_stream(sobj);
      section_trailer = s->dict;
    }
    if (!trailer_) trailer_ = section_trailer;
    const Object* prev = dict_get(section_trailer.get(), "Prev");
    if (!prev || !prev->is_number()) break;
    off = static_cast<std::size_t>(prev->number());
  }
  return trailer_ != nullptr;
}

void Document::load_xref_table(Lexer& lx) {
  lx.seek(lx.pos() + 4);  // "xref"
  while (true) {
    lx.skip_ws();
    const std::string_view w = lx.peek_word();
    if (w.empty() || !is_digit(w[0])) break;
    const int first = static_cast<int>(lx.parse(false).number());
    const int count = static_cast<int>(lx.parse(false).number());
    for (int i = 0; i < count; ++i) {
      const Object off = lx.parse(false);
      lx.parse(false);  // generation
      const std::string_view kind = lx.peek_word();
      lx.seek(lx.pos() + kind.size());
      if (kind == "n" && !xref_.contains(first + i)) {
        xref_[first + i] = XrefEntry{static_cast<std::size_t>(off.number()), -1, 0};
      } else if (kind == "f" && !xref_.contains(first + i)) {
        xref_[first + i] = XrefEntry{0, -2, 0};
      }
    }
  }
}

void Document::load_xref_stream(const Object& obj) {
  const Stream* s = obj.stream();
  if (!s) malformed("xref stream expected");
  const Dict* d = s->dict.get();
  const Array* w = at(d, "W").array();
  if (!w || w->size() < 3) malformed("xref stream without /W");
  int widths[3];
  for (int i = 0; i < 3; ++i) widths[i] = static_cast<int>((*w)[i].number());
  const std::string rows = stream_data(obj);
  std::vector<std::pair<int, int>> ranges;
  if (const Object* idx = dict_get(d, "Index"); idx && resolve(*idx).array()) {
    const Array* a = resolve(*idx).array();
    for (std::size_t i = 0; i + 1 < a->size(); i += 2)
      ranges.emplace_back(static_cast<int>((*a)[i].number()),
                          static_cast<int>((*a)[i + 1].number()));
  } else {
    ranges.emplace_back(0, static_cast<int>(at(d, "Size").number()));
  }
  const int row_len = widths[0] + widths[1] + widths[2];
  if (row_len <= 0) malformed("bad xref stream widths");
  std::size_t pos = 0;
  auto field = [&](int width, long long fallback) {
    if (width == 0) return fallback;
    long long v = 0;
    for (int k = 0; k < width; ++k)
      v = (v << 8) | static_cast<unsigned char>(rows[pos++]);
    return v;
  };
  for (auto [first, count] : ranges) {
    for (int i = 0; i < count; ++i) {
      if (pos + static_cast<std::size_t>(row_len) > rows.size()) return;
      const long long type = field(widths[0], 1);
      const long long f2 = field(widths[1], 0);
      const long long f3 = field(widths[2], 0);
      const int num = first + i;
      if (xref_.contains(num)) continue;
      if (type == 1) {
        xref_[num] = XrefEntry{static_cast<std::size_t>(f2), -1, 0};
      } else if (type == 2) {
        xref_[num] = XrefEntry{0, static_cast<int>(f2), static_cast<int>(f3)};
      } else {
        xref_[num] = XrefEntry{0, -2, 0};
      }
    }
  }
}

void Document::reconstruct() {
  // Scan for "N G obj" headers; later definitions win.
  std::size_t pos = 0;
  while ((pos = data_.find("obj", pos)) != std::string_view::npos) {
    const std::size_t kw = pos;
    pos += 3;
    if (kw + 3 < data_.size() && !is_pdf_whitespace(data_[kw + 3]) &&
        !is_pdf_delimiter(data_[kw + 3]))
      continue;
    std::size_t p = kw;
    auto skip_back_ws = [&] {
      while (p > 0 && is_pdf_whitespace(data_[p - 1])) --p;
    };
    skip_back_ws();
    std::size_t gend = p;
    while (p > 0 && is_digit(data_[p - 1])) --p;
    if (p == gend) continue;
    skip_back_ws();
    std::size_t nend = p;
    while (p > 0 && is_digit(data_[p - 1])) --p;
    if (p == nend) continue;
    if (p > 0 && !is_pdf_whitespace(data_[p - 1]) && !is_pdf_delimiter(data_[p - 1]))
      continue;
    const int num = std::atoi(std::string(data_.substr(p, nend - p)).c_str());
    xref_[num] = XrefEntry{p, -1, 0};
  }

  const std::size_t t = data_.rfind("trailer");
  if (t != std::string_view::npos) {
    try {
      Lexer lx(data_, t + 7);
      const Object obj = lx.parse();
      if (auto* sp = std::get_if<std::shared_ptr<const Dict>>(&obj.v)) trailer_ = *sp;
    } catch (const Error&) {
    }
  }
  if (trailer_ && dict_get(trailer_.get(), "Root")) return;

  // No usable trailer: look for an xref stream dictionary or the catalog.
  for (const auto& [num, entry] : xref_) {
    try {
      const Object& o = object(num);
      const Dict* d = o.dict();
      if (!d) continue;
      const Object* type = dict_get(d, "Type");
      if (type && type->is_name("XRef") && dict_get(d, "Root")) {
        trailer_ = o.stream()->dict;
        return;
      }
      if (type && type->is_name("Catalog")) {
        auto td = std::make_shared<Dict>();
        (*td)["Root"] = Ref{num, 0};
        trailer_ = td;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EncryptedPdf) throw;
    }
  }
}

Object Document::parse_indirect_at(std::size_t offset, int expected_num) {
  if (offset >= data_.size()) malformed("object offset beyond end of file");
  Lexer lx(data_, offset);
  const Object num = lx.parse(false);
  const Object gen = lx.parse(false);
  if (!num.is_number() || !gen.is_number() || lx.peek_word() != "obj")
    malformed("bad object header");
  if (expected_num >= 0 && static_cast<int>(num.number()) != expected_num)
    malformed("xref offset points at wrong object");
  lx.seek(lx.pos() + 3);
  Object value = lx.parse();
  if (lx.peek_word() != "stream") return value;

  auto* dp = std::get_if<std::shared_ptr<const Dict>>(&value.v);
  if (!dp) malformed("stream without dictionary");
  std::size_t p = lx.pos() + 6;
  if (p < data_.size() && data_[p] == '\r') ++p;
  if (p < data_.size() && data_[p] == '\n') ++p;

  std::size_t length = std::string_view::npos;
  if (const Object* len = dict_get(dp->get(), "Length")) {
    if (len->is_number()) {
      length = static_cast<std::size_t>(len->number());
    } else if (len->is_ref()) {
      const Object& r = resolve(*len);
      if (r.is_number()) length = static_cast<std::size_t>(r.number());
    }
  }
  bool length_ok = length != std::string_view::npos && p + length <= data_.size();
  if (length_ok) {
    Lexer tail(data_, p + length);
    length_ok = tail.peek_word() == "endstream";
  }
  if (!length_ok) {
    const std::size_t end = data_.find("endstream", p);
    if (end == std::string_view::npos) malformed("truncated stream");
    std::size_t e = end;
    if (e > p && data_[e - 1] == '\n') --e;
    if (e > p && data_[e - 1] == '\r') --e;
    length = e - p;
  }
  auto s = std::make_shared<Stream>();
  s->dict = *dp;
  s->raw = std::string(data_.substr(p, length));
  return std::shared_ptr<const Stream>(std::move(s));
}

Object Document::load_from_object_stream(int stream_num, int index, int num) {
  const Object& so = object(stream_num);
  const Stream* s = so.stream();
  if (!s) malformed("object stream missing");
  const std::string data = stream_data(so);
  const int n = static_cast<int>(at(s->dict.get(), "N").number());
  const int first = static_cast<int>(at(s->dict.get(), "First").number());
  Lexer header(data);
  std::size_t target = std::string_view::npos;
  for (int i = 0; i < n; ++i) {
    const int onum = static_cast<int>(header.parse(false).number());
    const int off = static_cast<int>(header.parse(false).number());
    if (i == index || onum == num) {
      target = static_cast<std::size_t>(first + off);
      if (onum == num) break;
    }
  }
  if (target == std::string_view::npos || target >= data.size())
    malformed("object not found in object stream");
  // The decoded buffer is local; parse into owned objects before it dies.
  Lexer lx(data, target);
  return lx.parse();
}

const Object& Document::object(int num) {
  if (auto it = cache_.find(num); it != cache_.end()) return it->second;
  auto x = xref_.find(num);
  if (x == xref_.end() || x->second.stream_num == -2) return null_;
  if (resolving_[num]) malformed("circular object reference");
  resolving_[num] = true;
  Object value;
  try {
    if (x->second.stream_num >= 0) {
      value = load_from_object_stream(x->second.stream_num, x->second.index, num);
    } else {
      value = parse_indirect_at(x->second.offset, num);
    }
  } catch (...) {
    resolving_[num] = false;
    throw;
  }
  resolving_[num] = false;
  return cache_.emplace(num, std::move(value)).first->second;
}

const Object& Document::resolve(const Object& o) {
  const Object* cur = &o;
  for (int hops = 0; hops < 32; ++hops) {
    const Ref* r = cur->ref();
    if (!r) return *cur;
    cur = &object(r->num);
  }
  malformed("reference chain too long");
}

const Object& Document::at(const Dict* d, std::string_view key) {
  const Object* o = dict_get(d, key);
  return o ? resolve(*o) : null_;
}

const Dict* Document::resolve_dict(const Object* o) {
  if (!o) return nullptr;
  return resolve(*o).dict();
}

std::string Document::stream_data(const Object& stream_obj) {
  const Stream* s = resolve(stream_obj).stream();
  if (!s) return {};
  const Dict* d = s->dict.get();
  std::vector<std::string> filters;
  std::vector<const Dict*> parms;
  if (const Object* f = dict_get(d, "Filter")) {
    const Object& fr = resolve(*f);
    if (const std::string* n = fr.name()) {
      filters.push_back(*n);
    } else if (const Array* a = fr.array()) {
      for (const Object& e : *a)
        if (const std::string* n = resolve(e).name()) filters.push_back(*n);
    }
  }
  if (const Object* p = dict_get(d, "DecodeParms")) {
    const Object& pr = resolve(*p);
    if (const Array* a = pr.array()) {
      for (const Object& e : *a) parms.push_back(resolve(e).dict());
    } else {
      parms.push_back(pr.dict());
    }
  }
  return decode_filters(s->raw, filters, parms);
}

void Document::collect_pages(const Object& node_ref, Object resources,
                             const double* box, int depth) {
  if (depth > kMaxTreeDepth) malformed("page tree too deep");
  const Object& node = resolve(node_ref);
  const Dict* d = node.dict();
  if (!d) malformed("page tree node missing");
  if (const Object* r = dict_get(d, "Resources")) resources = *r;
  double local_box[4] = {box[0], box[1], box[2], box[3]};
  auto read_box = [&](std::string_view key) {
    const Object* b = dict_get(d, key);
    if (!b) return false;
    const Array* a = resolve(*b).array();
    if (!a || a->size() < 4) return false;
    double v[4];
    for (int i = 0; i < 4; ++i) v[i] = resolve((*a)[i]).number();
    local_box[0] = std::min(v[0], v[2]);
    local_box[1] = std::min(v[1], v[3]);
    local_box[2] = std::max(v[0], v[2]);
    local_box[3] = std::max(v[1], v[3]);
    return true;
  };
  read_box("MediaBox");
  double media[4] = {local_box[0], local_box[1], local_box[2], local_box[3]};
  if (read_box("CropBox")) {
    local_box[0] = std::max(local_box[0], media[0]);
    local_box[1] = std::max(local_box[1], media[1]);
    local_box[2] = std::min(local_box[2], media[2]);
    local_box[3] = std::min(local_box[3], media[3]);
  }

  const Object* type = dict_get(d, "Type");
  const Object* kids = dict_get(d, "Kids");
  if ((type && type->is_name("Pages")) || (!type && kids)) {
    const Array* arr = kids ? resolve(*kids).array() : nullptr;
    if (!arr) malformed("page tree node without kids");
    for (const Object& kid : *arr) collect_pages(kid, resources, media, depth + 1);
    return;
  }
  PageEntry entry;
  entry.dict = d;
  entry.resources = resources;
  std::copy(local_box, local_box + 4, entry.box);
  pages_.push_back(entry);
}

}  // namespace docmine::pdf::detail
