#include "pdf/fonts.hpp"

#include "docmine/error.hpp"

#include <cstdlib>
#include <cstring>

namespace docmine::pdf::detail {

namespace {

// WinAnsi 0x80..0x9F; zero marks undefined codes.
constexpr char32_t kWinAnsiHigh[32] = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021,
    0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0,      0x017D, 0,
    0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014,
    0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178};

// Helvetica widths for 0x20..0x7E.
constexpr double kHelveticaAscii[95] = {
    278, 278, 355, 556, 556, 889, 667, 191, 333, 333, 389, 584, 278, 333,
    278, 278, 556, 556, 556, 556, 556, 556, 556, 556, 556, 556, 278, 278,
    584, 584, 584, 556, 1015, 667, 667, 722, 722, 667, 611, 778, 722, 278,
    500, 667, 556, 833, 722, 778, 667, 778, 722, 667, 611, 722, 667, 944,
    667, 667, 611, 278, 278, 278, 469, 556, 333, 556, 556, 500, 556, 556,
    278, 556, 556, 222, 222, 500, 222, 833, 556, 556, 556, 556, 333, 500,
    278, 556, 500, 722, 500, 500, 500, 334, 260, 334, 584};

struct GlyphName {
  const char* name;
  char32_t cp;
};

constexpr GlyphName kGlyphs[] = {
    {"space", 0x20}, {"exclam", 0x21}, {"quotedbl", 0x22}, {"numbersign", 0x23},
    {"dollar", 0x24}, {"percent", 0x25}, {"ampersand", 0x26},
    {"quotesingle", 0x27}, {"quoteright", 0x2019}, {"parenleft", 0x28},
    {"parenright", 0x29}, {"asterisk", 0x2A}, {"plus", 0x2B}, {"comma", 0x2C},
    {"hyphen", 0x2D}, {"period", 0x2E}, {"slash", 0x2F}, {"zero", 0x30},
    {"one", 0x31}, {"two", 0x32}, {"three", 0x33}, {"four", 0x34},
    {"five", 0x35}, {"six", 0x36}, {"seven", 0x37}, {"eight", 0x38},
    {"nine", 0x39}, {"colon", 0x3A}, {"semicolon", 0x3B}, {"less", 0x3C},
    {"equal", 0x3D}, {"greater", 0x3E}, {"question", 0x3F}, {"at", 0x40},
    {"bracketleft", 0x5B}, {"backslash", 0x5C}, {"bracketright", 0x5D},
    {"asciicircum", 0x5E}, {"underscore", 0x5F}, {"grave", 0x60},
    {"quoteleft", 0x2018}, {"braceleft", 0x7B}, {"bar", 0x7C},
    {"braceright", 0x7D}, {"asciitilde", 0x7E}, {"degree", 0xB0},
    {"minute", 0x2032}, {"second", 0x2033}, {"endash", 0x2013},
    {"emdash", 0x2014}, {"quotedblleft", 0x201C}, {"quotedblright", 0x201D},
    {"bullet", 0x2022}, {"ellipsis", 0x2026}, {"fi", 0xFB01}, {"fl", 0xFB02},
    {"plusminus", 0xB1}, {"multiply", 0xD7}, {"divide", 0xF7}, {"mu", 0xB5},
    {"micro", 0xB5}, {"periodcentered", 0xB7}, {"copyright", 0xA9},
    {"registered", 0xAE}, {"trademark", 0x2122}, {"minus", 0x2212},
    {"section", 0xA7}, {"paragraph", 0xB6}, {"dagger", 0x2020},
    {"daggerdbl", 0x2021}, {"eacute", 0xE9}, {"egrave", 0xE8}, {"aacute", 0xE1},
    {"agrave", 0xE0}, {"oacute", 0xF3}, {"uacute", 0xFA}, {"iacute", 0xED},
    {"ntilde", 0xF1}, {"udieresis", 0xFC}, {"odieresis", 0xF6},
    {"adieresis", 0xE4}, {"ccedilla", 0xE7}, {"germandbls", 0xDF},
    {"Eacute", 0xC9}, {"nbspace", 0xA0}, {"alpha", 0x3B1}, {"beta", 0x3B2},
    {"gamma", 0x3B3}, {"delta", 0x3B4}, {"lessequal", 0x2264},
    {"greaterequal", 0x2265}, {"approxequal", 0x2248},
};

unsigned parse_hex(std::string_view s) {
  unsigned v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
    else return 0;
  }
  return v;
}

std::uint32_t bytes_to_code(const std::string& b) {
  std::uint32_t v = 0;
  for (unsigned char c : b) v = (v << 8) | c;
  return v;
}

std::u32string utf16be_to_u32(const std::string& b) {
  std::u32string out;
  for (std::size_t i = 0; i + 1 < b.size(); i += 2) {
    char32_t u = (static_cast<unsigned char>(b[i]) << 8) |
                 static_cast<unsigned char>(b[i + 1]);
    if (u >= 0xD800 && u <= 0xDBFF && i + 3 < b.size()) {
      const char32_t lo = (static_cast<unsigned char>(b[i + 2]) << 8) |
                          static_cast<unsigned char>(b[i + 3]);
      u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
      i += 2;
    }
    out.push_back(u);
  }
  return out;
}

bool is_standard_sans(std::string_view base) {
  return base.find("Helvetica") != std::string_view::npos ||
         base.find("Arial") != std::string_view::npos;
}

}  // namespace

char32_t win_ansi_to_unicode(unsigned char code) {
  if (code >= 0x80 && code <= 0x9F) return kWinAnsiHigh[code - 0x80];
  if (code < 0x20 && code != '\t' && code != '\n' && code != '\r') return 0;
  return code;
}

unsigned char unicode_to_win_ansi(char32_t cp) {
  if (cp < 0x80 || (cp >= 0xA0 && cp <= 0xFF)) return static_cast<unsigned char>(cp);
  for (int i = 0; i < 32; ++i)
    if (kWinAnsiHigh[i] == cp && cp != 0) return static_cast<unsigned char>(0x80 + i);
  return 0;
}

char32_t glyph_name_to_unicode(std::string_view name) {
  if (name.size() == 1 && ((name[0] >= 'A' && name[0] <= 'Z') ||
                           (name[0] >= 'a' && name[0] <= 'z')))
    return static_cast<char32_t>(name[0]);
  for (const auto& g : kGlyphs)
    if (name == g.name) return g.cp;
  if (name.size() == 7 && name.substr(0, 3) == "uni") return parse_hex(name.substr(3));
  if (name.size() >= 5 && name.size() <= 7 && name[0] == 'u')
    return parse_hex(name.substr(1));
  return 0;
}

double helvetica_width(unsigned char code) {
  if (code >= 0x20 && code <= 0x7E) return kHelveticaAscii[code - 0x20];
  switch (code) {
    case 0xB0: return 400;   // degree
    case 0x96: return 556;   // endash
    case 0x97: return 1000;  // emdash
    case 0x91: case 0x92: return 222;
    case 0x93: case 0x94: return 333;
    case 0x95: return 350;
    case 0xA0: return 278;
    default: return 556;
  }
}

Font::Font() {
  for (int i = 0; i < 256; ++i) simple_[i] = win_ansi_to_unicode(static_cast<unsigned char>(i));
}

std::vector<std::uint32_t> Font::codes(std::string_view bytes) const {
  std::vector<std::uint32_t> out;
  if (code_bytes_ == 1) {
    out.reserve(bytes.size());
    for (unsigned char c : bytes) out.push_back(c);
    return out;
  }
  for (std::size_t i = 0; i + 1 < bytes.size(); i += 2)
    out.push_back((static_cast<unsigned char>(bytes[i]) << 8) |
                  static_cast<unsigned char>(bytes[i + 1]));
  return out;
}

std::u32string Font::unicode(std::uint32_t code) const {
  if (auto it = to_unicode_.find(code); it != to_unicode_.end()) return it->second;
  if (code_bytes_ == 1 && code < 256 && simple_[code] != 0)
    return std::u32string(1, simple_[code]);
  return {};
}

double Font::width(std::uint32_t code) const {
  if (auto it = widths_.find(code); it != widths_.end()) return it->second;
  if (monospace_) return 600.0;
  if (helvetica_fallback_ && code < 256) return helvetica_width(static_cast<unsigned char>(code));
  return default_width_;
}

void Font::load_to_unicode(Document& doc, const Object& cmap) {
  const std::string data = doc.stream_data(cmap);
  Lexer lx(data);
  std::vector<Object> operands;
  try {
    while (!lx.at_end()) {
      Object o = lx.parse(false, true);
      const Keyword* kw = o.keyword();
      if (!kw) {
        operands.push_back(std::move(o));
        continue;
      }
      if (kw->value == "endcodespacerange") {
        if (!operands.empty() && operands.front().string())
          code_bytes_ = static_cast<int>(std::max<std::size_t>(1, operands.front().string()->size()));
      } else if (kw->value == "endbfchar") {
        for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
          const std::string* src = operands[i].string();
          const std::string* dst = operands[i + 1].string();
          if (src && dst) to_unicode_[bytes_to_code(*src)] = utf16be_to_u32(*dst);
        }
      } else if (kw->value == "endbfrange") {
        for (std::size_t i = 0; i + 2 < operands.size(); i += 3) {
          const std::string* lo = operands[i].string();
          const std::string* hi = operands[i + 1].string();
          if (!lo || !hi) continue;
          const std::uint32_t a = bytes_to_code(*lo);
          const std::uint32_t b = bytes_to_code(*hi);
          if (b < a || b - a > 65535) continue;
          if (const std::string* dst = operands[i + 2].string()) {
            std::u32string base = utf16be_to_u32(*dst);
            for (std::uint32_t c = a; c <= b; ++c) {
              to_unicode_[c] = base;
              if (!base.empty()) ++base.back();
            }
          } else if (const Array* arr = operands[i + 2].array()) {
            for (std::uint32_t c = a; c <= b && c - a < arr->size(); ++c)
              if (const std::string* d = (*arr)[c - a].string())
                to_unicode_[c] = utf16be_to_u32(*d);
          }
        }
      }
      operands.clear();
    }
  } catch (const Error&) {
    // A broken CMap leaves whatever mappings were read.
  }
}

void Font::load_simple_encoding(Document& doc, const Object* enc, bool symbolic) {
  if (!enc) return;
  const Object& e = doc.resolve(*enc);
  auto apply_base = [&](std::string_view base) {
    if (base == "MacRomanEncoding") {
      for (int i = 0x80; i < 256; ++i) simple_[i] = 0;
      simple_[0xA1] = 0xB0;
      simple_[0xD0] = 0x2013;
      simple_[0xD1] = 0x2014;
      simple_[0xD2] = 0x201C;
      simple_[0xD3] = 0x201D;
      simple_[0xD4] = 0x2018;
      simple_[0xD5] = 0x2019;
      simple_[0xA5] = 0x2022;
    } else if (base == "StandardEncoding") {
      simple_[0x27] = 0x2019;
      simple_[0x60] = 0x2018;
    }
  };
  if (const std::string* n = e.name()) {
    apply_base(*n);
    return;
  }
  const Dict* d = e.dict();
  if (!d) return;
  if (const std::string* base = doc.at(d, "BaseEncoding").name()) apply_base(*base);
  else if (symbolic) for (auto& c : simple_) c = 0;
  if (const Array* diffs = doc.at(d, "Differences").array()) {
    int code = 0;
    for (const Object& item : *diffs) {
      if (item.is_number()) {
        code = static_cast<int>(item.number());
      } else if (const std::string* glyph = item.name()) {
        if (code >= 0 && code < 256) simple_[code] = glyph_name_to_unicode(*glyph);
        ++code;
      }
    }
  }
}

void Font::load_cid_widths(Document& doc, const Dict* cid_font) {
  if (!cid_font) return;
  const Object& dw = doc.at(cid_font, "DW");
  default_width_ = dw.is_number() ? dw.number() : 1000.0;
  const Array* w = doc.at(cid_font, "W").array();
  if (!w) return;
  for (std::size_t i = 0; i < w->size();) {
    const Object& first = doc.resolve((*w)[i]);
    if (i + 1 >= w->size()) break;
    const Object& second = doc.resolve((*w)[i + 1]);
    const auto start = static_cast<std::uint32_t>(first.number());
    if (const Array* list = second.array()) {
      for (std::size_t k = 0; k < list->size(); ++k)
        widths_[start + static_cast<std::uint32_t>(k)] = doc.resolve((*list)[k]).number();
      i += 2;
    } else {
      if (i + 2 >= w->size()) break;
      const auto end = static_cast<std::uint32_t>(second.number());
      const double width = doc.resolve((*w)[i + 2]).number();
      for (std::uint32_t c = start; c <= end && c - start < 65536; ++c) widths_[c] = width;
      i += 3;
    }
  }
}

Font Font::load(Document& doc, const Dict* fd) {
  Font f;
  if (!fd) {
    f.helvetica_fallback_ = true;
    return f;
  }
  const std::string* subtype = doc.at(fd, "Subtype").name();
  const std::string* base = doc.at(fd, "BaseFont").name();
  const Dict* descriptor = doc.at(fd, "FontDescriptor").dict();

  if (subtype && *subtype == "Type0") {
    f.code_bytes_ = 2;
    const Array* desc = doc.at(fd, "DescendantFonts").array();
    const Dict* cid = desc && !desc->empty() ? doc.resolve((*desc)[0]).dict() : nullptr;
    f.load_cid_widths(doc, cid);
    if (cid) descriptor = doc.at(cid, "FontDescriptor").dict();
    for (auto& c : f.simple_) c = 0;
  } else {
    bool symbolic = false;
    if (descriptor) {
      const int flags = static_cast<int>(doc.at(descriptor, "Flags").number());
      symbolic = (flags & 4) != 0 && (flags & 32) == 0;
    }
    f.load_simple_encoding(doc, dict_get(fd, "Encoding"), symbolic);
    const Array* widths = doc.at(fd, "Widths").array();
    if (widths) {
      const auto first = static_cast<std::uint32_t>(doc.at(fd, "FirstChar").number());
      for (std::size_t k = 0; k < widths->size(); ++k)
        f.widths_[first + static_cast<std::uint32_t>(k)] = doc.resolve((*widths)[k]).number();
      if (descriptor) {
        const Object& mw = doc.at(descriptor, "MissingWidth");
        if (mw.is_number()) f.default_width_ = mw.number();
      }
    } else if (base && base->find("Courier") != std::string::npos) {
      f.monospace_ = true;
    } else {
      f.helvetica_fallback_ = base == nullptr || is_standard_sans(*base) ||
                              base->find("Times") != std::string::npos;
    }
  }
  if (const Object* tu = dict_get(fd, "ToUnicode"); tu && doc.resolve(*tu).stream())
    f.load_to_unicode(doc, *tu);
  if (descriptor) {
    const Object& a = doc.at(descriptor, "Ascent");
    const Object& d = doc.at(descriptor, "Descent");
    if (a.is_number() && d.is_number() && a.number() > 0 && d.number() <= 0) {
      f.ascent_ = a.number() / 1000.0;
      f.descent_ = d.number() / 1000.0;
    }
  }
  return f;
}

}  // namespace docmine::pdf::detail
