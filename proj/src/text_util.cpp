#include "docmine/text_util.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "docmine/error.hpp"
#include "docmine/geometry.hpp"

namespace docmine {

void to_json(nlohmann::json& j, const Point& p) { j = {p.x, p.y}; }
void from_json(const nlohmann::json& j, Point& p) {
  p.x = j.at(0).get<double>();
  p.y = j.at(1).get<double>();
}
void to_json(nlohmann::json& j, const BBox& b) { j = {b.x0, b.y0, b.x1, b.y1}; }
void from_json(const nlohmann::json& j, BBox& b) {
  b.x0 = j.at(0).get<double>();
  b.y0 = j.at(1).get<double>();
  b.x1 = j.at(2).get<double>();
  b.y1 = j.at(3).get<double>();
}

}  // namespace docmine

namespace docmine::text {

namespace {

// Returns the decoded code point and advances i.
char32_t decode_one(std::string_view s, std::size_t& i) {
  const auto c = static_cast<unsigned char>(s[i]);
  int len = 0;
  char32_t cp = 0;
  if (c < 0x80) {
    ++i;
    return c;
  } else if ((c >> 5) == 0x6) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c >> 4) == 0xE) {
    len = 3;
    cp = c & 0x0F;
  } else if ((c >> 3) == 0x1E) {
    len = 4;
    cp = c & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    i = s.size();
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const auto cc = static_cast<unsigned char>(s[i + k]);
    if ((cc >> 6) != 0x2) {
      i += k;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += len;
  return cp;
}

}  // namespace

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  while (i < utf8.size()) out.push_back(decode_one(utf8, i));
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string to_utf8(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

std::size_t codepoint_count(std::string_view utf8) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < utf8.size()) {
    decode_one(utf8, i);
    ++n;
  }
  return n;
}

std::string substr_cp(std::string_view utf8, std::size_t start, std::size_t end) {
  std::size_t i = 0;
  std::size_t idx = 0;
  std::size_t b = utf8.size();
  std::size_t e = utf8.size();
  while (i < utf8.size()) {
    if (idx == start) b = i;
    if (idx == end) {
      e = i;
      break;
    }
    decode_one(utf8, i);
    ++idx;
  }
  if (start >= idx && b == utf8.size()) return {};
  return std::string(utf8.substr(b, e - b));
}

bool is_space(char32_t cp) {
  return u_isUWhiteSpace(static_cast<UChar32>(cp)) || cp == 0xA0;
}

bool is_alnum(char32_t cp) { return u_isalnum(static_cast<UChar32>(cp)); }

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t start = i;
    const char32_t cp = decode_one(s, i);
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(s.substr(start, i - start));
  }
  return out;
}

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) fail(ErrorCode::Internal, "ICU NFC unavailable");
  const auto in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) return std::string(s);
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string case_fold(std::string_view s) {
  auto u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.foldCase();
  std::string result;
  u.toUTF8String(result);
  return result;
}

std::string comparison_key(std::string_view s) {
  return case_fold(collapse_whitespace(nfc(s)));
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  const std::u32string cps = to_u32(case_fold(nfc(s)));
  std::u32string cur;
  for (char32_t cp : cps) {
    if (is_alnum(cp)) {
      cur.push_back(cp);
    } else if (!cur.empty()) {
      out.push_back(to_utf8(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(to_utf8(cur));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace docmine::text
