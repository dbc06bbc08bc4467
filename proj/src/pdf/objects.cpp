#include "pdf/objects.hpp"

#include <zlib.h>

#include <cstdlib>
#include <cstring>

#include "docmine/error.hpp"

namespace docmine::pdf::detail {

bool is_pdf_whitespace(char c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' ||
         c == '\0';
}

bool is_pdf_delimiter(char c) {
  return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' ||
         c == ']' || c == '{' || c == '}' || c == '/' || c == '%';
}

void Lexer::skip_ws() {
  while (pos_ < data_.size()) {
    const char c = data_[pos_];
    if (is_pdf_whitespace(c)) {
      ++pos_;
    } else if (c == '%') {
      while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r')
        ++pos_;
    } else {
      break;
    }
  }
}

std::string_view Lexer::peek_word() {
  skip_ws();
  std::size_t e = pos_;
  while (e < data_.size() && !is_pdf_whitespace(data_[e]) &&
         !is_pdf_delimiter(data_[e]))
    ++e;
  return data_.substr(pos_, e - pos_);
}

namespace {

[[noreturn]] void malformed(const std::string& what) {
  fail(ErrorCode::MalformedPdf, "malformed PDF: " + what);
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool starts_number(char c) {
  return (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
}

}  // namespace

Name Lexer::parse_name() {
  ++pos_;  // '/'
  std::string out;
  while (pos_ < data_.size() && !is_pdf_whitespace(data_[pos_]) &&
         !is_pdf_delimiter(data_[pos_])) {
    const char c = data_[pos_];
    if (c == '#' && pos_ + 2 < data_.size() && hex_value(data_[pos_ + 1]) >= 0 &&
        hex_value(data_[pos_ + 2]) >= 0) {
      out.push_back(static_cast<char>(hex_value(data_[pos_ + 1]) * 16 +
                                      hex_value(data_[pos_ + 2])));
      pos_ += 3;
    } else {
      out.push_back(c);
      ++pos_;
    }
  }
  return Name{std::move(out)};
}

String Lexer::parse_literal_string() {
  ++pos_;  // '('
  std::string out;
  int depth = 1;
  while (pos_ < data_.size()) {
    char c = data_[pos_++];
    if (c == '\\') {
      if (pos_ >= data_.size()) break;
      char e = data_[pos_++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case '(': out.push_back('('); break;
        case ')': out.push_back(')'); break;
        case '\\': out.push_back('\\'); break;
        case '\r':
          if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
          break;
        case '\n': break;
        default:
          if (e >= '0' && e <= '7') {
            int v = e - '0';
            for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' &&
                            data_[pos_] <= '7';
                 ++k)
              v = v * 8 + (data_[pos_++] - '0');
            out.push_back(static_cast<char>(v & 0xFF));
          } else {
            out.push_back(e);
          }
      }
    } else if (c == '(') {
      ++depth;
      out.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) return String{std::move(out)};
      out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  malformed("unterminated string");
}

String Lexer::parse_hex_string() {
  ++pos_;  // '<'
  std::string out;
  int hi = -1;
  while (pos_ < data_.size()) {
    const char c = data_[pos_++];
    if (c == '>') {
      if (hi >= 0) out.push_back(static_cast<char>(hi << 4));
      return String{std::move(out)};
    }
    const int v = hex_value(c);
    if (v < 0) continue;
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<char>((hi << 4) | v));
      hi = -1;
    }
  }
  malformed("unterminated hex string");
}

Object Lexer::parse_number_or_ref(bool allow_refs) {
  const std::size_t start = pos_;
  std::size_t e = pos_;
  while (e < data_.size() && starts_number(data_[e])) ++e;
  const std::string tok(data_.substr(start, e - start));
  pos_ = e;
  char* end = nullptr;
  const double value = std::strtod(tok.c_str(), &end);
  const bool integral = tok.find('.') == std::string::npos;
  if (allow_refs && integral && value >= 0) {
    // Look ahead for "gen R".
    const std::size_t save = pos_;
    skip_ws();
    std::size_t g = pos_;
    while (g < data_.size() && data_[g] >= '0' && data_[g] <= '9') ++g;
    if (g > pos_) {
      const int gen = std::atoi(std::string(data_.substr(pos_, g - pos_)).c_str());
      std::size_t r = g;
      while (r < data_.size() && is_pdf_whitespace(data_[r])) ++r;
      if (r < data_.size() && data_[r] == 'R' &&
          (r + 1 == data_.size() || is_pdf_whitespace(data_[r + 1]) ||
           is_pdf_delimiter(data_[r + 1]))) {
        pos_ = r + 1;
        return Ref{static_cast<int>(value), gen};
      }
    }
    pos_ = save;
  }
  return value;
}

Object Lexer::parse(bool allow_refs, bool allow_keywords) {
  skip_ws();
  if (pos_ >= data_.size()) malformed("unexpected end of data");
  const char c = data_[pos_];
  if (c == '/') return parse_name();
  if (c == '(') return parse_literal_string();
  if (c == '<') {
    if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
      pos_ += 2;
      auto d = std::make_shared<Dict>();
      while (true) {
        skip_ws();
        if (pos_ >= data_.size()) malformed("unterminated dictionary");
        if (data_.substr(pos_, 2) == ">>") {
          pos_ += 2;
          break;
        }
        if (data_[pos_] != '/') malformed("dictionary key is not a name");
        Name key = parse_name();
        skip_ws();
        if (data_.substr(pos_, 2) == ">>") {
          (*d)[key.value] = Object{};
          continue;
        }
        (*d)[key.value] = parse(allow_refs, allow_keywords);
      }
      return std::shared_ptr<const Dict>(std::move(d));
    }
    return parse_hex_string();
  }
  if (c == '[') {
    ++pos_;
    auto a = std::make_shared<Array>();
    while (true) {
      skip_ws();
      if (pos_ >= data_.size()) malformed("unterminated array");
      if (data_[pos_] == ']') {
        ++pos_;
        break;
      }
      a->push_back(parse(allow_refs, allow_keywords));
    }
    return std::shared_ptr<const Array>(std::move(a));
  }
  if (starts_number(c)) return parse_number_or_ref(allow_refs);
  if (c == '{' || c == '}') {
    ++pos_;
    if (allow_keywords) return Keyword{std::string(1, c)};
    malformed("unexpected brace");
  }
  if (c == ')' || c == '>' || c == ']') {
    ++pos_;
    if (allow_keywords) return Keyword{std::string(1, c)};
    malformed("unexpected delimiter");
  }
  const std::string_view word = peek_word();
  if (word.empty()) malformed("unexpected character");
  pos_ += word.size();
  if (word == "true") return true;
  if (word == "false") return false;
  if (word == "null") return Object{};
  if (allow_keywords) return Keyword{std::string(word)};
  malformed("unexpected token '" + std::string(word) + "'");
}

// --- filters ---------------------------------------------------------------

std::string flate_decode(std::string_view data) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) malformed("zlib init");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[16384];
  int ret = Z_OK;
  while (ret != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    ret = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof(buf) - zs.avail_out);
    if (ret == Z_STREAM_END) break;
    if (ret != Z_OK) {
      inflateEnd(&zs);
      // Truncated but partially decodable data is tolerated when something
      // came out; a stream that yields nothing is corrupt.
      if (out.empty()) malformed("corrupt Flate stream");
      return out;
    }
    if (zs.avail_in == 0 && zs.avail_out != 0) break;
  }
  inflateEnd(&zs);
  return out;
}

std::string flate_encode(std::string_view data) {
  uLongf cap = compressBound(static_cast<uLong>(data.size()));
  std::string out(cap, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &cap,
                reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uLong>(data.size()), Z_BEST_COMPRESSION) != Z_OK)
    fail(ErrorCode::Internal, "zlib compress failed");
  out.resize(cap);
  return out;
}

namespace {

std::string ascii_hex_decode(std::string_view data) {
  std::string out;
  int hi = -1;
  for (char c : data) {
    if (c == '>') break;
    const int v = hex_value(c);
    if (v < 0) continue;
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<char>((hi << 4) | v));
      hi = -1;
    }
  }
  if (hi >= 0) out.push_back(static_cast<char>(hi << 4));
  return out;
}

std::string ascii85_decode(std::string_view data) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (c == '~') break;
    if (is_pdf_whitespace(c)) continue;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') malformed("bad ASCII85 data");
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int k = 3; k >= 0; --k) out.push_back(static_cast<char>((tuple >> (8 * k)) & 0xFF));
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k)
      out.push_back(static_cast<char>((tuple >> (24 - 8 * k)) & 0xFF));
  }
  return out;
}

std::string run_length_decode(std::string_view data) {
  std::string out;
  std::size_t i = 0;
  while (i < data.size()) {
    const int len = static_cast<unsigned char>(data[i++]);
    if (len == 128) break;
    if (len < 128) {
      const std::size_t n = std::min<std::size_t>(len + 1, data.size() - i);
      out.append(data.substr(i, n));
      i += n;
    } else if (i < data.size()) {
      out.append(static_cast<std::size_t>(257 - len), data[i++]);
    }
  }
  return out;
}

double parm_number(const Dict* parms, std::string_view key, double fallback) {
  const Object* o = dict_get(parms, key);
  return o && o->is_number() ? o->number() : fallback;
}

std::string apply_predictor(std::string data, const Dict* parms) {
  const int predictor = static_cast<int>(parm_number(parms, "Predictor", 1));
  if (predictor < 10) return data;  // TIFF predictor 2 unsupported; rare in text
  const int colors = static_cast<int>(parm_number(parms, "Colors", 1));
  const int bpc = static_cast<int>(parm_number(parms, "BitsPerComponent", 8));
  const int columns = static_cast<int>(parm_number(parms, "Columns", 1));
  const std::size_t bpp = std::max(1, colors * bpc / 8);
  const std::size_t row_len = (static_cast<std::size_t>(colors) * bpc * columns + 7) / 8;
  std::string out;
  std::string prev(row_len, '\0');
  std::size_t i = 0;
  while (i + 1 + row_len <= data.size()) {
    const int type = static_cast<unsigned char>(data[i]);
    std::string row = data.substr(i + 1, row_len);
    for (std::size_t k = 0; k < row_len; ++k) {
      const int a = k >= bpp ? static_cast<unsigned char>(row[k - bpp]) : 0;
      const int b = static_cast<unsigned char>(prev[k]);
      const int c = k >= bpp ? static_cast<unsigned char>(prev[k - bpp]) : 0;
      int x = static_cast<unsigned char>(row[k]);
      switch (type) {
        case 1: x += a; break;
        case 2: x += b; break;
        case 3: x += (a + b) / 2; break;
        case 4: {
          const int p = a + b - c;
          const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
          x += (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
          break;
        }
        default: break;
      }
      row[k] = static_cast<char>(x & 0xFF);
    }
    out.append(row);
    prev = row;
    i += 1 + row_len;
  }
  return out;
}

}  // namespace

std::string decode_filters(std::string_view raw,
                           const std::vector<std::string>& filters,
                           const std::vector<const Dict*>& parms) {
  std::string data(raw);
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const std::string& f = filters[i];
    const Dict* p = i < parms.size() ? parms[i] : nullptr;
    if (f == "FlateDecode" || f == "Fl") {
      data = apply_predictor(flate_decode(data), p);
    } else if (f == "ASCIIHexDecode" || f == "AHx") {
      data = ascii_hex_decode(data);
    } else if (f == "ASCII85Decode" || f == "A85") {
      data = ascii85_decode(data);
    } else if (f == "RunLengthDecode" || f == "RL") {
      data = run_length_decode(data);
    } else {
      malformed("unsupported filter " + f);
    }
  }
  return data;
}

}  // namespace docmine::pdf::detail
