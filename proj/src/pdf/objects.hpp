#pragma once

// Internal PDF object model and tokenizer.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace docmine::pdf::detail {

struct Object;
using Array = std::vector<Object>;
using Dict = std::map<std::string, Object, std::less<>>;

struct Name {
  std::string value;
};
struct String {
  std::string bytes;
};
struct Ref {
  int num = 0;
  int gen = 0;
};
struct Stream {
  std::shared_ptr<const Dict> dict;
  std::string raw;  // undecoded bytes
};
// Operator keyword inside content streams.
struct Keyword {
  std::string value;
};

struct Object {
  using Value = std::variant<std::monostate, bool, double, String, Name,
                             std::shared_ptr<const Array>,
                             std::shared_ptr<const Dict>, Ref,
                             std::shared_ptr<const Stream>, Keyword>;
  Value v;

  Object() = default;
  template <typename T>
  Object(T t) : v(std::move(t)) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(v); }
  bool is_number() const { return std::holds_alternative<double>(v); }
  bool is_name() const { return std::holds_alternative<Name>(v); }
  bool is_name(std::string_view n) const {
    auto* p = std::get_if<Name>(&v);
    return p && p->value == n;
  }
  bool is_string() const { return std::holds_alternative<String>(v); }
  bool is_ref() const { return std::holds_alternative<Ref>(v); }
  bool is_keyword(std::string_view k) const {
    auto* p = std::get_if<Keyword>(&v);
    return p && p->value == k;
  }

  double number(double fallback = 0.0) const {
    auto* p = std::get_if<double>(&v);
    return p ? *p : fallback;
  }
  const std::string* name() const {
    auto* p = std::get_if<Name>(&v);
    return p ? &p->value : nullptr;
  }
  const std::string* string() const {
    auto* p = std::get_if<String>(&v);
    return p ? &p->bytes : nullptr;
  }
  const Array* array() const {
    auto* p = std::get_if<std::shared_ptr<const Array>>(&v);
    return p ? p->get() : nullptr;
  }
  const Dict* dict() const {
    if (auto* p = std::get_if<std::shared_ptr<const Dict>>(&v)) return p->get();
    if (auto* s = std::get_if<std::shared_ptr<const Stream>>(&v))
      return (*s)->dict.get();
    return nullptr;
  }
  const Stream* stream() const {
    auto* p = std::get_if<std::shared_ptr<const Stream>>(&v);
    return p ? p->get() : nullptr;
  }
  const Ref* ref() const { return std::get_if<Ref>(&v); }
  const Keyword* keyword() const { return std::get_if<Keyword>(&v); }
};

inline const Object* dict_get(const Dict* d, std::string_view key) {
  if (!d) return nullptr;
  auto it = d->find(key);
  return it == d->end() ? nullptr : &it->second;
}

class Lexer {
 public:
  explicit Lexer(std::string_view data, std::size_t pos = 0)
      : data_(data), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  bool at_end() {
    skip_ws();
    return pos_ >= data_.size();
  }
  std::string_view data() const { return data_; }

  void skip_ws();

  // Parses one object. When allow_keywords is set, bare words become Keyword
  // objects (content streams); otherwise unknown words throw MalformedPdf.
  // Indirect references "n g R" are recognised when allow_refs is set.
  Object parse(bool allow_refs = true, bool allow_keywords = false);

  // Reads the next bare token without interpreting it.
  std::string_view peek_word();

 private:
  Object parse_number_or_ref(bool allow_refs);
  String parse_literal_string();
  String parse_hex_string();
  Name parse_name();

  std::string_view data_;
  std::size_t pos_;
};

bool is_pdf_whitespace(char c);
bool is_pdf_delimiter(char c);

// Applies a filter chain; parms[i] may be null. Unsupported filters throw
// MalformedPdf.
std::string decode_filters(std::string_view raw,
                           const std::vector<std::string>& filters,
                           const std::vector<const Dict*>& parms);

std::string flate_decode(std::string_view data);
std::string flate_encode(std::string_view data);

}  // namespace docmine::pdf::detail
