#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pdf/document.hpp"

namespace docmine::pdf::detail {

// Unicode for a code in the PDF simple-font encodings.
char32_t win_ansi_to_unicode(unsigned char code);
// Reverse of win_ansi_to_unicode; 0 when the code point is not encodable.
unsigned char unicode_to_win_ansi(char32_t cp);
// Adobe glyph name to Unicode (subset plus uniXXXX / uXXXX forms); 0 if unknown.
char32_t glyph_name_to_unicode(std::string_view name);

// Helvetica advance widths (1/1000 em) indexed by WinAnsi code.
double helvetica_width(unsigned char code);

class Font {
 public:
  Font();

  // Splits shown bytes into character codes.
  std::vector<std::uint32_t> codes(std::string_view bytes) const;
  std::u32string unicode(std::uint32_t code) const;
  // Advance in 1/1000 text-space units.
  double width(std::uint32_t code) const;
  bool is_single_byte() const { return code_bytes_ == 1; }

  double ascent() const { return ascent_; }
  double descent() const { return descent_; }

  static Font load(Document& doc, const Dict* font_dict);

 private:
  void load_to_unicode(Document& doc, const Object& cmap);
  void load_simple_encoding(Document& doc, const Object* enc, bool symbolic);
  void load_cid_widths(Document& doc, const Dict* cid_font);

  int code_bytes_ = 1;
  std::array<char32_t, 256> simple_{};
  std::unordered_map<std::uint32_t, std::u32string> to_unicode_;
  std::unordered_map<std::uint32_t, double> widths_;
  double default_width_ = 500.0;
  bool helvetica_fallback_ = false;
  bool monospace_ = false;
  double ascent_ = 0.8;
  double descent_ = -0.2;
};

}  // namespace docmine::pdf::detail
