#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docmine::text {

// Rule pattern over Unicode code points with longest-match semantics.
//
// Syntax: literals; escapes \. \\ \( etc.; \d (ASCII digit) \w (letter, digit,
// underscore) \s (white space) and their negations \D \W \S; \t \n \uXXXX;
// '.' (anything but a newline); classes [abc] [a-z] [^...] with escapes
// inside; groups (...) and (?:...); alternation |; quantifiers * + ? {m}
// {m,} {m,n} (n <= 255); anchors ^ $ (start/end of the section) and \b \B.
// Lazy quantifiers, lookaround and back-references are rejected.
class Pattern {
 public:
  // Throws InvalidRule with the offending position.
  explicit Pattern(std::string_view source, bool ignore_case = false);
  ~Pattern();
  Pattern(Pattern&&) noexcept;
  Pattern& operator=(Pattern&&) noexcept;
  Pattern(const Pattern&);
  Pattern& operator=(const Pattern&);

  // End (exclusive) of the longest non-empty match starting exactly at pos.
  std::optional<std::size_t> longest_at(std::u32string_view text, std::size_t pos) const;

  const std::string& source() const { return source_; }
  bool ignore_case() const { return ignore_case_; }

  struct Program;  // compiled form, opaque

 private:
  std::string source_;
  bool ignore_case_ = false;
  std::shared_ptr<const Program> prog_;
};

}  // namespace docmine::text
