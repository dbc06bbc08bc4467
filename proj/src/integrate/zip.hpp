#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace docmine::zip {

// Minimal ZIP container (stored/deflate), enough for OOXML packages.
struct Entry {
  std::string name;
  std::string data;
};

std::string write(const std::vector<Entry>& entries);
// Throws UnparseableFile.
std::vector<Entry> read(std::string_view bytes);

}  // namespace docmine::zip
