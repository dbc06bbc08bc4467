#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pdf/objects.hpp"

namespace docmine::pdf::detail {

struct PageEntry {
  const Dict* dict = nullptr;
  Object resources;  // inherited when absent on the page itself
  double box[4] = {0, 0, 612, 792};
};

// Random-access view of a PDF file: cross-reference resolution, object cache
// and page tree flattening. Holds a view into the caller's bytes.
class Document {
 public:
  explicit Document(std::string_view data);

  const Object& resolve(const Object& o);
  const Object& object(int num);
  const Dict* resolve_dict(const Object* o);
  // Resolved value of d[key], or null.
  const Object& at(const Dict* d, std::string_view key);

  std::string stream_data(const Object& stream_obj);

  const std::vector<PageEntry>& pages() const { return pages_; }

 private:
  struct XrefEntry {
    std::size_t offset = 0;
    int stream_num = -1;  // object stream holding it, or -1
    int index = 0;
  };

  bool load_xref_chain(std::size_t startxref);
  void load_xref_table(Lexer& lx);
  void load_xref_stream(const Object& obj);
  void reconstruct();
  Object parse_indirect_at(std::size_t offset, int expected_num);
  Object load_from_object_stream(int stream_num, int index, int num);
  void collect_pages(const Object& node, Object resources, const double* box,
                     int depth);

  std::string_view data_;
  std::map<int, XrefEntry> xref_;
  std::shared_ptr<const Dict> trailer_;
  std::unordered_map<int, Object> cache_;
  std::unordered_map<int, bool> resolving_;
  std::vector<PageEntry> pages_;
  Object null_;
};

}  // namespace docmine::pdf::detail
