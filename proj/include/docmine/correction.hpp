#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace docmine {

// A human adjustment produced by a pipeline operation. The store stamps it
// with document, user and time before appending it to the correction log.
struct Correction {
  std::string module;  // meta | table | text | map
  std::string stage;
  std::string action;
  nlohmann::json before;
  nlohmann::json after;
};

}  // namespace docmine
