#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

struct JTable {
  long order;                                   // confirmation order
  std::vector<std::optional<int>> field_of;     // per column: field index
  std::vector<std::vector<std::string>> rows;   // data rows (no header)
};

struct JPoint {
  std::optional<std::string> key;
  std::string lat, lon;  // already formatted
};

struct JSpan {
  int field;
  std::string text;
};

inline std::string join_distinct(const std::vector<std::string>& vals) {
  std::vector<std::string> seen;
  std::string out;
  for (const auto& v : vals) {
    if (std::find(seen.begin(), seen.end(), v) != seen.end()) continue;
    seen.push_back(v);
    out += (out.empty() ? "" : "; ") + v;
  }
  return out;
}

// Nested-loop full outer join followed by broadcast, cell by cell.
inline std::vector<std::vector<std::string>> join(std::vector<JTable> tables, int nfields, int key,
                                                  std::optional<int> lat, std::optional<int> lon,
                                                  const std::vector<JSpan>& spans,
                                                  const std::vector<JPoint>& points,
                                                  const std::string& metadata_id) {
  std::stable_sort(tables.begin(), tables.end(), [](const JTable& a, const JTable& b) { return a.order < b.order; });
  auto key_col = [&](const JTable& t) {
    for (std::size_t c = 0; c < t.field_of.size(); ++c)
      if (t.field_of[c] == key) return c;
    return std::size_t(-1);
  };
  std::vector<std::string> keys;
  for (const auto& t : tables)
    for (const auto& r : t.rows) {
      const std::string& k = r[key_col(t)];
      if (!k.empty() && std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  std::vector<std::vector<std::string>> out;
  auto broadcast = [&](std::vector<std::string>& row) {
    for (int f = 0; f < nfields; ++f) {
      std::vector<std::string> vals;
      for (const auto& s : spans)
        if (s.field == f && f != key) vals.push_back(s.text);
      if (!vals.empty() && row[f].empty()) row[f] = join_distinct(vals);
    }
    std::vector<std::string> la, lo;
    for (const auto& p : points)
      if (!p.key) {
        la.push_back(p.lat);
        lo.push_back(p.lon);
      }
    if (lat && !la.empty() && row[*lat].empty()) row[*lat] = join_distinct(la);
    if (lon && !lo.empty() && row[*lon].empty()) row[*lon] = join_distinct(lo);
  };
  for (const auto& k : keys) {
    std::vector<std::string> row(nfields);
    row[key] = k;
    for (int f = 0; f < nfields; ++f) {
      if (f == key) continue;
      for (const auto& t : tables)
        for (const auto& r : t.rows)
          if (r[key_col(t)] == k)
            for (std::size_t c = 0; c < t.field_of.size(); ++c)
              if (t.field_of[c] == f && !r[c].empty()) row[f] = r[c];
    }
    std::vector<std::string> la, lo;
    for (const auto& p : points)
      if (p.key == k) {
        la.push_back(p.lat);
        lo.push_back(p.lon);
      }
    if (lat && !la.empty() && row[*lat].empty()) row[*lat] = join_distinct(la);
    if (lon && !lo.empty() && row[*lon].empty()) row[*lon] = join_distinct(lo);
    out.push_back(row);
  }
  if (out.empty()) out.emplace_back(nfields);
  for (auto& row : out) {
    broadcast(row);
    row.push_back(metadata_id);
  }
  return out;
}

}  // namespace oracle
