#include <cstdlib>
#include <fstream>
#include <sstream>

#include "docmine/api.hpp"
#include "docmine/error.hpp"

namespace docmine::api {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCode::ValidationError, "config: " + msg); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) bad("unknown key " + where + "." + k);
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("wrong type for ") + key);
  }
}

void apply_detectors(const json& j, Config& c) {
  check_keys(j, {"table", "map"}, "detectors");
  if (j.contains("table")) {
    const json& t = j["table"];
    check_keys(t, {"rule_page_fraction", "separator_merge", "gap_factor", "merge_crossing",
                   "unruled_min_lines", "image_margin"},
               "detectors.table");
    take(t, "rule_page_fraction", c.table.rule_page_fraction);
    take(t, "separator_merge", c.table.separator_merge);
    take(t, "gap_factor", c.table.gap_factor);
    take(t, "merge_crossing", c.table.merge_crossing);
    take(t, "unruled_min_lines", c.table.unruled_min_lines);
    take(t, "image_margin", c.table.image_margin);
  }
  if (j.contains("map")) {
    const json& m = j["map"];
    check_keys(m, {"label_margin", "pair_distance", "dedup_distance", "residual_tolerance"}, "detectors.map");
    take(m, "label_margin", c.map.label_margin);
    take(m, "pair_distance", c.map.pair_distance);
    take(m, "dedup_distance", c.map.dedup_distance);
    take(m, "residual_tolerance", c.map.residual_tolerance);
  }
}

std::vector<AdapterConfig> parse_adapters(const json& j) {
  if (!j.is_array()) bad("adapters must be an array");
  std::vector<AdapterConfig> out;
  for (const json& a : j) {
    check_keys(a, {"id", "url", "priority", "timeout_ms"}, "adapters[]");
    AdapterConfig ac;
    take(a, "id", ac.id);
    take(a, "url", ac.url);
    take(a, "priority", ac.priority);
    take(a, "timeout_ms", ac.timeout_ms);
    if (ac.id.empty() || ac.url.empty()) bad("adapter needs id and url");
    if (ac.timeout_ms <= 0) bad("adapter timeout must be positive");
    out.push_back(ac);
  }
  return out;
}

json parse_text(const std::string& s, const std::string& what) {
  try {
    return json::parse(s);
  } catch (const json::parse_error& e) {
    bad(what + " is not valid JSON: " + e.what());
  }
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    bad(what + " must be an integer");
  }
  if (used != s.size()) bad(what + " must be an integer");
  return v;
}

}  // namespace

void apply_config_json(Config& c, const json& j) {
  check_keys(j, {"bind_address", "port", "store_path", "lease_ms", "session_ttl_ms", "pwhash", "adapters",
                 "detectors"},
             "config");
  take(j, "bind_address", c.bind_address);
  take(j, "port", c.port);
  take(j, "store_path", c.store_path);
  take(j, "lease_ms", c.lease_ms);
  take(j, "session_ttl_ms", c.session_ttl_ms);
  if (j.contains("pwhash")) {
    check_keys(j["pwhash"], {"ops", "mem"}, "pwhash");
    take(j["pwhash"], "ops", c.pwhash_ops);
    take(j["pwhash"], "mem", c.pwhash_mem);
  }
  if (j.contains("adapters")) c.adapters = parse_adapters(j["adapters"]);
  if (j.contains("detectors")) apply_detectors(j["detectors"], c);
}

void validate_config(const Config& c) {
  if (c.port < 0 || c.port > 65535) bad("port out of range");
  if (c.lease_ms <= 0) bad("lease_ms must be positive");
  if (c.session_ttl_ms <= 0) bad("session_ttl_ms must be positive");
  if (c.store_path.empty()) bad("store_path must not be empty");
}

Config load_config(const std::optional<std::string>& path,
                   const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  Config c;
  if (path) {
    std::ifstream in(*path, std::ios::binary);
    if (!in) bad("cannot read " + *path);
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_json(c, parse_text(ss.str(), *path));
  }
  if (auto v = getenv("DOCMINE_BIND")) c.bind_address = *v;
  if (auto v = getenv("DOCMINE_PORT")) c.port = static_cast<int>(parse_int(*v, "DOCMINE_PORT"));
  if (auto v = getenv("DOCMINE_STORE")) c.store_path = *v;
  if (auto v = getenv("DOCMINE_LEASE_MS")) c.lease_ms = parse_int(*v, "DOCMINE_LEASE_MS");
  if (auto v = getenv("DOCMINE_SESSION_TTL_MS")) c.session_ttl_ms = parse_int(*v, "DOCMINE_SESSION_TTL_MS");
  if (auto v = getenv("DOCMINE_ADAPTERS")) c.adapters = parse_adapters(parse_text(*v, "DOCMINE_ADAPTERS"));
  if (auto v = getenv("DOCMINE_DETECTORS")) apply_detectors(parse_text(*v, "DOCMINE_DETECTORS"), c);

  validate_config(c);
  return c;
}

Config load_config(const std::optional<std::string>& path) {
  return load_config(path, [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  });
}

json config_json(const Config& c) {
  json adapters = json::array();
  for (const auto& a : c.adapters)
    adapters.push_back({{"id", a.id}, {"url", a.url}, {"priority", a.priority}, {"timeout_ms", a.timeout_ms}});
  return {{"bind_address", c.bind_address},
          {"port", c.port},
          {"store_path", c.store_path},
          {"lease_ms", c.lease_ms},
          {"session_ttl_ms", c.session_ttl_ms},
          {"adapters", adapters},
          {"detectors",
           {{"table",
             {{"rule_page_fraction", c.table.rule_page_fraction},
              {"separator_merge", c.table.separator_merge},
              {"gap_factor", c.table.gap_factor},
              {"merge_crossing", c.table.merge_crossing},
              {"unruled_min_lines", c.table.unruled_min_lines},
              {"image_margin", c.table.image_margin}}},
            {"map",
             {{"label_margin", c.map.label_margin},
              {"pair_distance", c.map.pair_distance},
              {"dedup_distance", c.map.dedup_distance},
              {"residual_tolerance", c.map.residual_tolerance}}}}}};
}

}  // namespace docmine::api
