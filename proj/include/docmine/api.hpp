#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "docmine/clock.hpp"
#include "docmine/store.hpp"

namespace docmine::api {

struct AdapterConfig {
  std::string id;
  std::string url;
  int priority = 1;
  std::int64_t timeout_ms = 30000;
};

struct Config {
  std::string bind_address = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string store_path = "docmine.db";
  std::int64_t lease_ms = 10 * 60 * 1000;
  std::int64_t session_ttl_ms = 12 * 60 * 60 * 1000;
  unsigned long long pwhash_ops = 0;  // 0: library default
  std::size_t pwhash_mem = 0;
  std::vector<AdapterConfig> adapters;
  table::Config table;
  map::Config map;
};

// Reads an optional JSON config file, then applies DOCMINE_* environment
// overrides: BIND, PORT, STORE, LEASE_MS, SESSION_TTL_MS, ADAPTERS (JSON
// array), DETECTORS (JSON object with "table" and "map" members).
// Throws ValidationError.
Config load_config(const std::optional<std::string>& path,
                   const std::function<std::optional<std::string>(const std::string&)>& getenv);
Config load_config(const std::optional<std::string>& path);  // process environment
nlohmann::json config_json(const Config& c);
// Same keys as the config file; unknown keys are rejected.
void apply_config_json(Config& c, const nlohmann::json& j);
void validate_config(const Config& c);

struct UploadedFile {
  std::string field;
  std::string filename;
  std::string content_type;
  std::string content;
};

struct Request {
  std::string method;
  std::string path;  // without query string
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
  std::vector<UploadedFile> files;  // multipart parts
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

// The service: routing, sessions and the background parse worker on top of a
// store. handle() is transport-free; serve() exposes it over HTTP.
class Service {
 public:
  Service(Config cfg, const Clock& clock);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle(const Request& req);

  // Blocks until every queued upload has been parsed.
  void wait_idle();

  // Binds and serves until stop(); returns the bound port through on_ready.
  void serve(const std::function<void(int port)>& on_ready = {});
  void stop();

  store::Store& store();
  const Config& config() const;

  // Route table, "METHOD /path/{param}" per line; used by the docs and the
  // endpoint coverage test.
  static std::vector<std::string> routes();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace docmine::api
