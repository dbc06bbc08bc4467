#include "docmine/api.hpp"

#include <httplib.h>
#include <sodium.h>

#include <condition_variable>
#include <deque>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "docmine/error.hpp"
#include "docmine/map.hpp"
#include "docmine/metadata.hpp"

namespace docmine::api {

using nlohmann::json;

namespace {

struct Session {
  std::string user;
  std::int64_t expires_at = 0;
};

struct Ctx {
  const Request& req;
  std::map<std::string, std::string> params;
  std::string user;  // empty for public routes

  const std::string& param(const std::string& k) const { return params.at(k); }

  json body() const {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::BadRequest, std::string("request body is not valid JSON: ") + e.what());
    }
  }

  std::optional<std::string> query(const std::string& k) const {
    auto it = req.query.find(k);
    if (it == req.query.end()) return std::nullopt;
    return it->second;
  }

  bool flag(const std::string& k) const {
    const auto v = query(k);
    return v && (*v == "1" || *v == "true");
  }
};

Response json_response(const json& j, int status = 200) {
  Response r;
  r.status = status;
  r.body = j.dump();
  return r;
}

Response empty_response() {
  Response r;
  r.status = 204;
  r.content_type = "";
  return r;
}

Response error_response(const Error& e) {
  return json_response({{"error", e.to_json()}}, http_status(e.code()));
}

std::vector<std::string> split_path(std::string_view p) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < p.size()) {
    while (i < p.size() && p[i] == '/') ++i;
    const std::size_t j = p.find('/', i);
    const std::size_t end = j == std::string_view::npos ? p.size() : j;
    if (end > i) out.emplace_back(p.substr(i, end - i));
    i = end;
  }
  return out;
}

template <typename T>
std::optional<T> opt_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

int int_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    fail(ErrorCode::ValidationError, std::string("field '") + key + "' must be an integer");
  return j[key].get<int>();
}

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    fail(ErrorCode::ValidationError, std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::string file_stem(std::string name) {
  for (char& c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return name;
}

Response file_response(std::string bytes, std::string_view format, const std::string& stem) {
  Response r;
  r.body = std::move(bytes);
  if (format == "csv") {
    r.content_type = "text/csv; charset=utf-8";
  } else {
    r.content_type = "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet";
  }
  r.headers["Content-Disposition"] = "attachment; filename=\"" + file_stem(stem) + "." + std::string(format) + "\"";
  return r;
}

std::string export_format(const Ctx& c) {
  const std::string f = c.query("format").value_or("csv");
  if (f != "csv" && f != "xlsx") fail(ErrorCode::ValidationError, "format must be csv or xlsx", {{"format", f}});
  return f;
}

// The uploaded payload: a multipart part (field "file" preferred) or the raw
// body with ?filename=.
UploadedFile upload_of(const Ctx& c) {
  if (!c.req.files.empty()) {
    for (const auto& f : c.req.files)
      if (f.field == "file") return f;
    return c.req.files.front();
  }
  const auto name = c.query("filename");
  if (!name || name->empty())
    fail(ErrorCode::ValidationError, "upload needs a multipart file part or a filename query parameter");
  auto ct = c.req.headers.find("content-type");
  return {"file", *name, ct == c.req.headers.end() ? "" : ct->second, c.req.body};
}

Point point_of(const json& b) {
  for (const char* k : {"x", "y"})
    if (!b.contains(k) || !b[k].is_number()) fail(ErrorCode::ValidationError, std::string("field '") + k + "' must be a number");
  return {b["x"].get<double>(), b["y"].get<double>()};
}

json file_list(const std::vector<store::FileRecord>& v) { return json(v); }

}  // namespace

// --- impl ------------------------------------------------------------------------

struct Service::Impl {
  using Handler = std::function<Response(Ctx&)>;
  struct Route {
    std::string method;
    std::string pattern;
    std::vector<std::string> segments;
    bool auth = true;
    Handler handler;
  };

  Config cfg;
  const Clock& clock;
  store::Store store;
  std::vector<std::shared_ptr<const meta::Adapter>> adapters;
  std::vector<Route> routes;

  std::mutex session_mu;
  std::map<std::string, Session> sessions;

  std::mutex queue_mu;
  std::condition_variable queue_cv;
  std::condition_variable idle_cv;
  std::deque<std::string> queue;
  bool busy = false;
  bool stopping = false;
  std::thread worker;

  std::mutex server_mu;
  httplib::Server* server = nullptr;

  static store::Options store_options(const Config& c) {
    store::Options o;
    o.path = c.store_path;
    o.lease_ms = c.lease_ms;
    o.pwhash_ops = c.pwhash_ops;
    o.pwhash_mem = c.pwhash_mem;
    o.table = c.table;
    o.map = c.map;
    return o;
  }

  Impl(Config c, const Clock& clk) : cfg(std::move(c)), clock(clk), store(store_options(cfg), clk) {
    for (const auto& a : cfg.adapters)
      adapters.push_back(std::make_shared<meta::HttpAdapter>(a.id, a.url, a.priority,
                                                             std::chrono::milliseconds(a.timeout_ms)));
    install_routes();
    for (const auto& id : store.pending_files()) queue.push_back(id);  // resume after restart
    worker = std::thread([this] { run_worker(); });
  }

  ~Impl() {
    {
      std::lock_guard g(queue_mu);
      stopping = true;
    }
    queue_cv.notify_all();
    worker.join();
  }

  // --- parse worker -----------------------------------------------------------

  void enqueue(const std::string& id) {
    {
      std::lock_guard g(queue_mu);
      queue.push_back(id);
    }
    queue_cv.notify_all();
  }

  void run_worker() {
    std::unique_lock lk(queue_mu);
    for (;;) {
      queue_cv.wait(lk, [&] { return stopping || !queue.empty(); });
      if (stopping) return;
      const std::string id = queue.front();
      queue.pop_front();
      busy = true;
      lk.unlock();
      try {
        store.parse_file(id, adapters);
      } catch (const std::exception& e) {
        std::cerr << "parse worker: file " << id << ": " << e.what() << "\n";
      }
      lk.lock();
      busy = false;
      idle_cv.notify_all();
    }
  }

  void wait_idle() {
    std::unique_lock lk(queue_mu);
    idle_cv.wait(lk, [&] { return queue.empty() && !busy; });
  }

  // --- sessions -----------------------------------------------------------------

  std::string authenticate(const Request& req) {
    std::string token;
    if (auto it = req.headers.find("authorization"); it != req.headers.end()) {
      const std::string& h = it->second;
      if (h.rfind("Bearer ", 0) == 0) token = h.substr(7);
    }
    const std::int64_t now = clock.now_ms();
    std::lock_guard g(session_mu);
    auto it = sessions.find(token);
    if (token.empty() || it == sessions.end() || it->second.expires_at <= now) {
      if (it != sessions.end()) sessions.erase(it);
      fail(ErrorCode::Unauthenticated, "authentication required");
    }
    return it->second.user;
  }

  std::pair<std::string, std::int64_t> open_session(const std::string& user) {
    unsigned char raw[32];
    randombytes_buf(raw, sizeof raw);
    char hex[2 * sizeof raw + 1];
    sodium_bin2hex(hex, sizeof hex, raw, sizeof raw);
    const std::int64_t expires = clock.now_ms() + cfg.session_ttl_ms;
    std::lock_guard g(session_mu);
    sessions[hex] = {user, expires};
    return {hex, expires};
  }

  // --- dispatch --------------------------------------------------------------------

  void add(std::string method, std::string pattern, Handler h, bool auth = true) {
    Route r{std::move(method), pattern, split_path(pattern), auth, std::move(h)};
    routes.push_back(std::move(r));
  }

  Response handle(const Request& req) {
    try {
      const auto segs = split_path(req.path);
      for (const Route& r : routes) {
        if (r.method != req.method || r.segments.size() != segs.size()) continue;
        std::map<std::string, std::string> params;
        bool match = true;
        for (std::size_t i = 0; i < segs.size() && match; ++i) {
          const std::string& p = r.segments[i];
          if (p.size() > 2 && p.front() == '{' && p.back() == '}')
            params[p.substr(1, p.size() - 2)] = segs[i];
          else
            match = p == segs[i];
        }
        if (!match) continue;
        Ctx ctx{req, std::move(params), {}};
        if (r.auth) ctx.user = authenticate(req);
        return r.handler(ctx);
      }
      fail(ErrorCode::NotFound, "no such endpoint", {{"method", req.method}, {"path", req.path}});
    } catch (const Error& e) {
      return error_response(e);
    } catch (const json::exception& e) {
      return error_response(Error(ErrorCode::ValidationError, std::string("invalid request: ") + e.what()));
    } catch (const std::exception& e) {
      return error_response(Error(ErrorCode::Internal, e.what()));
    }
  }

  // --- routes -----------------------------------------------------------------------------

  void install_routes();
  void install_table_routes();
  void install_text_routes();
  void install_map_routes();
};

void Service::Impl::install_routes() {
  add("GET", "/api/health", [](Ctx&) { return json_response({{"status", "ok"}}); }, false);

  add("POST", "/api/auth/login", [this](Ctx& c) {
    const json b = c.body();
    const auto user = store.verify_password(b.value("user_id", ""), b.value("password", ""));
    if (!user) fail(ErrorCode::Unauthenticated, "invalid credentials");
    const auto [token, expires] = open_session(user->user_id);
    return json_response({{"token", token}, {"user", *user}, {"expires_at", iso8601(expires)}});
  }, false);

  add("POST", "/api/auth/logout", [this](Ctx& c) {
    const std::string h = c.req.headers.at("authorization");
    std::lock_guard g(session_mu);
    sessions.erase(h.substr(7));
    return empty_response();
  });

  add("GET", "/api/me", [this](Ctx& c) { return json_response(store.get_user(c.user)); });

  add("POST", "/api/users", [this](Ctx& c) {
    const json b = c.body();
    return json_response(store.create_user(string_field(b, "user_id"), b.value("display_name", ""),
                                           string_field(b, "password")),
                         201);
  });

  add("GET", "/api/degree-label", [](Ctx& c) {
    const auto v = map::parse_degree_label(c.query("text").value_or(""));
    return json_response({{"value", v.value}, {"axis", v.hint ? json(map::axis_name(*v.hint)) : json(nullptr)}});
  });

  // projects
  add("GET", "/api/projects", [this](Ctx&) { return json_response(store.list_projects()); });
  add("POST", "/api/projects", [this](Ctx& c) {
    const json b = c.body();
    return json_response(store.create_project(c.user, string_field(b, "name"), b.value("description", "")), 201);
  });
  add("GET", "/api/projects/{project}", [this](Ctx& c) { return json_response(store.get_project(c.param("project"))); });
  add("PATCH", "/api/projects/{project}/settings", [this](Ctx& c) {
    const json b = c.body();
    store::SettingsUpdate u;
    u.name = opt_field<std::string>(b, "name");
    u.description = opt_field<std::string>(b, "description");
    u.labels = opt_field<std::vector<text::LabelConfig>>(b, "labels");
    u.header = opt_field<integrate::HeaderConfig>(b, "header");
    if (b.contains("header_edits"))
      for (const json& e : b["header_edits"]) u.header_edits.push_back(integrate::parse_header_edit(e));
    return json_response(store.update_settings(c.param("project"), u));
  });
  add("POST", "/api/projects/{project}/header/upload", [this](Ctx& c) {
    const UploadedFile f = upload_of(c);
    store::SettingsUpdate u;
    u.header = integrate::header_from_spreadsheet(f.content, f.filename);
    return json_response(store.update_settings(c.param("project"), u));
  });

  // files
  add("GET", "/api/projects/{project}/files", [this](Ctx& c) { return json_response(file_list(store.list_files(c.param("project")))); });
  add("POST", "/api/projects/{project}/files", [this](Ctx& c) {
    const UploadedFile f = upload_of(c);
    const auto rec = store.upload_file(c.param("project"), c.user, f.filename, f.content);
    enqueue(rec.file_id);
    return json_response(rec, 202);
  });
  add("GET", "/api/projects/{project}/files/search", [this](Ctx& c) {
    return json_response(file_list(store.search_files(c.param("project"), c.query("q").value_or(""))));
  });
  add("GET", "/api/files/my", [this](Ctx& c) { return json_response(file_list(store.my_files(c.user))); });
  add("GET", "/api/files/recent", [this](Ctx& c) { return json_response(file_list(store.recent_files(c.user))); });
  add("GET", "/api/files/{file}", [this](Ctx& c) { return json_response(store.get_file(c.param("file"))); });
  add("POST", "/api/files/{file}/open", [this](Ctx& c) {
    store.record_view(c.param("file"), c.user);
    return json_response(store.get_file(c.param("file")));
  });
  add("GET", "/api/files/{file}/content", [this](Ctx& c) {
    Response r;
    r.content_type = "application/pdf";
    r.body = store.file_bytes(c.param("file"));
    return r;
  });
  add("POST", "/api/files/{file}/take-charge", [this](Ctx& c) {
    return json_response(store.take_charge(c.param("file"), c.user, c.body().value("release", false)));
  });
  add("POST", "/api/files/{file}/lock", [this](Ctx& c) { return json_response(store.acquire_lock(c.param("file"), c.user)); });
  add("POST", "/api/files/{file}/lock/renew", [this](Ctx& c) { return json_response(store.renew_lock(c.param("file"), c.user)); });
  add("DELETE", "/api/files/{file}/lock", [this](Ctx& c) { return json_response(store.release_lock(c.param("file"), c.user)); });

  // document content and meta
  add("GET", "/api/docs/{doc}/pages", [this](Ctx& c) { return json_response(*store.pages(c.param("doc"))); });
  add("GET", "/api/docs/{doc}/meta", [this](Ctx& c) { return json_response(store.get_meta(c.param("doc"))); });
  add("PUT", "/api/docs/{doc}/meta", [this](Ctx& c) {
    return json_response(store.save_meta(c.param("doc"), c.user, c.body().get<meta::MetaRecord>()));
  });

  install_table_routes();
  install_text_routes();
  install_map_routes();

  // integration
  add("POST", "/api/docs/{doc}/integrate", [this](Ctx& c) { return json_response(store.integrate_document(c.param("doc"))); });
  add("GET", "/api/docs/{doc}/dataset", [this](Ctx& c) {
    const auto ds = store.document_dataset(c.param("doc"));
    if (!ds) fail(ErrorCode::NotFound, "document has not been integrated", {{"doc_id", c.param("doc")}});
    return json_response(*ds);
  });
  add("GET", "/api/docs/{doc}/export", [this](Ctx& c) {
    const std::string fmt = export_format(c);
    const auto ds = store.document_dataset(c.param("doc"));
    if (!ds) fail(ErrorCode::NotFound, "document has not been integrated", {{"doc_id", c.param("doc")}});
    const meta::MetaRecord m = store.effective_meta(c.param("doc"));
    return file_response(integrate::export_document(*ds, &m, fmt), fmt, "document-" + c.param("doc"));
  });
  add("POST", "/api/projects/{project}/integrate", [this](Ctx& c) {
    const auto r = store.integrate_project(c.param("project"), c.body().value("rebuild", false));
    return json_response({{"dataset", r.dataset}, {"skipped", r.skipped}});
  });
  add("GET", "/api/projects/{project}/export", [this](Ctx& c) {
    const std::string fmt = export_format(c);
    const auto r = store.integrate_project(c.param("project"), false);
    return file_response(integrate::export_project(r.dataset, fmt), fmt, "project-" + c.param("project"));
  });
  add("GET", "/api/projects/{project}/corrections", [this](Ctx& c) {
    Response r;
    r.content_type = "application/x-ndjson";
    r.body = store.export_corrections(c.param("project"));
    return r;
  });
}

void Service::Impl::install_table_routes() {
  const std::string t = "/api/docs/{doc}/tables/{table}";
  add("GET", "/api/docs/{doc}/tables", [this](Ctx& c) { return json_response(store.list_tables(c.param("doc"))); });
  add("POST", "/api/docs/{doc}/tables", [this](Ctx& c) {
    const json b = c.body();
    return json_response(store.add_table(c.param("doc"), c.user, int_field(b, "page_index"), b.at("region").get<BBox>()), 201);
  });
  add("POST", "/api/docs/{doc}/tables/detect", [this](Ctx& c) {
    return json_response(store.detect_tables(c.param("doc"), c.user, opt_field<int>(c.body(), "page_index")));
  });
  add("GET", t, [this](Ctx& c) { return json_response(store.get_table(c.param("doc"), c.param("table"))); });
  add("DELETE", t, [this](Ctx& c) {
    store.delete_table(c.param("doc"), c.user, c.param("table"));
    return empty_response();
  });
  add("POST", t + "/confirm-region", [this](Ctx& c) {
    return json_response(store.confirm_table_region(c.param("doc"), c.user, c.param("table"), opt_field<BBox>(c.body(), "region")));
  });
  add("POST", t + "/structure", [this](Ctx& c) {
    return json_response(store.propose_structure(c.param("doc"), c.user, c.param("table")));
  });
  add("POST", t + "/structure/edit", [this](Ctx& c) {
    return json_response(store.edit_structure(c.param("doc"), c.user, c.param("table"), table::parse_edit(c.body())));
  });
  add("POST", t + "/content", [this](Ctx& c) {
    return json_response(store.propose_content(c.param("doc"), c.user, c.param("table")));
  });
  add("POST", t + "/cells/edit", [this](Ctx& c) {
    const json b = c.body();
    return json_response(store.edit_cell(c.param("doc"), c.user, c.param("table"), int_field(b, "row"),
                                         int_field(b, "col"), string_field(b, "text")));
  });
  add("POST", t + "/confirm", [this](Ctx& c) {
    const auto stage = table::parse_stage(string_field(c.body(), "stage"));
    return json_response(store.confirm_table(c.param("doc"), c.user, c.param("table"), stage));
  });
  add("POST", t + "/revert", [this](Ctx& c) {
    const auto stage = table::parse_stage(string_field(c.body(), "stage"));
    return json_response(store.revert_table(c.param("doc"), c.user, c.param("table"), stage));
  });
  add("GET", t + "/mapping", [this](Ctx& c) { return json_response(store.table_mapping(c.param("doc"), c.param("table"))); });
  add("PUT", t + "/mapping", [this](Ctx& c) {
    const json b = c.body();
    std::optional<integrate::ColumnMapping> m;
    if (b.contains("columns") && !b["columns"].is_null()) m = b.get<integrate::ColumnMapping>();
    return json_response(store.set_table_mapping(c.param("doc"), c.user, c.param("table"), m));
  });
}

void Service::Impl::install_text_routes() {
  add("GET", "/api/docs/{doc}/sections", [this](Ctx& c) { return json_response(store.sections(c.param("doc"))); });
  add("GET", "/api/docs/{doc}/spans", [this](Ctx& c) { return json_response(store.spans(c.param("doc"), c.flag("visible"))); });
  add("POST", "/api/docs/{doc}/spans", [this](Ctx& c) {
    const json b = c.body();
    const int start = int_field(b, "start"), end = int_field(b, "end");
    if (start < 0 || end < 0) fail(ErrorCode::InvalidOffsets, "offsets must be non-negative");
    return json_response(store.add_span(c.param("doc"), c.user, int_field(b, "section_index"),
                                        static_cast<std::size_t>(start), static_cast<std::size_t>(end),
                                        string_field(b, "label")),
                         201);
  });
  add("POST", "/api/docs/{doc}/spans/reannotate", [this](Ctx& c) {
    return json_response(store.reannotate(c.param("doc"), c.user));
  });
  add("DELETE", "/api/docs/{doc}/spans/{span}", [this](Ctx& c) {
    store.delete_span(c.param("doc"), c.user, c.param("span"));
    return empty_response();
  });
  add("POST", "/api/docs/{doc}/spans/{span}/link", [this](Ctx& c) {
    return json_response(store.link_span(c.param("doc"), c.user, c.param("span"), opt_field<std::string>(c.body(), "field")));
  });
}

void Service::Impl::install_map_routes() {
  const std::string m = "/api/docs/{doc}/maps/{map}";
  add("GET", "/api/docs/{doc}/maps", [this](Ctx& c) { return json_response(store.list_maps(c.param("doc"))); });
  add("POST", "/api/docs/{doc}/maps", [this](Ctx& c) {
    const json b = c.body();
    return json_response(store.add_map(c.param("doc"), c.user, int_field(b, "page_index"), b.at("region").get<BBox>()), 201);
  });
  add("POST", "/api/docs/{doc}/maps/detect", [this](Ctx& c) {
    return json_response(store.detect_maps(c.param("doc"), c.user, opt_field<int>(c.body(), "page_index")));
  });
  add("GET", m, [this](Ctx& c) { return json_response(store.get_map(c.param("doc"), c.param("map"))); });
  add("DELETE", m, [this](Ctx& c) {
    store.delete_map(c.param("doc"), c.user, c.param("map"));
    return empty_response();
  });
  add("POST", m + "/confirm-region", [this](Ctx& c) {
    return json_response(store.confirm_map_region(c.param("doc"), c.user, c.param("map"), opt_field<BBox>(c.body(), "region")));
  });
  add("POST", m + "/gridlines", [this](Ctx& c) {
    return json_response(store.propose_gridlines(c.param("doc"), c.user, c.param("map")));
  });
  add("POST", m + "/gridlines/edit", [this](Ctx& c) {
    return json_response(store.edit_gridline(c.param("doc"), c.user, c.param("map"), map::parse_edit(c.body())));
  });
  add("POST", m + "/fit", [this](Ctx& c) { return json_response(store.fit_map(c.param("doc"), c.user, c.param("map"))); });
  add("POST", m + "/confirm-calibration", [this](Ctx& c) {
    return json_response(store.confirm_calibration(c.param("doc"), c.user, c.param("map")));
  });
  add("POST", m + "/points", [this](Ctx& c) {
    return json_response(store.mark_point(c.param("doc"), c.user, c.param("map"), point_of(c.body())), 201);
  });
  add("POST", m + "/points/{point}/attach", [this](Ctx& c) {
    return json_response(store.attach_point(c.param("doc"), c.user, c.param("map"), c.param("point"),
                                            opt_field<std::string>(c.body(), "key")));
  });
  add("DELETE", m + "/points/{point}", [this](Ctx& c) {
    return json_response(store.delete_point(c.param("doc"), c.user, c.param("map"), c.param("point")));
  });
  add("POST", m + "/revert", [this](Ctx& c) {
    const auto stage = map::parse_stage(string_field(c.body(), "stage"));
    return json_response(store.revert_map(c.param("doc"), c.user, c.param("map"), stage));
  });
}

// --- public ---------------------------------------------------------------------------------------

Service::Service(Config cfg, const Clock& clock) : impl_(std::make_unique<Impl>(std::move(cfg), clock)) {}
Service::~Service() = default;

Response Service::handle(const Request& req) { return impl_->handle(req); }
void Service::wait_idle() { impl_->wait_idle(); }
store::Store& Service::store() { return impl_->store; }
const Config& Service::config() const { return impl_->cfg; }

std::vector<std::string> Service::routes() {
  ManualClock clock;
  Config cfg;
  cfg.store_path = ":memory:";
  cfg.pwhash_ops = crypto_pwhash_OPSLIMIT_MIN;
  cfg.pwhash_mem = crypto_pwhash_MEMLIMIT_MIN;
  Service s(cfg, clock);
  std::vector<std::string> out;
  for (const auto& r : s.impl_->routes) out.push_back(r.method + " " + r.pattern);
  return out;
}

void Service::serve(const std::function<void(int)>& on_ready) {
  httplib::Server svr;
  svr.set_payload_max_length(256ull << 20);
  auto bridge = [this](const httplib::Request& hreq, httplib::Response& hres) {
    Request req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
    for (const auto& [k, v] : hreq.headers) {
      std::string key = k;
      for (char& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      req.headers.emplace(key, v);
    }
    req.body = hreq.body;
    for (const auto& [name, part] : hreq.files)
      req.files.push_back({part.name, part.filename, part.content_type, part.content});
    const Response res = handle(req);
    hres.status = res.status;
    for (const auto& [k, v] : res.headers) hres.set_header(k, v);
    if (res.status != 204) hres.set_content(res.body, res.content_type);
  };
  const std::string any = ".*";
  svr.Get(any, bridge);
  svr.Post(any, bridge);
  svr.Put(any, bridge);
  svr.Patch(any, bridge);
  svr.Delete(any, bridge);

  int port = impl_->cfg.port;
  if (port == 0) {
    port = svr.bind_to_any_port(impl_->cfg.bind_address);
  } else if (!svr.bind_to_port(impl_->cfg.bind_address, port)) {
    port = -1;
  }
  if (port < 0)
    fail(ErrorCode::Internal, "cannot bind " + impl_->cfg.bind_address + ":" + std::to_string(impl_->cfg.port));
  {
    std::lock_guard g(impl_->server_mu);
    impl_->server = &svr;
  }
  if (on_ready) on_ready(port);
  svr.listen_after_bind();
  std::lock_guard g(impl_->server_mu);
  impl_->server = nullptr;
}

void Service::stop() {
  std::lock_guard g(impl_->server_mu);
  if (impl_->server) impl_->server->stop();
}

}  // namespace docmine::api
