#include <gtest/gtest.h>

#include <httplib.h>

#include <filesystem>
#include <future>
#include <fstream>
#include <set>
#include <thread>

#include "docmine/api.hpp"
#include "docmine/error.hpp"
#include "docmine/fixtures.hpp"
#include "docmine/integrate.hpp"

using namespace docmine;
using namespace docmine::api;
using nlohmann::json;

namespace {

Config fast_config() {
  Config c;
  c.store_path = ":memory:";
  c.pwhash_ops = 1;
  c.pwhash_mem = 8192;
  c.port = 0;
  return c;
}

// A thin client over handle(); keeps the bearer token.
struct Client {
  Service& svc;
  std::string token;

  Response call(const std::string& method, const std::string& path, const json& body = nullptr,
                std::map<std::string, std::string> query = {}) {
    Request r;
    r.method = method;
    r.path = path;
    r.query = std::move(query);
    if (!body.is_null()) r.body = body.dump();
    if (!token.empty()) r.headers["authorization"] = "Bearer " + token;
    return svc.handle(r);
  }

  json ok(const std::string& method, const std::string& path, const json& body = nullptr) {
    const Response r = call(method, path, body);
    EXPECT_LT(r.status, 300) << method << " " << path << ": " << r.body;
    return r.status == 204 ? json() : r.json();
  }

  void login(const std::string& user, const std::string& pw) {
    const Response r = call("POST", "/api/auth/login", {{"user_id", user}, {"password", pw}});
    ASSERT_EQ(r.status, 200) << r.body;
    token = r.json()["token"];
  }

  std::string upload(const std::string& project, const std::string& name, const std::string& bytes) {
    Request r;
    r.method = "POST";
    r.path = "/api/projects/" + project + "/files";
    r.headers["authorization"] = "Bearer " + token;
    r.files.push_back({"file", name, "application/pdf", bytes});
    const Response res = svc.handle(r);
    EXPECT_EQ(res.status, 202) << res.body;
    return res.json()["file_id"];
  }
};

const json kHeader = {{"fields", {"Sample ID", "Age", "Depth", "Lithology", "Locality", "Latitude", "Longitude"}},
                      {"key_field", "Sample ID"}};

json label_settings() {
  return json::array(
      {{{"label", "coordinate"},
        {"rules", {{{"pattern", R"(\d{1,3}°(\d{1,2}′)?(\d{1,2}(\.\d+)?″)?[NSEW])"}}}}},
       {{"label", "locality"}, {"rules", {{{"gazetteer", {"Palma Sola", "Tethys", "Veracruz"}}}}}}});
}

struct World {
  ManualClock clock;
  Service svc{fast_config(), clock};
  Client ana{svc, ""};
  std::string project;

  World() {
    svc.store().create_user("ana", "Ana", "pw-ana");
    svc.store().create_user("ben", "Ben", "pw-ben");
    ana.login("ana", "pw-ana");
    project = ana.ok("POST", "/api/projects", {{"name", "Coastal sands"}})["project_id"];
    ana.ok("PATCH", "/api/projects/" + project + "/settings", {{"header", kHeader}, {"labels", label_settings()}});
  }
};

}  // namespace

TEST(Api, LoginAndSessions) {
  World w;
  Client anon{w.svc, ""};
  EXPECT_EQ(anon.call("GET", "/api/health").status, 200);
  EXPECT_EQ(anon.call("GET", "/api/projects").status, 401);
  const Response bad = anon.call("POST", "/api/auth/login", {{"user_id", "ana"}, {"password", "nope"}});
  EXPECT_EQ(bad.status, 401);
  EXPECT_EQ(bad.json()["error"]["code"], "Unauthenticated");
  EXPECT_EQ(w.ana.ok("GET", "/api/me")["user_id"], "ana");

  // expiry
  w.clock.advance(w.svc.config().session_ttl_ms);
  EXPECT_EQ(w.ana.call("GET", "/api/me").status, 401);
  w.ana.login("ana", "pw-ana");
  EXPECT_EQ(w.ana.call("POST", "/api/auth/logout").status, 204);
  EXPECT_EQ(w.ana.call("GET", "/api/me").status, 401);
}

TEST(Api, ErrorsMapToStatus) {
  World w;
  EXPECT_EQ(w.ana.call("GET", "/api/nothing").status, 404);
  EXPECT_EQ(w.ana.call("GET", "/api/projects/zz").status, 404);
  Request r;
  r.method = "POST";
  r.path = "/api/projects";
  r.headers["authorization"] = "Bearer " + w.ana.token;
  r.body = "{not json";
  EXPECT_EQ(w.svc.handle(r).status, 400);
  EXPECT_EQ(w.ana.call("POST", "/api/projects", {{"name", 3}}).status, 422);
  EXPECT_EQ(w.ana.call("POST", "/api/users", {{"user_id", "ana"}, {"password", "x"}}).status, 409);
  EXPECT_EQ(w.ana.call("GET", "/api/degree-label", nullptr, {{"text", "19°15′N"}}).json()["value"], 19.25);
  EXPECT_EQ(w.ana.call("GET", "/api/degree-label", nullptr, {{"text", "abc"}}).status, 422);
}

TEST(Api, UploadParsesInBackgroundAndNeedsLock) {
  World w;
  const std::string id = w.ana.upload(w.project, "one.pdf", fixtures::generate(0).pdf);
  w.svc.wait_idle();
  const json rec = w.ana.ok("GET", "/api/files/" + id);
  EXPECT_EQ(rec["status"], "parsed");
  EXPECT_EQ(rec["page_count"], 3);

  // same checksum in the same project
  Request dup;
  dup.method = "POST";
  dup.path = "/api/projects/" + w.project + "/files";
  dup.query["filename"] = "again.pdf";
  dup.headers["authorization"] = "Bearer " + w.ana.token;
  dup.body = fixtures::generate(0).pdf;
  EXPECT_EQ(w.svc.handle(dup).status, 409);

  const json tables = w.ana.ok("GET", "/api/docs/" + id + "/tables");
  ASSERT_EQ(tables.size(), 2u);
  const std::string t = tables[0]["table_id"];
  const Response locked = w.ana.call("POST", "/api/docs/" + id + "/tables/" + t + "/cells/edit",
                                     {{"row", 0}, {"col", 0}, {"text", "x"}});
  EXPECT_EQ(locked.status, 403);
  EXPECT_EQ(locked.json()["error"]["code"], "NotLocked");

  Client ben{w.svc, ""};
  ben.login("ben", "pw-ben");
  w.ana.ok("POST", "/api/files/" + id + "/lock");
  const Response held = ben.call("POST", "/api/files/" + id + "/lock");
  EXPECT_EQ(held.status, 409);
  EXPECT_EQ(held.json()["error"]["detail"]["holder"], "ana");

  // GET is pure; POST open records the view
  EXPECT_TRUE(ben.ok("GET", "/api/files/recent").empty());
  ben.ok("POST", "/api/files/" + id + "/open");
  EXPECT_EQ(ben.ok("GET", "/api/files/recent").size(), 1u);

  const Response pdf = w.ana.call("GET", "/api/files/" + id + "/content");
  EXPECT_EQ(pdf.content_type, "application/pdf");
  EXPECT_EQ(pdf.body, fixtures::generate(0).pdf);
}

TEST(Api, FullPipelineExportsGoldenRows) {
  World w;
  const std::string id = w.ana.upload(w.project, "one.pdf", fixtures::generate(0).pdf);
  w.svc.wait_idle();
  const std::string d = "/api/docs/" + id;
  w.ana.ok("POST", "/api/files/" + id + "/lock");
  for (const json& t : w.ana.ok("GET", d + "/tables")) {
    const std::string p = d + "/tables/" + t["table_id"].get<std::string>();
    w.ana.ok("POST", p + "/confirm-region", json::object());
    w.ana.ok("POST", p + "/structure");
    w.ana.ok("POST", p + "/confirm", {{"stage", "StructureConfirmed"}});
    w.ana.ok("POST", p + "/content");
    EXPECT_EQ(w.ana.ok("POST", p + "/confirm", {{"stage", "ContentConfirmed"}})["stage"], "ContentConfirmed");
  }
  for (const json& s : w.ana.ok("GET", d + "/spans"))
    if (s["text"] == "Palma Sola") w.ana.ok("POST", d + "/spans/" + s["span_id"].get<std::string>() + "/link", {{"field", "Locality"}});
  const std::string m = d + "/maps/" + w.ana.ok("GET", d + "/maps")[0]["map_id"].get<std::string>();
  w.ana.ok("POST", m + "/confirm-region", json::object());
  w.ana.ok("POST", m + "/gridlines");
  w.ana.ok("POST", m + "/fit");
  w.ana.ok("POST", m + "/confirm-calibration");
  const json pt = w.ana.ok("POST", m + "/points", {{"x", 90}, {"y", 70}});
  EXPECT_DOUBLE_EQ(pt["longitude"].get<double>(), -96.25);
  w.ana.ok("POST", m + "/points/" + pt["point_id"].get<std::string>() + "/attach", {{"key", "RP-02"}});

  EXPECT_EQ(w.ana.call("GET", d + "/export").status, 404);
  const json ds = w.ana.ok("POST", d + "/integrate");
  EXPECT_EQ(ds["rows"].size(), 3u);
  const Response csv = w.ana.call("GET", d + "/export", nullptr, {{"format", "csv"}});
  ASSERT_EQ(csv.status, 200);
  EXPECT_EQ(csv.content_type, "text/csv; charset=utf-8");
  const auto grid = integrate::parse_csv(csv.body);
  ASSERT_EQ(grid.size(), 4u);
  EXPECT_EQ(grid[2][0], "RP-02");
  EXPECT_EQ(grid[2][5], "19.25");

  const Response xlsx = w.ana.call("GET", "/api/projects/" + w.project + "/export", nullptr, {{"format", "xlsx"}});
  ASSERT_EQ(xlsx.status, 200);
  EXPECT_NE(xlsx.headers.at("Content-Disposition").find(".xlsx"), std::string::npos);
  const auto sheets = integrate::parse_xlsx(xlsx.body);
  ASSERT_EQ(sheets.size(), 2u);
  EXPECT_EQ(sheets[0].cells.size(), 4u);

  const Response nd = w.ana.call("GET", "/api/projects/" + w.project + "/corrections");
  EXPECT_EQ(nd.content_type, "application/x-ndjson");
  EXPECT_FALSE(nd.body.empty());
}

TEST(Api, RoutesAreUniqueAndServed) {
  const auto routes = Service::routes();
  const std::set<std::string> uniq(routes.begin(), routes.end());
  EXPECT_EQ(uniq.size(), routes.size());
  for (const char* r : {"POST /api/auth/login", "GET /api/projects/{project}/files/search",
                        "POST /api/docs/{doc}/tables/{table}/cells/edit", "POST /api/docs/{doc}/maps/{map}/points",
                        "GET /api/projects/{project}/export", "POST /api/files/{file}/take-charge"})
    EXPECT_TRUE(uniq.count(r)) << r;
  // every route answers: unauthenticated gives 401, public ones never 404
  ManualClock clock;
  Service svc(fast_config(), clock);
  for (const std::string& r : routes) {
    Request req;
    req.method = r.substr(0, r.find(' '));
    req.path = r.substr(r.find(' ') + 1);
    const int st = svc.handle(req).status;
    EXPECT_NE(st, 404) << r;
    EXPECT_NE(st, 500) << r;
  }
}

TEST(Api, ConfigFileAndEnvironment) {
  const auto path = std::filesystem::temp_directory_path() / "docmine_cfg_test.json";
  {
    std::ofstream out(path);
    out << R"({"port": 9001, "lease_ms": 5000, "adapters": [{"id": "grobid", "url": "http://x/meta"}],
              "detectors": {"map": {"pair_distance": 40}}})";
  }
  std::map<std::string, std::string> env{{"DOCMINE_PORT", "9100"}, {"DOCMINE_STORE", "/tmp/x.db"}};
  auto get = [&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  const Config c = load_config(path.string(), get);
  EXPECT_EQ(c.port, 9100);
  EXPECT_EQ(c.lease_ms, 5000);
  EXPECT_EQ(c.store_path, "/tmp/x.db");
  ASSERT_EQ(c.adapters.size(), 1u);
  EXPECT_EQ(c.adapters[0].priority, 1);
  EXPECT_EQ(c.map.pair_distance, 40);
  EXPECT_EQ(config_json(c)["detectors"]["map"]["pair_distance"], 40);

  env["DOCMINE_PORT"] = "nine";
  EXPECT_THROW(load_config(path.string(), get), Error);
  env.erase("DOCMINE_PORT");
  {
    std::ofstream out(path);
    out << R"({"prot": 1})";
  }
  EXPECT_THROW(load_config(path.string(), get), Error);
  std::filesystem::remove(path);
}

TEST(Api, LiveHttpRoundTrip) {
  ManualClock clock;
  Service svc(fast_config(), clock);
  svc.store().create_user("ana", "Ana", "pw-ana");
  std::promise<int> ready;
  std::thread th([&] { svc.serve([&](int port) { ready.set_value(port); }); });
  const int port = ready.get_future().get();
  httplib::Client cli("127.0.0.1", port);
  auto login = cli.Post("/api/auth/login", R"({"user_id":"ana","password":"pw-ana"})", "application/json");
  ASSERT_TRUE(login);
  ASSERT_EQ(login->status, 200);
  const std::string token = json::parse(login->body)["token"];
  httplib::Headers h{{"Authorization", "Bearer " + token}};
  auto proj = cli.Post("/api/projects", h, R"({"name":"p"})", "application/json");
  ASSERT_TRUE(proj);
  EXPECT_EQ(proj->status, 201);
  const std::string pid = json::parse(proj->body)["project_id"];

  httplib::MultipartFormDataItems items{{"file", fixtures::generate(1).pdf, "two.pdf", "application/pdf"}};
  auto up = cli.Post("/api/projects/" + pid + "/files", h, items);
  ASSERT_TRUE(up);
  EXPECT_EQ(up->status, 202);
  svc.wait_idle();
  auto list = cli.Get("/api/projects/" + pid + "/files", h);
  ASSERT_TRUE(list);
  EXPECT_EQ(json::parse(list->body)[0]["status"], "parsed");
  auto none = cli.Get("/api/projects", httplib::Headers{});
  EXPECT_EQ(none->status, 401);
  svc.stop();
  th.join();
}
