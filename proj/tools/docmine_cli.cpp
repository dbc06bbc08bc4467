// docmine command line: corpus generation, one-shot analysis, the HTTP
// service and scripted requests against a store. Talks to the library only
// through the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <thread>

#include "docmine/docmine.h"

using nlohmann::json;

namespace {

int report(int rc) {
  if (rc != DM_OK) std::cerr << "error: " << dm_error_name(rc) << ": " << dm_last_error() << "\n";
  return rc == DM_OK ? 0 : 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_out(const std::string& path, const void* data, std::size_t n) {
  if (path.empty() || path == "-") {
    std::fwrite(data, 1, n, stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw std::runtime_error("cannot write " + path);
}

struct ServiceOpts {
  std::string config;
  std::string store;
  std::optional<int> port;
  std::string bind;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--store", store, "SQLite store path");
  }

  std::string overrides() const {
    json j = json::object();
    if (!store.empty()) j["store_path"] = store;
    if (port) j["port"] = *port;
    if (!bind.empty()) j["bind_address"] = bind;
    return j.dump();
  }

  int open(dm_service** svc) const {
    const std::string ov = overrides();
    return dm_service_open(config.empty() ? nullptr : config.c_str(), ov.c_str(), svc);
  }
};

struct Closer {
  dm_service* svc = nullptr;
  ~Closer() { dm_service_close(svc); }
};

int cmd_fixtures(const std::string& dir, int count, unsigned long long seed) {
  const int rc = report(dm_fixture_write_corpus(dir.c_str(), count, seed));
  if (rc == 0) std::cerr << "wrote " << count << " fixtures to " << dir << "\n";
  return rc;
}

int cmd_analyze(const std::string& path, const std::string& out) {
  const std::string bytes = read_file(path);
  char* j = nullptr;
  const int rc = dm_analyze_pdf(bytes.data(), bytes.size(), &j);
  if (rc != DM_OK) return report(rc);
  std::string s(j);
  dm_free(j);
  s.push_back('\n');
  write_out(out, s.data(), s.size());
  return 0;
}

int cmd_config(const ServiceOpts& o) {
  char* j = nullptr;
  const std::string ov = o.overrides();
  const int rc = dm_config_resolve(o.config.empty() ? nullptr : o.config.c_str(), ov.c_str(), &j);
  if (rc != DM_OK) return report(rc);
  std::cout << j << "\n";
  dm_free(j);
  return 0;
}

int cmd_user_add(const ServiceOpts& o, const std::string& user, const std::string& name, std::string password) {
  if (password.empty()) {
    if (const char* env = std::getenv("DOCMINE_PASSWORD")) password = env;
  }
  if (password.empty()) {
    std::cerr << "error: give --password or set DOCMINE_PASSWORD\n";
    return 2;
  }
  Closer c;
  if (int rc = o.open(&c.svc); rc != DM_OK) return report(rc);
  return report(dm_service_add_user(c.svc, user.c_str(), name.c_str(), password.c_str()));
}

int cmd_serve(const ServiceOpts& o) {
  // Signals go to a dedicated thread that stops the server.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Closer c;
  if (int rc = o.open(&c.svc); rc != DM_OK) return report(rc);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    dm_service_stop(c.svc);
  });
  const int rc = dm_service_serve(
      c.svc, [](int port, void*) { std::cerr << "listening on port " << port << "\n"; }, nullptr);
  if (rc != DM_OK) {
    pthread_kill(waiter.native_handle(), SIGTERM);
  }
  waiter.join();
  return report(rc);
}

struct RequestOpts {
  std::string user;
  std::string password;
  std::string method;
  std::string target;
  std::string data;
  std::string upload;
  std::string out;
  bool wait = false;
};

int cmd_request(const ServiceOpts& o, RequestOpts r) {
  if (r.password.empty())
    if (const char* env = std::getenv("DOCMINE_PASSWORD")) r.password = env;
  Closer c;
  if (int rc = o.open(&c.svc); rc != DM_OK) return report(rc);

  std::string headers = "{}";
  if (!r.user.empty()) {
    const std::string creds = json{{"user_id", r.user}, {"password", r.password}}.dump();
    dm_response* login = nullptr;
    if (int rc = dm_service_request(c.svc, "POST", "/api/auth/login", nullptr, creds.data(), creds.size(), &login);
        rc != DM_OK)
      return report(rc);
    std::size_t n = 0;
    const char* b = static_cast<const char*>(dm_response_body(login, &n));
    const int status = dm_response_status(login);
    const json j = json::parse(std::string(b, n));
    dm_response_free(login);
    if (status != 200) {
      std::cerr << "login failed: " << j.dump() << "\n";
      return 1;
    }
    headers = json{{"Authorization", "Bearer " + j["token"].get<std::string>()}}.dump();
  }

  std::string body;
  if (!r.upload.empty()) {
    body = read_file(r.upload);
    json h = json::parse(headers);
    h["Content-Type"] = "application/octet-stream";
    headers = h.dump();
  } else if (!r.data.empty()) {
    body = r.data.front() == '@' ? read_file(r.data.substr(1)) : r.data;
  }

  dm_response* res = nullptr;
  if (int rc = dm_service_request(c.svc, r.method.c_str(), r.target.c_str(), headers.c_str(), body.data(),
                                  body.size(), &res);
      rc != DM_OK)
    return report(rc);
  const int status = dm_response_status(res);
  std::size_t n = 0;
  const void* data = dm_response_body(res, &n);
  write_out(r.out, data, n);
  if ((r.out.empty() || r.out == "-") && n) std::cout << "\n";
  dm_response_free(res);
  if (r.wait) dm_service_wait_idle(c.svc);
  std::cerr << "status " << status << "\n";
  return status < 400 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"docmine: annotate scientific PDFs into tabular datasets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dm_version()));

  auto* fx = app.add_subcommand("fixtures", "write the synthetic PDF corpus with ground truth");
  std::string fx_dir = "fixtures";
  int fx_count = 20;
  unsigned long long fx_seed = 20240601;
  fx->add_option("-o,--out", fx_dir, "output directory");
  fx->add_option("-n,--count", fx_count, "number of documents")->check(CLI::NonNegativeNumber);
  fx->add_option("--seed", fx_seed, "generator seed");

  auto* an = app.add_subcommand("analyze", "parse a PDF and print detector proposals as JSON");
  std::string an_path, an_out;
  an->add_option("pdf", an_path, "input PDF")->required()->check(CLI::ExistingFile);
  an->add_option("-o,--out", an_out, "output file (default stdout)");

  ServiceOpts cfg_opts;
  auto* cf = app.add_subcommand("config", "print the effective configuration");
  cfg_opts.add_to(cf);

  ServiceOpts serve_opts;
  auto* sv = app.add_subcommand("serve", "run the HTTP service");
  serve_opts.add_to(sv);
  sv->add_option("--port", serve_opts.port, "listen port (0 picks one)");
  sv->add_option("--bind", serve_opts.bind, "bind address");

  ServiceOpts ua_opts;
  std::string ua_user, ua_name, ua_pw;
  auto* ua = app.add_subcommand("user-add", "create an account");
  ua_opts.add_to(ua);
  ua->add_option("user", ua_user, "user id")->required();
  ua->add_option("--name", ua_name, "display name");
  ua->add_option("--password", ua_pw, "password (or DOCMINE_PASSWORD)");

  ServiceOpts rq_opts;
  RequestOpts rq;
  auto* req = app.add_subcommand("request", "send one API request against a store without a server");
  rq_opts.add_to(req);
  req->add_option("method", rq.method, "HTTP method")->required();
  req->add_option("target", rq.target, "path with query, e.g. /api/projects")->required();
  req->add_option("-u,--user", rq.user, "log in as this user first");
  req->add_option("-p,--password", rq.password, "password (or DOCMINE_PASSWORD)");
  req->add_option("-d,--data", rq.data, "JSON body, or @file");
  req->add_option("-f,--upload", rq.upload, "send a file as the raw body")->check(CLI::ExistingFile);
  req->add_option("-o,--out", rq.out, "write the response body here");
  req->add_flag("--wait", rq.wait, "wait for queued parsing before exiting");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fx) return cmd_fixtures(fx_dir, fx_count, fx_seed);
    if (*an) return cmd_analyze(an_path, an_out);
    if (*cf) return cmd_config(cfg_opts);
    if (*sv) return cmd_serve(serve_opts);
    if (*ua) return cmd_user_add(ua_opts, ua_user, ua_name, ua_pw);
    if (*req) return cmd_request(rq_opts, rq);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
