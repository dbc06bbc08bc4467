#include "docmine/docmine.h"

#include <httplib.h>

#include <cstdlib>
#include <cstring>
#include <memory>

#include "docmine/api.hpp"
#include "docmine/error.hpp"
#include "docmine/fixtures.hpp"
#include "docmine/map.hpp"
#include "docmine/metadata.hpp"
#include "docmine/pdf.hpp"
#include "docmine/table.hpp"
#include "docmine/text.hpp"

using namespace docmine;
using nlohmann::json;

static_assert(DM_ERR_MALFORMED_PDF == static_cast<int>(ErrorCode::MalformedPdf) + 1);
static_assert(DM_ERR_HEADER_MISMATCH == static_cast<int>(ErrorCode::HeaderMismatch) + 1);
static_assert(DM_ERR_INTERNAL == static_cast<int>(ErrorCode::Internal) + 1);

struct dm_service {
  SystemClock clock;
  std::unique_ptr<api::Service> svc;
};

struct dm_response {
  api::Response res;
};

namespace {

thread_local std::string g_message;
thread_local std::string g_error_json = "null";

void clear_error() {
  g_message.clear();
  g_error_json = "null";
}

int record(const Error& e) {
  g_message = e.what();
  g_error_json = e.to_json().dump();
  return code_number(e.code());
}

// Runs f, translating exceptions into codes; nothing escapes the boundary.
template <typename F>
int guarded(F&& f) {
  clear_error();
  try {
    f();
    return DM_OK;
  } catch (const Error& e) {
    return record(e);
  } catch (const json::exception& e) {
    return record(Error(ErrorCode::ValidationError, e.what()));
  } catch (const std::bad_alloc&) {
    return record(Error(ErrorCode::Internal, "out of memory"));
  } catch (const std::exception& e) {
    return record(Error(ErrorCode::Internal, e.what()));
  } catch (...) {
    return record(Error(ErrorCode::Internal, "unknown failure"));
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::BadRequest, std::string(what) + " must not be NULL");
}

char* dup_bytes(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

api::Config resolve(const char* path, const char* overrides) {
  api::Config c = api::load_config(path ? std::optional<std::string>(path) : std::nullopt);
  if (overrides && *overrides) {
    json j;
    try {
      j = json::parse(overrides);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::ValidationError, std::string("overrides are not valid JSON: ") + e.what());
    }
    api::apply_config_json(c, j);
  }
  api::validate_config(c);
  return c;
}

}  // namespace

extern "C" {

const char* dm_version(void) { return "1.0.0"; }

const char* dm_error_name(int code) {
  static thread_local std::string name;
  if (code == DM_OK) return "Ok";
  if (code < 1 || code > DM_ERR_INTERNAL) return "Unknown";
  name = std::string(code_name(static_cast<ErrorCode>(code - 1)));
  return name.c_str();
}

const char* dm_last_error(void) { return g_message.c_str(); }
const char* dm_last_error_json(void) { return g_error_json.c_str(); }

void dm_free(void* p) { std::free(p); }

int dm_config_resolve(const char* config_path, const char* overrides_json, char** out) {
  return guarded([&] {
    require(out, "out");
    *out = dup_bytes(api::config_json(resolve(config_path, overrides_json)).dump(2));
  });
}

int dm_service_open(const char* config_path, const char* overrides_json, dm_service** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<dm_service>();
    h->svc = std::make_unique<api::Service>(resolve(config_path, overrides_json), h->clock);
    *out = h.release();
  });
}

void dm_service_close(dm_service* svc) { delete svc; }

int dm_service_add_user(dm_service* svc, const char* user_id, const char* display_name, const char* password) {
  return guarded([&] {
    require(svc && user_id && password, "service, user_id and password");
    svc->svc->store().create_user(user_id, display_name ? display_name : "", password);
  });
}

int dm_service_request(dm_service* svc, const char* method, const char* target, const char* headers_json,
                       const void* body, size_t body_len, dm_response** out) {
  return guarded([&] {
    require(svc && method && target && out, "service, method, target and out");
    *out = nullptr;
    api::Request req;
    req.method = method;
    std::string t = target;
    if (const auto q = t.find('?'); q != std::string::npos) {
      httplib::Params params;
      httplib::detail::parse_query_text(t.substr(q + 1), params);
      for (const auto& [k, v] : params) req.query.emplace(k, v);
      t.resize(q);
    }
    req.path = httplib::detail::decode_url(t, false);
    if (headers_json && *headers_json) {
      const json h = json::parse(headers_json);
      if (!h.is_object()) fail(ErrorCode::BadRequest, "headers must be a JSON object");
      for (const auto& [k, v] : h.items()) {
        std::string key = k;
        for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        req.headers[key] = v.get<std::string>();
      }
    }
    if (body && body_len) req.body.assign(static_cast<const char*>(body), body_len);
    *out = new dm_response{svc->svc->handle(req)};
  });
}

int dm_response_status(const dm_response* r) { return r ? r->res.status : 0; }

const char* dm_response_content_type(const dm_response* r) { return r ? r->res.content_type.c_str() : ""; }

const void* dm_response_body(const dm_response* r, size_t* len) {
  if (!r) {
    if (len) *len = 0;
    return nullptr;
  }
  if (len) *len = r->res.body.size();
  return r->res.body.data();
}

const char* dm_response_header(const dm_response* r, const char* name) {
  if (!r || !name) return nullptr;
  for (const auto& [k, v] : r->res.headers)
    if (strcasecmp(k.c_str(), name) == 0) return v.c_str();
  return nullptr;
}

void dm_response_free(dm_response* r) { delete r; }

int dm_service_wait_idle(dm_service* svc) {
  return guarded([&] {
    require(svc, "service");
    svc->svc->wait_idle();
  });
}

int dm_service_serve(dm_service* svc, void (*on_ready)(int, void*), void* user) {
  return guarded([&] {
    require(svc, "service");
    svc->svc->serve([&](int port) {
      if (on_ready) on_ready(port, user);
    });
  });
}

void dm_service_stop(dm_service* svc) {
  if (svc) svc->svc->stop();
}

int dm_fixture_generate(int index, unsigned long long seed, char** pdf, size_t* pdf_len, char** sidecar_json) {
  return guarded([&] {
    require(pdf && pdf_len, "pdf and pdf_len");
    if (index < 0) fail(ErrorCode::ValidationError, "fixture index must be non-negative");
    const fixtures::Fixture f = fixtures::generate(index, seed);
    char* side = sidecar_json ? dup_bytes(f.sidecar.dump(2)) : nullptr;
    *pdf = dup_bytes(f.pdf);
    *pdf_len = f.pdf.size();
    if (sidecar_json) *sidecar_json = side;
  });
}

int dm_fixture_write_corpus(const char* dir, int count, unsigned long long seed) {
  return guarded([&] {
    require(dir, "dir");
    if (count < 0) fail(ErrorCode::ValidationError, "count must be non-negative");
    fixtures::write_corpus(dir, count, seed);
  });
}

int dm_analyze_pdf(const void* bytes, size_t len, char** out) {
  return guarded([&] {
    require(bytes && out, "bytes and out");
    pdf::DocumentSource src = pdf::make_source("doc", "input.pdf", std::string(static_cast<const char*>(bytes), len));
    const auto pages = pdf::parse_document(src);
    json tables = json::array(), maps = json::array();
    for (const auto& page : pages) {
      for (const auto& t : table::detect(page, "doc")) tables.push_back(t);
      for (const auto& m : map::detect(page, "doc")) maps.push_back(m);
    }
    const json j = {{"checksum", src.checksum},
                    {"page_count", pages.size()},
                    {"meta", meta::heuristic_meta(pages)},
                    {"sections", text::extract_sections(pages)},
                    {"tables", tables},
                    {"maps", maps}};
    *out = dup_bytes(j.dump(2));
  });
}

}  // extern "C"
