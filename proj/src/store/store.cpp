#include "docmine/store.hpp"

#include <sqlite3.h>
#include <sodium.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "docmine/error.hpp"
#include "docmine/text_util.hpp"

namespace docmine::store {

using nlohmann::json;

std::string status_name(ParseStatus s) {
  switch (s) {
    case ParseStatus::Pending: return "pending";
    case ParseStatus::Parsed: return "parsed";
    case ParseStatus::Failed: return "failed";
  }
  return "pending";
}

namespace {

ParseStatus parse_status(const std::string& s) {
  if (s == "parsed") return ParseStatus::Parsed;
  if (s == "failed") return ParseStatus::Failed;
  if (s == "pending") return ParseStatus::Pending;
  fail(ErrorCode::ValidationError, "unknown parse status: " + s);
}

json opt_json(const auto& o) { return o ? json(*o) : json(nullptr); }

// --- sqlite ------------------------------------------------------------------

[[noreturn]] void db_fail(sqlite3* db, const std::string& what) {
  fail(ErrorCode::Internal, what + ": " + sqlite3_errmsg(db));
}

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &s_, nullptr) != SQLITE_OK) db_fail(db, "prepare");
  }
  ~Stmt() { sqlite3_finalize(s_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, std::string_view v) {
    sqlite3_bind_text(s_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind_blob(int i, std::string_view v) {
    sqlite3_bind_blob(s_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(s_, i, v);
    return *this;
  }
  bool step() {
    const int rc = sqlite3_step(s_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    db_fail(db_, "step");
  }
  void run() {
    while (step()) {
    }
  }
  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_blob(s_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(s_, col))) : std::string();
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(s_, col); }

 private:
  sqlite3* db_;
  sqlite3_stmt* s_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "exec failed";
    sqlite3_free(err);
    fail(ErrorCode::Internal, msg);
  }
}

class Tx {
 public:
  explicit Tx(sqlite3* db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
  ~Tx() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    exec(db_, "COMMIT");
    done_ = true;
  }

 private:
  sqlite3* db_;
  bool done_ = false;
};

constexpr const char* kSchema = R"sql(
CREATE TABLE counters(name TEXT PRIMARY KEY, value INTEGER NOT NULL);
CREATE TABLE users(user_id TEXT PRIMARY KEY, display_name TEXT NOT NULL, hash TEXT NOT NULL,
                   created_at INTEGER NOT NULL);
CREATE TABLE projects(project_id TEXT PRIMARY KEY, seq INTEGER NOT NULL, body TEXT NOT NULL);
CREATE TABLE files(file_id TEXT PRIMARY KEY, seq INTEGER NOT NULL, project_id TEXT NOT NULL,
                   checksum TEXT NOT NULL, body TEXT NOT NULL, bytes BLOB NOT NULL,
                   UNIQUE(project_id, checksum));
CREATE TABLE docs(file_id TEXT PRIMARY KEY, body TEXT NOT NULL);
CREATE TABLE corrections(event_id INTEGER PRIMARY KEY AUTOINCREMENT, project_id TEXT NOT NULL,
                         body TEXT NOT NULL);
CREATE TABLE views(user_id TEXT NOT NULL, file_id TEXT NOT NULL, at INTEGER NOT NULL,
                   seq INTEGER NOT NULL, PRIMARY KEY(user_id, file_id));
)sql";

// --- per-document state -------------------------------------------------------

struct DocState {
  MetaState meta;
  std::vector<table::Artifact> tables;
  std::map<std::string, integrate::ColumnMapping> mappings;  // user overrides
  std::vector<map::Artifact> maps;
  std::vector<text::EntitySpan> spans;
  int next_table = 1;
  int next_map = 1;
  int next_span = 1;
  std::optional<integrate::DocumentDataset> dataset;
};

bool same_meta(const MetaState& a, const MetaState& b) {
  return a.candidates == b.candidates && a.record == b.record;
}

bool same(const DocState& a, const DocState& b) {
  return same_meta(a.meta, b.meta) && a.tables == b.tables && a.mappings == b.mappings &&
         a.maps == b.maps && a.spans == b.spans && a.next_table == b.next_table &&
         a.next_map == b.next_map && a.next_span == b.next_span && a.dataset == b.dataset;
}

json doc_json(const DocState& d) {
  json mappings = json::object();
  for (const auto& [id, m] : d.mappings) mappings[id] = m;
  return {{"meta", d.meta},
          {"tables", d.tables},
          {"mappings", mappings},
          {"maps", d.maps},
          {"spans", d.spans},
          {"next_table", d.next_table},
          {"next_map", d.next_map},
          {"next_span", d.next_span},
          {"dataset", opt_json(d.dataset)}};
}

DocState doc_from_json(const json& j) {
  DocState d;
  d.meta.candidates = j.at("meta").at("candidates").get<std::vector<meta::SourceCandidate>>();
  if (!j["meta"]["record"].is_null()) d.meta.record = j["meta"]["record"].get<meta::MetaRecord>();
  d.tables = j.at("tables").get<std::vector<table::Artifact>>();
  for (const auto& [id, m] : j.at("mappings").items()) d.mappings[id] = m.get<integrate::ColumnMapping>();
  d.maps = j.at("maps").get<std::vector<map::Artifact>>();
  d.spans = j.at("spans").get<std::vector<text::EntitySpan>>();
  d.next_table = j.at("next_table").get<int>();
  d.next_map = j.at("next_map").get<int>();
  d.next_span = j.at("next_span").get<int>();
  if (!j.at("dataset").is_null()) d.dataset = j["dataset"].get<integrate::DocumentDataset>();
  return d;
}

struct FileEntry {
  FileRecord rec;
  DocState doc;
  std::int64_t seq = 0;
  std::shared_ptr<const std::vector<pdf::PageModel>> pages;  // lazy cache
  std::shared_ptr<const std::vector<text::Section>> sections;
};

struct UserEntry {
  User user;
  std::string hash;
};

std::vector<std::string> search_tokens(const meta::MetaRecord& m) {
  std::string all;
  auto add = [&](const std::string& s) { all += s + " "; };
  if (m.title) add(*m.title);
  if (m.authors)
    for (const auto& a : *m.authors) add(a);
  if (m.venue) add(*m.venue);
  if (m.year) add(std::to_string(*m.year));
  if (m.abstract) add(*m.abstract);
  return text::tokenize(all);
}

}  // namespace

// --- implementation ---------------------------------------------------------------

struct Store::Impl {
  Options opts;
  const Clock& clock;
  sqlite3* db = nullptr;
  mutable std::mutex mu;

  std::map<std::string, UserEntry> users;
  std::map<std::string, std::pair<std::int64_t, Project>> projects;  // id -> (seq, project)
  std::map<std::string, FileEntry> files;
  std::map<std::string, std::int64_t> counters;
  std::map<std::pair<std::string, std::string>, std::pair<std::int64_t, std::int64_t>> views;
  std::map<std::string, std::set<std::string>> postings;  // token -> file ids
  std::map<std::string, std::vector<std::string>> file_tokens;
  std::string dummy_hash;
  table::OcrFn ocr;

  Impl(Options o, const Clock& c) : opts(std::move(o)), clock(c) {
    if (sodium_init() < 0) fail(ErrorCode::Internal, "libsodium initialisation failed");
    if (opts.pwhash_ops == 0) opts.pwhash_ops = crypto_pwhash_OPSLIMIT_INTERACTIVE;
    if (opts.pwhash_mem == 0) opts.pwhash_mem = crypto_pwhash_MEMLIMIT_INTERACTIVE;
    if (opts.lease_ms <= 0) fail(ErrorCode::ValidationError, "lease duration must be positive");
    if (sqlite3_open_v2(opts.path.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
      const std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
      sqlite3_close(db);
      fail(ErrorCode::Internal, "cannot open store " + opts.path + ": " + msg);
    }
    try {
      sqlite3_busy_timeout(db, 5000);
      exec(db, "PRAGMA journal_mode=WAL; PRAGMA synchronous=FULL; PRAGMA foreign_keys=ON;");
      migrate();
      load();
      dummy_hash = hash_password("not a password");
    } catch (...) {
      sqlite3_close(db);
      throw;
    }
  }

  ~Impl() { sqlite3_close(db); }

  void migrate() {
    Stmt v(db, "PRAGMA user_version");
    v.step();
    const auto version = v.integer(0);
    if (version == kSchemaVersion) return;
    if (version != 0)
      fail(ErrorCode::Internal, "store schema version " + std::to_string(version) + " is not supported",
           {{"found", version}, {"supported", kSchemaVersion}});
    Tx tx(db);
    exec(db, kSchema);
    exec(db, ("PRAGMA user_version=" + std::to_string(kSchemaVersion)).c_str());
    tx.commit();
  }

  void load() {
    for (Stmt s(db, "SELECT name, value FROM counters"); s.step();) counters[s.text(0)] = s.integer(1);
    for (Stmt s(db, "SELECT user_id, display_name, hash, created_at FROM users"); s.step();)
      users[s.text(0)] = {{s.text(0), s.text(1), s.integer(3)}, s.text(2)};
    for (Stmt s(db, "SELECT project_id, seq, body FROM projects"); s.step();)
      projects[s.text(0)] = {s.integer(1), json::parse(s.text(2)).get<Project>()};
    for (Stmt s(db, "SELECT f.file_id, f.seq, f.body, d.body FROM files f JOIN docs d USING(file_id)");
         s.step();) {
      FileEntry& fe = files[s.text(0)];
      fe.seq = s.integer(1);
      fe.rec = json::parse(s.text(2)).get<FileRecord>();
      fe.doc = doc_from_json(json::parse(s.text(3)));
      reindex(fe);
    }
    for (Stmt s(db, "SELECT user_id, file_id, at, seq FROM views"); s.step();)
      views[{s.text(0), s.text(1)}] = {s.integer(2), s.integer(3)};
  }

  std::string hash_password(const std::string& pw) const {
    char out[crypto_pwhash_STRBYTES];
    if (crypto_pwhash_str(out, pw.data(), pw.size(), opts.pwhash_ops, opts.pwhash_mem) != 0)
      fail(ErrorCode::Internal, "password hashing ran out of memory");
    return out;
  }

  std::int64_t next_id(const std::string& name) {
    const std::int64_t v = ++counters[name];
    Stmt(db, "INSERT INTO counters(name, value) VALUES(?, ?) ON CONFLICT(name) DO UPDATE SET value=excluded.value")
        .bind(1, name)
        .bind(2, v)
        .run();
    return v;
  }

  // --- lookups ---------------------------------------------------------------

  void require_user(const std::string& id) const {
    if (!users.count(id)) fail(ErrorCode::UnknownUser, "unknown user", {{"user_id", id}});
  }

  Project& project(const std::string& id) {
    auto it = projects.find(id);
    if (it == projects.end()) fail(ErrorCode::UnknownProject, "unknown project", {{"project_id", id}});
    return it->second.second;
  }
  const Project& project(const std::string& id) const { return const_cast<Impl*>(this)->project(id); }

  FileEntry& entry(const std::string& id) {
    auto it = files.find(id);
    if (it == files.end()) fail(ErrorCode::UnknownDocument, "unknown document", {{"doc_id", id}});
    return it->second;
  }
  const FileEntry& entry(const std::string& id) const { return const_cast<Impl*>(this)->entry(id); }

  std::string load_bytes(const std::string& id) const {
    Stmt s(db, "SELECT bytes FROM files WHERE file_id=?");
    s.bind(1, id);
    if (!s.step()) fail(ErrorCode::UnknownDocument, "unknown document", {{"doc_id", id}});
    return s.text(0);
  }

  const std::vector<pdf::PageModel>& pages_of(const FileEntry& cfe) const {
    auto& fe = const_cast<FileEntry&>(cfe);
    if (fe.rec.status != ParseStatus::Parsed)
      fail(ErrorCode::InvalidStage, "document is not parsed",
           {{"doc_id", fe.rec.file_id}, {"status", status_name(fe.rec.status)}});
    if (!fe.pages) fe.pages = std::make_shared<const std::vector<pdf::PageModel>>(pdf::parse_bytes(load_bytes(fe.rec.file_id)));
    return *fe.pages;
  }

  const std::vector<text::Section>& sections_of(const FileEntry& cfe) const {
    auto& fe = const_cast<FileEntry&>(cfe);
    if (!fe.sections)
      fe.sections = std::make_shared<const std::vector<text::Section>>(text::extract_sections(pages_of(fe)));
    return *fe.sections;
  }

  const pdf::PageModel& page_of(const FileEntry& fe, int index) const {
    const auto& pages = pages_of(fe);
    if (index < 0 || index >= static_cast<int>(pages.size()))
      fail(ErrorCode::ValidationError, "page index out of range",
           {{"page_index", index}, {"page_count", pages.size()}});
    return pages[static_cast<std::size_t>(index)];
  }

  // --- persistence ------------------------------------------------------------

  void write_file(const FileRecord& rec) {
    Stmt(db, "UPDATE files SET body=? WHERE file_id=?").bind(1, json(rec).dump()).bind(2, rec.file_id).run();
  }

  void write_doc(const std::string& id, const DocState& d) {
    Stmt(db, "INSERT INTO docs(file_id, body) VALUES(?, ?) ON CONFLICT(file_id) DO UPDATE SET body=excluded.body")
        .bind(1, id)
        .bind(2, doc_json(d).dump())
        .run();
  }

  void write_project(const std::string& id) {
    const auto& [seq, p] = projects.at(id);
    Stmt(db, "INSERT INTO projects(project_id, seq, body) VALUES(?, ?, ?) "
             "ON CONFLICT(project_id) DO UPDATE SET body=excluded.body")
        .bind(1, id)
        .bind(2, seq)
        .bind(3, json(p).dump())
        .run();
  }

  void append_correction(const FileRecord& rec, const Correction& c, const std::string& user,
                         std::int64_t t) {
    const json body{{"doc_id", rec.file_id}, {"module", c.module}, {"stage", c.stage},
                    {"action", c.action},    {"before", c.before}, {"after", c.after},
                    {"user", user},          {"time", iso8601(t)}};
    Stmt(db, "INSERT INTO corrections(project_id, body) VALUES(?, ?)")
        .bind(1, rec.project_id)
        .bind(2, body.dump())
        .run();
  }

  void reindex(const FileEntry& fe) {
    const std::string& id = fe.rec.file_id;
    for (const auto& tok : file_tokens[id]) postings[tok].erase(id);
    std::vector<std::string> toks;
    if (fe.doc.meta.record) toks = search_tokens(*fe.doc.meta.record);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (const auto& tok : toks) postings[tok].insert(id);
    file_tokens[id] = std::move(toks);
  }

  // --- locking ------------------------------------------------------------------

  static json lock_detail(const LockLease& l) {
    return {{"holder", l.holder}, {"expires_at", iso8601(l.expires_at)}};
  }

  void require_lock(const FileRecord& rec, const std::string& user, std::int64_t t) const {
    if (rec.lock && rec.lock->active(t) && rec.lock->holder == user) return;
    json detail{{"doc_id", rec.file_id}};
    if (rec.lock && rec.lock->active(t)) detail.update(lock_detail(*rec.lock));
    fail(ErrorCode::NotLocked, "an active edit lock held by the caller is required", detail);
  }

  // Runs f on a copy of the document state and commits it together with the
  // corrections f produced. Unchanged state is not written.
  template <typename F>
  auto mutate(const std::string& doc_id, const std::string& user, F&& f) {
    std::lock_guard g(mu);
    FileEntry& fe = entry(doc_id);
    const std::int64_t t = clock.now_ms();
    require_lock(fe.rec, user, t);
    DocState next = fe.doc;
    std::vector<Correction> logs;
    auto result = f(next, logs, fe, t);
    if (logs.empty() && same(next, fe.doc)) return result;
    FileRecord rec = fe.rec;
    rec.last_editor = user;
    rec.updated_at = t;
    rec.lock->last_activity = t;
    Tx tx(db);
    write_doc(doc_id, next);
    write_file(rec);
    for (const auto& c : logs) append_correction(rec, c, user, t);
    tx.commit();
    fe.doc = std::move(next);
    fe.rec = std::move(rec);
    reindex(fe);
    return result;
  }

  template <typename F>
  FileRecord update_record(const std::string& file_id, F&& f) {
    std::lock_guard g(mu);
    FileEntry& fe = entry(file_id);
    FileRecord rec = fe.rec;
    f(rec, clock.now_ms());
    if (rec == fe.rec) return rec;
    Tx tx(db);
    write_file(rec);
    tx.commit();
    fe.rec = rec;
    return rec;
  }

  // --- artifacts ------------------------------------------------------------------

  static table::Artifact& find_table(DocState& d, const std::string& id) {
    for (auto& a : d.tables)
      if (a.table_id == id) return a;
    fail(ErrorCode::UnknownTable, "unknown table", {{"table_id", id}});
  }
  static map::Artifact& find_map(DocState& d, const std::string& id) {
    for (auto& a : d.maps)
      if (a.map_id == id) return a;
    fail(ErrorCode::UnknownMap, "unknown map", {{"map_id", id}});
  }

  std::vector<int> page_scope(const FileEntry& fe, std::optional<int> page_index) const {
    std::vector<int> out;
    if (page_index) {
      page_of(fe, *page_index);
      out.push_back(*page_index);
    } else {
      for (const auto& p : pages_of(fe)) out.push_back(p.page_index);
    }
    return out;
  }

  // Replaces untouched Detected proposals on the pages in scope. A proposal
  // found again keeps its id.
  void detect_tables_into(DocState& d, const FileEntry& fe, const std::vector<int>& scope, std::int64_t t) {
    for (int pi : scope) {
      auto fresh = table::detect(page_of(fe, pi), fe.rec.file_id, opts.table);
      std::vector<table::Artifact> keep;
      for (auto& a : d.tables) {
        if (a.page_index != pi || a.stage != table::Stage::Detected) {
          keep.push_back(a);
          continue;
        }
        if (std::any_of(fresh.begin(), fresh.end(), [&](const auto& f) { return f.region == a.region; }))
          keep.push_back(a);
      }
      for (auto& f : fresh) {
        if (std::any_of(keep.begin(), keep.end(),
                        [&](const auto& a) { return a.page_index == pi && a.region == f.region; }))
          continue;
        f.table_id = "t" + std::to_string(d.next_table++);
        f.created_at = f.updated_at = t;
        keep.push_back(f);
      }
      d.tables = std::move(keep);
    }
  }

  void detect_maps_into(DocState& d, const FileEntry& fe, const std::vector<int>& scope, std::int64_t t) {
    for (int pi : scope) {
      auto fresh = map::detect(page_of(fe, pi), fe.rec.file_id, opts.map);
      std::vector<map::Artifact> keep;
      for (auto& a : d.maps) {
        if (a.page_index != pi || a.stage != map::Stage::Detected) {
          keep.push_back(a);
          continue;
        }
        if (std::any_of(fresh.begin(), fresh.end(), [&](const auto& f) { return f.region == a.region; }))
          keep.push_back(a);
      }
      for (auto& f : fresh) {
        if (std::any_of(keep.begin(), keep.end(),
                        [&](const auto& a) { return a.page_index == pi && a.region == f.region; }))
          continue;
        f.map_id = "m" + std::to_string(d.next_map++);
        f.created_at = f.updated_at = t;
        keep.push_back(f);
      }
      d.maps = std::move(keep);
    }
  }

  auto span_ids(DocState& d) {
    return [&d] { return "s" + std::to_string(d.next_span++); };
  }

  // Applies op to one table and stamps it when it changed.
  template <typename Op>
  table::Artifact table_op(const std::string& doc_id, const std::string& user, const std::string& id, Op op) {
    return mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry& fe, std::int64_t t) {
      table::Artifact& a = find_table(d, id);
      const table::Artifact before = a;
      if (auto c = op(a, fe, t)) logs.push_back(std::move(*c));
      if (!(a == before)) a.updated_at = t;
      return a;
    });
  }

  template <typename Op>
  map::Artifact map_op(const std::string& doc_id, const std::string& user, const std::string& id, Op op) {
    return mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry& fe, std::int64_t t) {
      map::Artifact& a = find_map(d, id);
      const map::Artifact before = a;
      if (auto c = op(a, fe, t)) logs.push_back(std::move(*c));
      if (!(a == before)) a.updated_at = t;
      return a;
    });
  }

  // --- integration ----------------------------------------------------------------

  integrate::ColumnMapping mapping_for(const DocState& d, const table::Artifact& a,
                                       const integrate::HeaderConfig& h,
                                       std::vector<std::string>* warnings) const {
    const auto values = table::value_grid(a);
    if (auto it = d.mappings.find(a.table_id); it != d.mappings.end()) {
      try {
        integrate::check_mapping(it->second, h, values.empty() ? 0 : values.front().size());
        return it->second;
      } catch (const Error& e) {
        if (warnings)
          warnings->push_back("table " + a.table_id + ": saved column mapping no longer fits the header (" +
                              e.what() + "); inferred mapping used");
      }
    }
    return integrate::infer_column_mapping(values, h);
  }

  integrate::DocumentDataset build(FileEntry& fe) {
    const Project& p = project(fe.rec.project_id);
    const DocState& d = fe.doc;
    integrate::DocumentInput in;
    in.doc_id = fe.rec.file_id;
    in.metadata_id = fe.rec.file_id;
    std::vector<std::string> notes;
    for (const auto& a : d.tables) {
      if (a.stage != table::Stage::ContentConfirmed || !p.header) continue;
      in.tables.push_back({a.table_id, a.confirmed_at.value_or(a.updated_at), table::value_grid(a),
                           mapping_for(d, a, *p.header, &notes)});
    }
    for (const auto& s : d.spans)
      if (s.linked_field && !s.stale) in.spans.push_back({s.span_id, *s.linked_field, s.text});
    for (const auto& m : d.maps)
      for (const auto& pt : m.points)
        in.points.push_back({pt.point_id, pt.attached_key, pt.latitude, pt.longitude});
    auto ds = integrate::build_document_rows(in, p.header ? &*p.header : nullptr);
    ds.warnings.insert(ds.warnings.begin(), notes.begin(), notes.end());
    return ds;
  }

  void store_dataset(FileEntry& fe, integrate::DocumentDataset ds) {
    DocState next = fe.doc;
    next.dataset = std::move(ds);
    if (same(next, fe.doc)) return;
    Tx tx(db);
    write_doc(fe.rec.file_id, next);
    tx.commit();
    fe.doc = std::move(next);
  }

  std::vector<FileEntry*> project_files(const std::string& project_id) {
    std::vector<FileEntry*> out;
    for (auto& [id, fe] : files)
      if (fe.rec.project_id == project_id) out.push_back(&fe);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->seq < b->seq; });
    return out;
  }

  meta::MetaRecord effective_meta(const FileEntry& fe) const {
    return fe.doc.meta.record.value_or(meta::MetaRecord{});
  }
};

// --- public surface ---------------------------------------------------------------------

Store::Store(Options opts, const Clock& clock) : impl_(std::make_unique<Impl>(std::move(opts), clock)) {}
Store::~Store() = default;

const Options& Store::options() const { return impl_->opts; }
std::int64_t Store::now() const { return impl_->clock.now_ms(); }

User Store::create_user(const std::string& user_id, const std::string& display_name,
                        const std::string& password) {
  const bool ok_id = !user_id.empty() && user_id.size() <= 64 &&
                     std::all_of(user_id.begin(), user_id.end(), [](unsigned char c) {
                       return std::isalnum(c) || c == '.' || c == '_' || c == '-';
                     });
  if (!ok_id)
    fail(ErrorCode::ValidationError, "user id must be 1-64 characters of letters, digits, '.', '_' or '-'");
  if (password.empty()) fail(ErrorCode::ValidationError, "password must not be empty");
  const std::string hash = impl_->hash_password(password);  // slow; outside the lock
  std::lock_guard g(impl_->mu);
  if (impl_->users.count(user_id)) fail(ErrorCode::DuplicateUser, "user already exists", {{"user_id", user_id}});
  const std::string name = display_name.empty() ? user_id : text::collapse_whitespace(display_name);
  User u{user_id, name, impl_->clock.now_ms()};
  Tx tx(impl_->db);
  Stmt(impl_->db, "INSERT INTO users(user_id, display_name, hash, created_at) VALUES(?, ?, ?, ?)")
      .bind(1, u.user_id)
      .bind(2, u.display_name)
      .bind(3, hash)
      .bind(4, u.created_at)
      .run();
  tx.commit();
  impl_->users[user_id] = {u, hash};
  return u;
}

User Store::get_user(const std::string& user_id) const {
  std::lock_guard g(impl_->mu);
  impl_->require_user(user_id);
  return impl_->users.at(user_id).user;
}

std::optional<User> Store::verify_password(const std::string& user_id, const std::string& password) const {
  std::string hash;
  std::optional<User> user;
  {
    std::lock_guard g(impl_->mu);
    auto it = impl_->users.find(user_id);
    if (it != impl_->users.end()) {
      hash = it->second.hash;
      user = it->second.user;
    } else {
      hash = impl_->dummy_hash;
    }
  }
  const bool ok = crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) == 0;
  if (ok && user) return user;
  return std::nullopt;
}

Project Store::create_project(const std::string& user, const std::string& name,
                              const std::string& description) {
  std::lock_guard g(impl_->mu);
  impl_->require_user(user);
  const std::string clean = text::collapse_whitespace(name);
  if (clean.empty()) fail(ErrorCode::ValidationError, "project name must not be empty");
  Tx tx(impl_->db);
  const std::int64_t seq = impl_->next_id("project");
  const std::int64_t t = impl_->clock.now_ms();
  Project p{std::to_string(seq), clean, description, {}, std::nullopt, user, t, t};
  impl_->projects[p.project_id] = {seq, p};
  try {
    impl_->write_project(p.project_id);
    tx.commit();
  } catch (...) {
    impl_->projects.erase(p.project_id);
    --impl_->counters["project"];
    throw;
  }
  return p;
}

std::vector<Project> Store::list_projects() const {
  std::lock_guard g(impl_->mu);
  std::vector<std::pair<std::int64_t, Project>> all;
  for (const auto& [id, sp] : impl_->projects) all.push_back(sp);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Project> out;
  for (auto& [seq, p] : all) out.push_back(std::move(p));
  return out;
}

Project Store::get_project(const std::string& project_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->project(project_id);
}

Project Store::update_settings(const std::string& project_id, const SettingsUpdate& u) {
  std::lock_guard g(impl_->mu);
  Project p = impl_->project(project_id);
  if (u.name) {
    p.name = text::collapse_whitespace(*u.name);
    if (p.name.empty()) fail(ErrorCode::ValidationError, "project name must not be empty");
  }
  if (u.description) p.description = *u.description;
  if (u.labels) {
    text::validate_labels(*u.labels);
    p.labels = *u.labels;
  }
  if (u.header) {
    integrate::validate(*u.header);
    p.header = *u.header;
  }
  if (!u.header_edits.empty()) {
    if (!p.header) fail(ErrorCode::NoHeaderConfig, "project has no header configuration");
    p.header = integrate::edit_header(*p.header, u.header_edits);
  }
  if (p == impl_->project(project_id)) return p;
  p.updated_at = impl_->clock.now_ms();
  const Project old = impl_->project(project_id);
  impl_->project(project_id) = p;
  try {
    Tx tx(impl_->db);
    impl_->write_project(project_id);
    tx.commit();
  } catch (...) {
    impl_->project(project_id) = old;
    throw;
  }
  return p;
}

FileRecord Store::upload_file(const std::string& project_id, const std::string& user,
                              const std::string& filename, const std::string& bytes) {
  const std::string checksum = pdf::content_checksum(bytes);
  std::lock_guard g(impl_->mu);
  impl_->require_user(user);
  impl_->project(project_id);
  if (bytes.empty()) fail(ErrorCode::ValidationError, "uploaded file is empty");
  const std::string name = text::collapse_whitespace(filename);
  if (name.empty()) fail(ErrorCode::ValidationError, "file name must not be empty");
  for (const auto& [id, fe] : impl_->files)
    if (fe.rec.project_id == project_id && fe.rec.checksum == checksum)
      fail(ErrorCode::DuplicateChecksum, "the same file is already in this project",
           {{"file_id", id}, {"filename", fe.rec.filename}});
  const std::int64_t t = impl_->clock.now_ms();
  Tx tx(impl_->db);
  const std::int64_t seq = impl_->next_id("file");
  FileRecord rec;
  rec.file_id = std::to_string(seq);
  rec.project_id = project_id;
  rec.filename = name;
  rec.checksum = checksum;
  rec.uploader = rec.last_editor = user;
  rec.uploaded_at = rec.updated_at = t;
  try {
    Stmt(impl_->db, "INSERT INTO files(file_id, seq, project_id, checksum, body, bytes) VALUES(?, ?, ?, ?, ?, ?)")
        .bind(1, rec.file_id)
        .bind(2, seq)
        .bind(3, project_id)
        .bind(4, checksum)
        .bind(5, json(rec).dump())
        .bind_blob(6, bytes)
        .run();
    impl_->write_doc(rec.file_id, DocState{});
    tx.commit();
  } catch (...) {
    --impl_->counters["file"];
    throw;
  }
  FileEntry& fe = impl_->files[rec.file_id];
  fe.rec = rec;
  fe.seq = seq;
  impl_->reindex(fe);
  return rec;
}

FileRecord Store::parse_file(const std::string& file_id,
                             const std::vector<std::shared_ptr<const meta::Adapter>>& adapters) {
  std::string bytes, filename;
  {
    std::lock_guard g(impl_->mu);
    const FileEntry& fe = impl_->entry(file_id);
    if (fe.rec.status != ParseStatus::Pending) return fe.rec;
    bytes = impl_->load_bytes(file_id);
    filename = fe.rec.filename;
  }
  std::vector<pdf::PageModel> pages;
  std::vector<meta::SourceCandidate> candidates;
  std::optional<Error> error;
  try {
    pdf::DocumentSource src = pdf::make_source(file_id, filename, bytes);
    pages = pdf::parse_document(src);
    candidates = meta::extract_meta_candidates(src, pages, adapters);
  } catch (const Error& e) {
    error = e;
  } catch (const std::exception& e) {
    error = Error(ErrorCode::MalformedPdf, e.what());
  }

  std::lock_guard g(impl_->mu);
  FileEntry& fe = impl_->entry(file_id);
  if (fe.rec.status != ParseStatus::Pending) return fe.rec;
  const std::int64_t t = impl_->clock.now_ms();
  FileRecord rec = fe.rec;
  rec.updated_at = t;
  if (error) {
    rec.status = ParseStatus::Failed;
    rec.status_detail = error->to_json();
    Tx tx(impl_->db);
    impl_->write_file(rec);
    tx.commit();
    fe.rec = rec;
    return rec;
  }
  rec.status = ParseStatus::Parsed;
  rec.page_count = static_cast<int>(pages.size());
  const FileRecord old = fe.rec;
  fe.rec.status = ParseStatus::Parsed;  // page accessors below need it
  fe.pages = std::make_shared<const std::vector<pdf::PageModel>>(std::move(pages));
  fe.sections.reset();
  try {
    DocState next = fe.doc;
    next.meta.candidates = candidates;
    next.meta.record = meta::vote_merge(candidates);
    const auto scope = impl_->page_scope(fe, std::nullopt);
    impl_->detect_tables_into(next, fe, scope, t);
    impl_->detect_maps_into(next, fe, scope, t);
    next.spans = text::reannotate({}, impl_->sections_of(fe), impl_->project(rec.project_id).labels, file_id,
                                  impl_->span_ids(next));
    Tx tx(impl_->db);
    impl_->write_doc(file_id, next);
    impl_->write_file(rec);
    tx.commit();
    fe.doc = std::move(next);
    fe.rec = rec;
  } catch (...) {
    fe.rec = old;
    fe.pages.reset();
    fe.sections.reset();
    throw;
  }
  impl_->reindex(fe);
  return rec;
}

std::vector<std::string> Store::pending_files() const {
  std::lock_guard g(impl_->mu);
  std::vector<std::pair<std::int64_t, std::string>> out;
  for (const auto& [id, fe] : impl_->files)
    if (fe.rec.status == ParseStatus::Pending) out.emplace_back(fe.seq, id);
  std::sort(out.begin(), out.end());
  std::vector<std::string> ids;
  for (auto& [seq, id] : out) ids.push_back(id);
  return ids;
}

FileRecord Store::get_file(const std::string& file_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->entry(file_id).rec;
}

std::string Store::file_bytes(const std::string& file_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->load_bytes(file_id);
}

std::vector<FileRecord> Store::list_files(const std::string& project_id) const {
  std::lock_guard g(impl_->mu);
  impl_->project(project_id);
  std::vector<FileRecord> out;
  for (auto* fe : impl_->project_files(project_id)) out.push_back(fe->rec);
  return out;
}

std::vector<FileRecord> Store::search_files(const std::string& project_id, const std::string& query) const {
  std::lock_guard g(impl_->mu);
  impl_->project(project_id);
  auto toks = text::tokenize(query);
  std::sort(toks.begin(), toks.end());
  toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  std::map<std::string, int> hits;
  if (toks.empty()) {
    for (auto* fe : impl_->project_files(project_id)) hits[fe->rec.file_id] = 0;
  } else {
    for (const auto& tok : toks)
      if (auto it = impl_->postings.find(tok); it != impl_->postings.end())
        for (const auto& id : it->second)
          if (impl_->files.at(id).rec.project_id == project_id) ++hits[id];
  }
  std::vector<const FileEntry*> ranked;
  for (const auto& [id, n] : hits) ranked.push_back(&impl_->files.at(id));
  std::sort(ranked.begin(), ranked.end(), [&](const FileEntry* a, const FileEntry* b) {
    const int ha = hits.at(a->rec.file_id), hb = hits.at(b->rec.file_id);
    if (ha != hb) return ha > hb;
    if (a->rec.updated_at != b->rec.updated_at) return a->rec.updated_at > b->rec.updated_at;
    return a->seq < b->seq;
  });
  std::vector<FileRecord> out;
  for (const auto* fe : ranked) out.push_back(fe->rec);
  return out;
}

std::vector<FileRecord> Store::my_files(const std::string& user) const {
  std::lock_guard g(impl_->mu);
  std::vector<const FileEntry*> mine;
  for (const auto& [id, fe] : impl_->files)
    if (fe.rec.principal == user) mine.push_back(&fe);
  std::sort(mine.begin(), mine.end(), [](const FileEntry* a, const FileEntry* b) {
    if (a->rec.updated_at != b->rec.updated_at) return a->rec.updated_at > b->rec.updated_at;
    return a->seq < b->seq;
  });
  std::vector<FileRecord> out;
  for (const auto* fe : mine) out.push_back(fe->rec);
  return out;
}

std::vector<FileRecord> Store::recent_files(const std::string& user) const {
  std::lock_guard g(impl_->mu);
  std::vector<std::pair<std::pair<std::int64_t, std::int64_t>, std::string>> seen;
  for (const auto& [key, when] : impl_->views)
    if (key.first == user) seen.push_back({when, key.second});
  std::sort(seen.begin(), seen.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (seen.size() > 20) seen.resize(20);
  std::vector<FileRecord> out;
  for (const auto& [when, id] : seen) out.push_back(impl_->files.at(id).rec);
  return out;
}

void Store::record_view(const std::string& file_id, const std::string& user) {
  std::lock_guard g(impl_->mu);
  impl_->entry(file_id);
  impl_->require_user(user);
  Tx tx(impl_->db);
  const std::int64_t seq = impl_->next_id("view");
  const std::int64_t t = impl_->clock.now_ms();
  Stmt(impl_->db, "INSERT INTO views(user_id, file_id, at, seq) VALUES(?, ?, ?, ?) "
                  "ON CONFLICT(user_id, file_id) DO UPDATE SET at=excluded.at, seq=excluded.seq")
      .bind(1, user)
      .bind(2, file_id)
      .bind(3, t)
      .bind(4, seq)
      .run();
  tx.commit();
  impl_->views[{user, file_id}] = {t, seq};
}

// --- locks ----------------------------------------------------------------------------

FileRecord Store::acquire_lock(const std::string& file_id, const std::string& user) {
  {
    std::lock_guard g(impl_->mu);
    impl_->require_user(user);
  }
  const std::int64_t lease = impl_->opts.lease_ms;
  return impl_->update_record(file_id, [&](FileRecord& rec, std::int64_t t) {
    if (rec.lock && rec.lock->active(t)) {
      LockLease& l = *rec.lock;
      if (l.holder == user) {
        l.expires_at = t + lease;
        l.duration_ms = lease;
        return;
      }
      const bool idle = t - l.last_activity >= l.duration_ms / 2;
      if (!(rec.principal == user && idle))
        fail(ErrorCode::LockHeld, "file is locked by another user", Impl::lock_detail(l));
    }
    rec.lock = LockLease{user, t, t + lease, t, lease};
  });
}

FileRecord Store::renew_lock(const std::string& file_id, const std::string& user) {
  const std::int64_t lease = impl_->opts.lease_ms;
  return impl_->update_record(file_id, [&](FileRecord& rec, std::int64_t t) {
    if (!rec.lock || !rec.lock->active(t))
      fail(ErrorCode::NotLocked, "no active lease to renew", {{"doc_id", rec.file_id}});
    if (rec.lock->holder != user)
      fail(ErrorCode::LockHeld, "file is locked by another user", Impl::lock_detail(*rec.lock));
    rec.lock->expires_at = t + lease;
    rec.lock->duration_ms = lease;
  });
}

FileRecord Store::release_lock(const std::string& file_id, const std::string& user) {
  return impl_->update_record(file_id, [&](FileRecord& rec, std::int64_t t) {
    if (!rec.lock) return;
    if (rec.lock->active(t) && rec.lock->holder != user)
      fail(ErrorCode::LockHeld, "file is locked by another user", Impl::lock_detail(*rec.lock));
    rec.lock.reset();
  });
}

FileRecord Store::take_charge(const std::string& file_id, const std::string& user, bool release) {
  {
    std::lock_guard g(impl_->mu);
    impl_->require_user(user);
  }
  return impl_->update_record(file_id, [&](FileRecord& rec, std::int64_t) {
    if (rec.principal && *rec.principal != user)
      fail(ErrorCode::PrincipalHeld, "another user is in charge of this file", {{"principal", *rec.principal}});
    if (release)
      rec.principal.reset();
    else
      rec.principal = user;
  });
}

bool Store::holds_lock(const std::string& file_id, const std::string& user) const {
  std::lock_guard g(impl_->mu);
  const FileRecord& rec = impl_->entry(file_id).rec;
  return rec.lock && rec.lock->active(impl_->clock.now_ms()) && rec.lock->holder == user;
}

// --- content ----------------------------------------------------------------------------

std::shared_ptr<const std::vector<pdf::PageModel>> Store::pages(const std::string& doc_id) const {
  std::lock_guard g(impl_->mu);
  const FileEntry& fe = impl_->entry(doc_id);
  impl_->pages_of(fe);
  return fe.pages;
}

std::vector<text::Section> Store::sections(const std::string& doc_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->sections_of(impl_->entry(doc_id));
}

MetaState Store::get_meta(const std::string& doc_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->entry(doc_id).doc.meta;
}

meta::MetaRecord Store::save_meta(const std::string& doc_id, const std::string& user, meta::MetaRecord record) {
  record = meta::tidy(std::move(record));
  meta::validate(record, true);
  record.edited_by_user = true;
  return impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry&, std::int64_t) {
    if (d.meta.record != record) {
      logs.push_back({"meta", "save", "save_meta", opt_json(d.meta.record), record});
      d.meta.record = record;
    }
    return record;
  });
}

meta::MetaRecord Store::effective_meta(const std::string& doc_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->effective_meta(impl_->entry(doc_id));
}

// --- tables --------------------------------------------------------------------------------

std::vector<table::Artifact> Store::list_tables(const std::string& doc_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->entry(doc_id).doc.tables;
}

table::Artifact Store::get_table(const std::string& doc_id, const std::string& table_id) const {
  std::lock_guard g(impl_->mu);
  return Impl::find_table(const_cast<DocState&>(impl_->entry(doc_id).doc), table_id);
}

std::vector<table::Artifact> Store::detect_tables(const std::string& doc_id, const std::string& user,
                                                  std::optional<int> page_index) {
  return impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>&, FileEntry& fe, std::int64_t t) {
    impl_->detect_tables_into(d, fe, impl_->page_scope(fe, page_index), t);
    return d.tables;
  });
}

table::Artifact Store::add_table(const std::string& doc_id, const std::string& user, int page_index,
                                 const BBox& region) {
  return impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry& fe, std::int64_t t) {
    table::Artifact a = table::manual_artifact(impl_->page_of(fe, page_index), doc_id, region);
    a.table_id = "t" + std::to_string(d.next_table++);
    a.created_at = a.updated_at = t;
    logs.push_back({"table", table::stage_name(a.stage), "add_region", nullptr,
                    json{{"table_id", a.table_id}, {"page_index", page_index}, {"region", region}}});
    d.tables.push_back(a);
    return a;
  });
}

table::Artifact Store::confirm_table_region(const std::string& doc_id, const std::string& user,
                                            const std::string& table_id, std::optional<BBox> region) {
  return impl_->table_op(doc_id, user, table_id, [&](table::Artifact& a, FileEntry& fe, std::int64_t) {
    return table::confirm_region(a, impl_->page_of(fe, a.page_index), region.value_or(a.region));
  });
}

table::Artifact Store::propose_structure(const std::string& doc_id, const std::string& user,
                                         const std::string& table_id) {
  return impl_->table_op(doc_id, user, table_id, [&](table::Artifact& a, FileEntry& fe, std::int64_t) {
    if (a.stage != table::Stage::StructureProposed)  // repeat is a no-op
      table::propose_structure(a, impl_->page_of(fe, a.page_index), impl_->opts.table);
    return std::optional<Correction>();
  });
}

table::Artifact Store::edit_structure(const std::string& doc_id, const std::string& user,
                                      const std::string& table_id, const table::StructureEdit& edit) {
  return impl_->table_op(doc_id, user, table_id, [&](table::Artifact& a, FileEntry&, std::int64_t) {
    return table::edit_structure(a, edit);
  });
}

table::Artifact Store::confirm_table(const std::string& doc_id, const std::string& user,
                                     const std::string& table_id, table::Stage target) {
  return impl_->table_op(doc_id, user, table_id, [&](table::Artifact& a, FileEntry&, std::int64_t t) {
    const table::Stage from = a.stage;
    table::confirm(a, target);
    if (a.stage == table::Stage::ContentConfirmed && from != a.stage) a.confirmed_at = t;
    return std::optional<Correction>();
  });
}

table::Artifact Store::propose_content(const std::string& doc_id, const std::string& user,
                                       const std::string& table_id) {
  table::OcrFn ocr;
  {
    std::lock_guard g(impl_->mu);
    ocr = impl_->ocr;
  }
  return impl_->table_op(doc_id, user, table_id, [&](table::Artifact& a, FileEntry& fe, std::int64_t) {
    if (a.stage != table::Stage::ContentProposed)
      table::propose_content(a, impl_->page_of(fe, a.page_index), ocr);
    return std::optional<Correction>();
  });
}

table::Artifact Store::edit_cell(const std::string& doc_id, const std::string& user,
                                 const std::string& table_id, int row, int col, const std::string& text) {
  return impl_->table_op(doc_id, user, table_id, [&](table::Artifact& a, FileEntry&, std::int64_t) {
    return table::edit_cell(a, row, col, text);
  });
}

table::Artifact Store::revert_table(const std::string& doc_id, const std::string& user,
                                    const std::string& table_id, table::Stage target) {
  return impl_->table_op(doc_id, user, table_id, [&](table::Artifact& a, FileEntry&, std::int64_t) {
    const std::string from = table::stage_name(a.stage);
    table::revert(a, target);
    return std::optional<Correction>(
        Correction{"table", from, "revert", json{{"stage", from}}, json{{"stage", table::stage_name(target)}}});
  });
}

void Store::delete_table(const std::string& doc_id, const std::string& user, const std::string& table_id) {
  impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry&, std::int64_t) {
    const table::Artifact a = Impl::find_table(d, table_id);
    logs.push_back({"table", table::stage_name(a.stage), "delete", a, nullptr});
    std::erase_if(d.tables, [&](const auto& x) { return x.table_id == table_id; });
    d.mappings.erase(table_id);
    return 0;
  });
}

integrate::ColumnMapping Store::table_mapping(const std::string& doc_id, const std::string& table_id) const {
  std::lock_guard g(impl_->mu);
  const FileEntry& fe = impl_->entry(doc_id);
  const Project& p = impl_->project(fe.rec.project_id);
  if (!p.header) fail(ErrorCode::NoHeaderConfig, "project has no header configuration");
  const table::Artifact& a = Impl::find_table(const_cast<DocState&>(fe.doc), table_id);
  if (a.stage != table::Stage::ContentConfirmed)
    fail(ErrorCode::InvalidStage, "column mapping needs confirmed content",
         {{"table_id", table_id}, {"stage", table::stage_name(a.stage)}});
  std::vector<std::string> notes;
  auto m = impl_->mapping_for(fe.doc, a, *p.header, &notes);
  m.warnings.insert(m.warnings.begin(), notes.begin(), notes.end());
  return m;
}

integrate::ColumnMapping Store::set_table_mapping(const std::string& doc_id, const std::string& user,
                                                  const std::string& table_id,
                                                  std::optional<integrate::ColumnMapping> mapping) {
  impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry& fe, std::int64_t) {
    const Project& p = impl_->project(fe.rec.project_id);
    if (!p.header) fail(ErrorCode::NoHeaderConfig, "project has no header configuration");
    const table::Artifact& a = Impl::find_table(d, table_id);
    if (a.stage != table::Stage::ContentConfirmed)
      fail(ErrorCode::InvalidStage, "column mapping needs confirmed content",
           {{"table_id", table_id}, {"stage", table::stage_name(a.stage)}});
    const json before = d.mappings.count(table_id) ? json(d.mappings[table_id]) : json(nullptr);
    if (mapping) {
      const auto values = table::value_grid(a);
      mapping->warnings.clear();
      integrate::check_mapping(*mapping, *p.header, values.empty() ? 0 : values.front().size());
      d.mappings[table_id] = *mapping;
    } else {
      d.mappings.erase(table_id);
    }
    const json after = mapping ? json(*mapping) : json(nullptr);
    if (before != after) logs.push_back({"table", table::stage_name(a.stage), "map_columns", before, after});
    return 0;
  });
  return table_mapping(doc_id, table_id);
}

void Store::set_ocr(table::OcrFn ocr) {
  std::lock_guard g(impl_->mu);
  impl_->ocr = std::move(ocr);
}

// --- text --------------------------------------------------------------------------------------

std::vector<text::EntitySpan> Store::spans(const std::string& doc_id, bool visible_only) const {
  std::lock_guard g(impl_->mu);
  const FileEntry& fe = impl_->entry(doc_id);
  if (!visible_only) return fe.doc.spans;
  return text::visible_spans(fe.doc.spans, impl_->project(fe.rec.project_id).labels);
}

text::EntitySpan Store::add_span(const std::string& doc_id, const std::string& user, int section_index,
                                 std::size_t start, std::size_t end, const std::string& label) {
  return impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry& fe, std::int64_t) {
    bool existed = false;
    text::EntitySpan s =
        text::make_manual_span(d.spans, impl_->sections_of(fe), impl_->project(fe.rec.project_id).labels,
                               doc_id, section_index, start, end, label, &existed);
    if (existed) return s;
    s.span_id = "s" + std::to_string(d.next_span++);
    logs.push_back({"text", "annotate", "add_span", nullptr, s});
    d.spans.push_back(s);
    return s;
  });
}

void Store::delete_span(const std::string& doc_id, const std::string& user, const std::string& span_id) {
  impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry&, std::int64_t) {
    if (auto c = text::delete_span(d.spans, span_id)) logs.push_back(std::move(*c));
    return 0;
  });
}

text::EntitySpan Store::link_span(const std::string& doc_id, const std::string& user,
                                  const std::string& span_id, const std::optional<std::string>& field) {
  return impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry& fe, std::int64_t) {
    const Project& p = impl_->project(fe.rec.project_id);
    const std::vector<std::string> fields = p.header ? p.header->fields : std::vector<std::string>{};
    std::optional<std::string> before;
    for (const auto& s : d.spans)
      if (s.span_id == span_id) before = s.linked_field;
    const text::EntitySpan s = text::link_span(d.spans, span_id, field, fields);
    if (before != s.linked_field)
      logs.push_back({"text", "link", "link_span", json{{"span_id", span_id}, {"field", opt_json(before)}},
                      json{{"span_id", span_id}, {"field", opt_json(s.linked_field)}}});
    return s;
  });
}

std::vector<text::EntitySpan> Store::reannotate(const std::string& doc_id, const std::string& user) {
  return impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>&, FileEntry& fe, std::int64_t) {
    const auto& sections = impl_->sections_of(fe);
    d.spans = text::reannotate(d.spans, sections, impl_->project(fe.rec.project_id).labels, doc_id,
                               impl_->span_ids(d));
    text::mark_stale(d.spans, sections);
    return d.spans;
  });
}

// --- maps -----------------------------------------------------------------------------------------

std::vector<map::Artifact> Store::list_maps(const std::string& doc_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->entry(doc_id).doc.maps;
}

map::Artifact Store::get_map(const std::string& doc_id, const std::string& map_id) const {
  std::lock_guard g(impl_->mu);
  return Impl::find_map(const_cast<DocState&>(impl_->entry(doc_id).doc), map_id);
}

std::vector<map::Artifact> Store::detect_maps(const std::string& doc_id, const std::string& user,
                                              std::optional<int> page_index) {
  return impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>&, FileEntry& fe, std::int64_t t) {
    impl_->detect_maps_into(d, fe, impl_->page_scope(fe, page_index), t);
    return d.maps;
  });
}

map::Artifact Store::add_map(const std::string& doc_id, const std::string& user, int page_index,
                             const BBox& region) {
  return impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry& fe, std::int64_t t) {
    map::Artifact a = map::manual_artifact(impl_->page_of(fe, page_index), doc_id, region);
    a.map_id = "m" + std::to_string(d.next_map++);
    a.created_at = a.updated_at = t;
    logs.push_back({"map", map::stage_name(a.stage), "add_region", nullptr,
                    json{{"map_id", a.map_id}, {"page_index", page_index}, {"region", region}}});
    d.maps.push_back(a);
    return a;
  });
}

map::Artifact Store::confirm_map_region(const std::string& doc_id, const std::string& user,
                                        const std::string& map_id, std::optional<BBox> region) {
  return impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry& fe, std::int64_t) {
    return map::confirm_region(a, impl_->page_of(fe, a.page_index), region.value_or(a.region));
  });
}

map::Artifact Store::propose_gridlines(const std::string& doc_id, const std::string& user,
                                       const std::string& map_id) {
  return impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry& fe, std::int64_t) {
    if (a.stage != map::Stage::GridProposed)
      map::propose_gridlines(a, impl_->page_of(fe, a.page_index), impl_->opts.map);
    return std::optional<Correction>();
  });
}

map::Artifact Store::edit_gridline(const std::string& doc_id, const std::string& user,
                                   const std::string& map_id, const map::GridEdit& edit) {
  return impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry&, std::int64_t) {
    return map::edit_gridline(a, edit);
  });
}

map::Artifact Store::fit_map(const std::string& doc_id, const std::string& user, const std::string& map_id) {
  return impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry&, std::int64_t) {
    map::fit(a, impl_->opts.map);
    return std::optional<Correction>();
  });
}

map::Artifact Store::confirm_calibration(const std::string& doc_id, const std::string& user,
                                         const std::string& map_id) {
  return impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry&, std::int64_t) {
    map::confirm_calibration(a);
    return std::optional<Correction>();
  });
}

map::MarkedPoint Store::mark_point(const std::string& doc_id, const std::string& user,
                                   const std::string& map_id, Point pixel) {
  map::MarkedPoint out;
  impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry&, std::int64_t) {
    out = map::mark_point(a, pixel);
    return std::optional<Correction>();
  });
  return out;
}

map::Artifact Store::attach_point(const std::string& doc_id, const std::string& user,
                                  const std::string& map_id, const std::string& point_id,
                                  std::optional<std::string> key) {
  return impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry&, std::int64_t) {
    map::attach_point(a, point_id, key);
    return std::optional<Correction>();
  });
}

map::Artifact Store::delete_point(const std::string& doc_id, const std::string& user,
                                  const std::string& map_id, const std::string& point_id) {
  return impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry&, std::int64_t) {
    const map::MarkedPoint* pt = a.point(point_id);
    const json before = pt ? json(*pt) : json(nullptr);
    map::delete_point(a, point_id);
    return std::optional<Correction>(Correction{"map", map::stage_name(a.stage), "delete_point", before, nullptr});
  });
}

map::Artifact Store::revert_map(const std::string& doc_id, const std::string& user, const std::string& map_id,
                                map::Stage target) {
  return impl_->map_op(doc_id, user, map_id, [&](map::Artifact& a, FileEntry&, std::int64_t) {
    const std::string from = map::stage_name(a.stage);
    map::revert(a, target);
    return std::optional<Correction>(
        Correction{"map", from, "revert", json{{"stage", from}}, json{{"stage", map::stage_name(target)}}});
  });
}

void Store::delete_map(const std::string& doc_id, const std::string& user, const std::string& map_id) {
  impl_->mutate(doc_id, user, [&](DocState& d, std::vector<Correction>& logs, FileEntry&, std::int64_t) {
    const map::Artifact a = Impl::find_map(d, map_id);
    logs.push_back({"map", map::stage_name(a.stage), "delete", a, nullptr});
    std::erase_if(d.maps, [&](const auto& x) { return x.map_id == map_id; });
    return 0;
  });
}

// --- integration -------------------------------------------------------------------------------------

integrate::DocumentDataset Store::integrate_document(const std::string& doc_id) {
  std::lock_guard g(impl_->mu);
  FileEntry& fe = impl_->entry(doc_id);
  auto ds = impl_->build(fe);
  impl_->store_dataset(fe, ds);
  return ds;
}

std::optional<integrate::DocumentDataset> Store::document_dataset(const std::string& doc_id) const {
  std::lock_guard g(impl_->mu);
  return impl_->entry(doc_id).doc.dataset;
}

ProjectIntegration Store::integrate_project(const std::string& project_id, bool rebuild) {
  std::lock_guard g(impl_->mu);
  const Project& p = impl_->project(project_id);
  if (!p.header) fail(ErrorCode::NoHeaderConfig, "project has no header configuration");
  ProjectIntegration out;
  std::vector<integrate::DocumentDataset> docs;
  std::vector<meta::MetaRecord> metas;
  for (FileEntry* fe : impl_->project_files(project_id)) {
    if (rebuild && fe->rec.status == ParseStatus::Parsed) impl_->store_dataset(*fe, impl_->build(*fe));
    if (!fe->doc.dataset) {
      out.skipped.push_back(fe->rec.file_id);
      continue;
    }
    docs.push_back(*fe->doc.dataset);
    metas.push_back(impl_->effective_meta(*fe));
  }
  out.dataset = integrate::integrate_project(docs, metas, *p.header);
  return out;
}

// --- corrections --------------------------------------------------------------------------------------

std::vector<CorrectionEvent> Store::corrections(const std::string& project_id) const {
  std::lock_guard g(impl_->mu);
  impl_->project(project_id);
  std::vector<CorrectionEvent> out;
  Stmt s(impl_->db, "SELECT event_id, body FROM corrections WHERE project_id=? ORDER BY event_id");
  s.bind(1, project_id);
  while (s.step()) {
    const json b = json::parse(s.text(1));
    out.push_back({s.integer(0), project_id, b.at("doc_id"), b.at("module"), b.at("stage"), b.at("action"),
                   b.at("before"), b.at("after"), b.at("user"), parse_iso8601(b.at("time").get<std::string>())});
  }
  return out;
}

std::string Store::export_corrections(const std::string& project_id) const {
  std::string out;
  for (const auto& e : corrections(project_id)) out += json(e).dump() + "\n";
  return out;
}

json Store::snapshot() const {
  std::lock_guard g(impl_->mu);
  json users = json::array(), projects = json::array(), files = json::array(), views = json::array();
  for (const auto& [id, u] : impl_->users) users.push_back(u.user);
  std::vector<std::pair<std::int64_t, const Project*>> ps;
  for (const auto& [id, sp] : impl_->projects) ps.emplace_back(sp.first, &sp.second);
  std::sort(ps.begin(), ps.end());
  for (const auto& [seq, p] : ps) projects.push_back(*p);
  std::vector<const FileEntry*> fs;
  for (const auto& [id, fe] : impl_->files) fs.push_back(&fe);
  std::sort(fs.begin(), fs.end(), [](auto* a, auto* b) { return a->seq < b->seq; });
  for (const auto* fe : fs) files.push_back({{"record", fe->rec}, {"doc", doc_json(fe->doc)}});
  for (const auto& [key, when] : impl_->views)
    views.push_back({{"user_id", key.first}, {"file_id", key.second}, {"at", iso8601(when.first)}, {"seq", when.second}});
  json corrections = json::array();
  for (Stmt s(impl_->db, "SELECT event_id, project_id, body FROM corrections ORDER BY event_id"); s.step();)
    corrections.push_back({{"event_id", s.integer(0)}, {"project_id", s.text(1)}, {"body", json::parse(s.text(2))}});
  json counters = impl_->counters;
  return {{"schema_version", kSchemaVersion}, {"counters", counters}, {"users", users},
          {"projects", projects}, {"files", files}, {"views", views}, {"corrections", corrections}};
}

// --- json ------------------------------------------------------------------------------------------------

void to_json(json& j, const LockLease& l) {
  j = {{"holder", l.holder},
       {"acquired_at", iso8601(l.acquired_at)},
       {"expires_at", iso8601(l.expires_at)},
       {"last_activity", iso8601(l.last_activity)},
       {"duration_ms", l.duration_ms}};
}

void from_json(const json& j, LockLease& l) {
  l.holder = j.at("holder").get<std::string>();
  l.acquired_at = parse_iso8601(j.at("acquired_at").get<std::string>());
  l.expires_at = parse_iso8601(j.at("expires_at").get<std::string>());
  l.last_activity = parse_iso8601(j.at("last_activity").get<std::string>());
  l.duration_ms = j.at("duration_ms").get<std::int64_t>();
}

void to_json(json& j, const User& u) {
  j = {{"user_id", u.user_id}, {"display_name", u.display_name}, {"created_at", iso8601(u.created_at)}};
}

void to_json(json& j, const Project& p) {
  j = {{"project_id", p.project_id},
       {"name", p.name},
       {"description", p.description},
       {"labels", p.labels},
       {"header", opt_json(p.header)},
       {"created_by", p.created_by},
       {"created_at", iso8601(p.created_at)},
       {"updated_at", iso8601(p.updated_at)}};
}

void from_json(const json& j, Project& p) {
  p.project_id = j.at("project_id").get<std::string>();
  p.name = j.at("name").get<std::string>();
  p.description = j.value("description", "");
  p.labels = j.value("labels", json::array()).get<std::vector<text::LabelConfig>>();
  if (j.contains("header") && !j["header"].is_null()) p.header = j["header"].get<integrate::HeaderConfig>();
  p.created_by = j.at("created_by").get<std::string>();
  p.created_at = parse_iso8601(j.at("created_at").get<std::string>());
  p.updated_at = parse_iso8601(j.at("updated_at").get<std::string>());
}

void to_json(json& j, const FileRecord& f) {
  j = {{"file_id", f.file_id},
       {"project_id", f.project_id},
       {"filename", f.filename},
       {"checksum", f.checksum},
       {"uploader", f.uploader},
       {"last_editor", f.last_editor},
       {"uploaded_at", iso8601(f.uploaded_at)},
       {"updated_at", iso8601(f.updated_at)},
       {"principal", opt_json(f.principal)},
       {"lock", opt_json(f.lock)},
       {"status", status_name(f.status)},
       {"status_detail", f.status_detail},
       {"page_count", f.page_count}};
}

void from_json(const json& j, FileRecord& f) {
  f.file_id = j.at("file_id").get<std::string>();
  f.project_id = j.at("project_id").get<std::string>();
  f.filename = j.at("filename").get<std::string>();
  f.checksum = j.at("checksum").get<std::string>();
  f.uploader = j.at("uploader").get<std::string>();
  f.last_editor = j.at("last_editor").get<std::string>();
  f.uploaded_at = parse_iso8601(j.at("uploaded_at").get<std::string>());
  f.updated_at = parse_iso8601(j.at("updated_at").get<std::string>());
  f.principal.reset();
  if (!j.at("principal").is_null()) f.principal = j["principal"].get<std::string>();
  f.lock.reset();
  if (!j.at("lock").is_null()) f.lock = j["lock"].get<LockLease>();
  f.status = parse_status(j.at("status").get<std::string>());
  f.status_detail = j.at("status_detail");
  f.page_count = j.at("page_count").get<int>();
}

void to_json(json& j, const CorrectionEvent& e) {
  j = {{"event_id", e.event_id}, {"project_id", e.project_id}, {"doc_id", e.doc_id},
       {"module", e.module},     {"stage", e.stage},           {"action", e.action},
       {"before", e.before},     {"after", e.after},           {"user", e.user},
       {"time", iso8601(e.time)}};
}

void to_json(json& j, const MetaState& m) {
  j = {{"candidates", m.candidates}, {"record", opt_json(m.record)}};
}

}  // namespace docmine::store
