#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "docmine/error.hpp"
#include "docmine/fixtures.hpp"
#include "docmine/store.hpp"
#include "docmine/text_util.hpp"

using namespace docmine;
using namespace docmine::store;
using nlohmann::json;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

Options fast(std::string path = ":memory:") {
  Options o;
  o.path = std::move(path);
  o.pwhash_ops = 1;
  o.pwhash_mem = 8192;
  return o;
}

std::vector<text::LabelConfig> labels() {
  text::LabelConfig coord{"coordinate", {}, true, std::nullopt};
  coord.rules.push_back({R"(\d{1,3}°(\d{1,2}′)?(\d{1,2}(\.\d+)?″)?[NSEW])", {}, false});
  text::LabelConfig locality{"locality", {}, true, std::nullopt};
  locality.rules.push_back({std::nullopt, {"Palma Sola", "Tethys", "Veracruz"}, false});
  return {coord, locality};
}

struct World {
  ManualClock clock;
  Store store{fast(), clock};
  std::string project;

  World() {
    store.create_user("ana", "Ana", "pw-ana");
    store.create_user("ben", "Ben", "pw-ben");
    project = store.create_project("ana", "Coastal sands", "").project_id;
    SettingsUpdate u;
    u.labels = labels();
    u.header = integrate::HeaderConfig{
        {"Sample ID", "Age", "Depth", "Lithology", "Locality", "Latitude", "Longitude"}, "Sample ID"};
    store.update_settings(project, u);
  }

  std::string upload_parsed(const std::string& bytes, const std::string& name = "a.pdf") {
    const auto rec = store.upload_file(project, "ana", name, bytes);
    EXPECT_EQ(rec.status, ParseStatus::Pending);
    return store.parse_file(rec.file_id).file_id;
  }
};

}  // namespace

TEST(Users, CreateAndVerify) {
  World w;
  EXPECT_EQ(code_of([&] { w.store.create_user("ana", "", "x"); }), ErrorCode::DuplicateUser);
  EXPECT_EQ(code_of([&] { w.store.create_user("a b", "", "x"); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([&] { w.store.create_user("cy", "", ""); }), ErrorCode::ValidationError);
  EXPECT_TRUE(w.store.verify_password("ana", "pw-ana"));
  EXPECT_FALSE(w.store.verify_password("ana", "pw-ben"));
  EXPECT_FALSE(w.store.verify_password("nobody", "pw-ana"));
  EXPECT_EQ(w.store.get_user("ben").display_name, "Ben");
  EXPECT_FALSE(w.store.snapshot().dump().find("pw-ana") != std::string::npos);
}

TEST(Projects, CrudAndSettings) {
  World w;
  EXPECT_EQ(code_of([&] { w.store.create_project("ana", "  ", ""); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([&] { w.store.create_project("zed", "x", ""); }), ErrorCode::UnknownUser);
  const auto p2 = w.store.create_project("ben", "Second", "d");
  EXPECT_EQ(w.store.list_projects().size(), 2u);
  EXPECT_EQ(w.store.list_projects()[1].project_id, p2.project_id);
  EXPECT_EQ(code_of([&] { w.store.get_project("99"); }), ErrorCode::UnknownProject);

  SettingsUpdate bad;
  bad.labels = labels();
  bad.labels->front().rules.front().pattern = "(?=x)";
  EXPECT_EQ(code_of([&] { w.store.update_settings(w.project, bad); }), ErrorCode::InvalidRule);
  SettingsUpdate edit;
  edit.header_edits = {integrate::RemoveField{"Depth"}};
  EXPECT_EQ(w.store.update_settings(w.project, edit).header->fields.size(), 6u);
  edit.header_edits = {integrate::AddField{"Age", std::nullopt}};
  EXPECT_EQ(code_of([&] { w.store.update_settings(w.project, edit); }), ErrorCode::DuplicateField);
  EXPECT_EQ(code_of([&] { w.store.update_settings(p2.project_id, edit); }), ErrorCode::NoHeaderConfig);
  EXPECT_EQ(w.store.get_project(w.project).header->fields.size(), 6u);  // failed edit left no trace
}

TEST(Files, UploadParseAndDedup) {
  World w;
  const auto fx = fixtures::generate(0);
  const std::string id = w.upload_parsed(fx.pdf, "fixture01.pdf");
  const FileRecord rec = w.store.get_file(id);
  EXPECT_EQ(rec.status, ParseStatus::Parsed);
  EXPECT_EQ(rec.page_count, 3);
  const MetaState m = w.store.get_meta(id);
  ASSERT_FALSE(m.candidates.empty());
  EXPECT_EQ(m.record->title, fx.sidecar["meta"]["title"].get<std::string>());
  EXPECT_EQ(w.store.list_tables(id).size(), 2u);
  EXPECT_EQ(w.store.list_maps(id).size(), 1u);
  std::vector<std::string> found;
  for (const auto& s : w.store.spans(id)) found.push_back(s.label + ":" + s.text);
  for (const auto& e : fx.sidecar["entities"])
    EXPECT_NE(std::find(found.begin(), found.end(), e["label"].get<std::string>() + ":" + e["text"].get<std::string>()),
              found.end());

  const Error dup = [&] {
    try {
      w.store.upload_file(w.project, "ben", "copy.pdf", fx.pdf);
    } catch (const Error& e) {
      return e;
    }
    return Error(ErrorCode::Internal, "no error");
  }();
  EXPECT_EQ(dup.code(), ErrorCode::DuplicateChecksum);
  EXPECT_EQ(dup.detail()["file_id"], id);
  const auto other = w.store.create_project("ben", "Other", "");
  EXPECT_NO_THROW(w.store.upload_file(other.project_id, "ben", "copy.pdf", fx.pdf));  // per project

  EXPECT_EQ(code_of([&] { w.store.upload_file(w.project, "ana", "e.pdf", ""); }), ErrorCode::ValidationError);
  const auto bad = w.store.upload_file(w.project, "ana", "bad.pdf", "%PDF-1.4 truncated");
  EXPECT_EQ(w.store.pending_files(), (std::vector<std::string>{"2", bad.file_id}));
  const auto failed = w.store.parse_file(bad.file_id);
  EXPECT_EQ(failed.status, ParseStatus::Failed);
  EXPECT_EQ(failed.status_detail["code"], "MalformedPdf");
  EXPECT_EQ(w.store.parse_file(bad.file_id), failed);  // only pending files are parsed
}

TEST(Files, ConcurrentDuplicateUploads) {
  World w;
  const std::string bytes = fixtures::generate(3).pdf;
  std::atomic<int> ok{0}, dup{0};
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i)
    ts.emplace_back([&, i] {
      try {
        w.store.upload_file(w.project, i % 2 ? "ana" : "ben", "f.pdf", bytes);
        ++ok;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::DuplicateChecksum) ++dup;
      }
    });
  for (auto& t : ts) t.join();
  EXPECT_EQ(ok.load(), 1);
  EXPECT_EQ(dup.load(), 7);
}

TEST(Locks, LeaseSemantics) {
  World w;
  const std::string f = w.store.upload_file(w.project, "ana", "x.pdf", "x").file_id;
  EXPECT_EQ(w.store.acquire_lock(f, "ana").lock->holder, "ana");
  const Error held = [&] {
    try {
      w.store.acquire_lock(f, "ben");
    } catch (const Error& e) {
      return e;
    }
    return Error(ErrorCode::Internal, "");
  }();
  EXPECT_EQ(held.code(), ErrorCode::LockHeld);
  EXPECT_EQ(held.detail()["holder"], "ana");
  EXPECT_EQ(code_of([&] { w.store.renew_lock(f, "ben"); }), ErrorCode::LockHeld);
  EXPECT_EQ(code_of([&] { w.store.release_lock(f, "ben"); }), ErrorCode::LockHeld);

  meta::MetaRecord r;
  r.title = "T";
  w.store.save_meta(f, "ana", r);
  w.clock.advance(w.store.options().lease_ms);  // expired
  EXPECT_FALSE(w.store.holds_lock(f, "ana"));
  EXPECT_EQ(code_of([&] { w.store.renew_lock(f, "ana"); }), ErrorCode::NotLocked);
  w.store.acquire_lock(f, "ben");
  EXPECT_EQ(code_of([&] { w.store.save_meta(f, "ana", r); }), ErrorCode::NotLocked);
  w.store.release_lock(f, "ben");
  EXPECT_FALSE(w.store.get_file(f).lock);
  EXPECT_NO_THROW(w.store.release_lock(f, "ben"));
}

TEST(Locks, ConcurrentAcquireHasOneWinner) {
  World w;
  for (int i = 0; i < 6; ++i) w.store.create_user("u" + std::to_string(i), "", "p");
  const std::string f = w.store.upload_file(w.project, "ana", "x.pdf", "x").file_id;
  std::atomic<int> wins{0};
  std::vector<std::thread> ts;
  for (int i = 0; i < 6; ++i)
    ts.emplace_back([&, i] {
      try {
        w.store.acquire_lock(f, "u" + std::to_string(i));
        ++wins;
      } catch (const Error&) {
      }
    });
  for (auto& t : ts) t.join();
  EXPECT_EQ(wins.load(), 1);
}

TEST(Locks, PrincipalPriority) {
  World w;
  const std::string f = w.store.upload_file(w.project, "ana", "x.pdf", "x").file_id;
  EXPECT_EQ(w.store.take_charge(f, "ana").principal, "ana");
  EXPECT_EQ(code_of([&] { w.store.take_charge(f, "ben"); }), ErrorCode::PrincipalHeld);
  EXPECT_EQ(w.store.my_files("ana").size(), 1u);

  w.store.acquire_lock(f, "ben");
  const auto half = w.store.options().lease_ms / 2;
  w.clock.advance(half - 1);
  EXPECT_EQ(code_of([&] { w.store.acquire_lock(f, "ana"); }), ErrorCode::LockHeld);  // not idle yet
  w.clock.advance(1);
  EXPECT_EQ(w.store.acquire_lock(f, "ana").lock->holder, "ana");  // idle: evicted
  EXPECT_EQ(code_of([&] { w.store.acquire_lock(f, "ben"); }), ErrorCode::LockHeld);

  // An active holder keeps the lease against the principal.
  w.store.release_lock(f, "ana");
  w.store.acquire_lock(f, "ben");
  meta::MetaRecord r;
  r.title = "x";
  w.clock.advance(half - 10);
  w.store.save_meta(f, "ben", r);
  w.clock.advance(20);
  EXPECT_EQ(code_of([&] { w.store.acquire_lock(f, "ana"); }), ErrorCode::LockHeld);

  EXPECT_FALSE(w.store.take_charge(f, "ana", true).principal);
  EXPECT_EQ(w.store.take_charge(f, "ben").principal, "ben");
}

TEST(Files, SearchRanking) {
  World w;
  auto make = [&](const std::string& bytes, const std::string& title) {
    const std::string id = w.store.upload_file(w.project, "ana", bytes + ".pdf", bytes).file_id;
    w.store.acquire_lock(id, "ana");
    meta::MetaRecord r;
    r.title = title;
    w.store.save_meta(id, "ana", r);
    w.clock.advance(1000);
    return id;
  };
  const auto a = make("a", "Zircon ages of beach sand");
  const auto b = make("b", "Beach morphology");
  const auto c = make("c", "Coral reefs");
  auto ids = [](const std::vector<FileRecord>& v) {
    std::vector<std::string> out;
    for (const auto& r : v) out.push_back(r.file_id);
    return out;
  };
  EXPECT_EQ(ids(w.store.search_files(w.project, "coral")), (std::vector<std::string>{c}));
  EXPECT_EQ(ids(w.store.search_files(w.project, "beach zircon")), (std::vector<std::string>{a, b}));
  EXPECT_EQ(ids(w.store.search_files(w.project, "BEACH")), (std::vector<std::string>{b, a}));  // newer first
  EXPECT_EQ(ids(w.store.search_files(w.project, "")), (std::vector<std::string>{c, b, a}));
  EXPECT_EQ(ids(w.store.search_files(w.project, "volcano")), std::vector<std::string>{});
}

TEST(Files, RecentViews) {
  World w;
  std::vector<std::string> ids;
  for (int i = 0; i < 22; ++i) ids.push_back(w.store.upload_file(w.project, "ana", "f", std::to_string(i)).file_id);
  for (const auto& id : ids) w.store.record_view(id, "ben");
  w.store.record_view(ids[0], "ben");  // same instant, later view still wins
  const auto recent = w.store.recent_files("ben");
  ASSERT_EQ(recent.size(), 20u);
  EXPECT_EQ(recent[0].file_id, ids[0]);
  EXPECT_EQ(recent[1].file_id, ids[21]);
  EXPECT_TRUE(w.store.recent_files("ana").empty());
}

TEST(Meta, SaveLogsCorrection) {
  World w;
  const std::string id = w.upload_parsed(fixtures::generate(0).pdf);
  meta::MetaRecord r = *w.store.get_meta(id).record;
  EXPECT_EQ(code_of([&] { w.store.save_meta(id, "ana", r); }), ErrorCode::NotLocked);
  w.store.acquire_lock(id, "ana");
  r.year = 2021;
  EXPECT_TRUE(w.store.save_meta(id, "ana", r).edited_by_user);
  EXPECT_EQ(w.store.get_meta(id).record->year, 2021);
  auto events = w.store.corrections(w.project);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].module, "meta");
  EXPECT_EQ(events[0].before["year"], 2020);
  EXPECT_EQ(events[0].after["year"], 2021);
  w.store.save_meta(id, "ana", r);  // unchanged: no new event
  EXPECT_EQ(w.store.corrections(w.project).size(), 1u);
  EXPECT_EQ(code_of([&] { w.store.save_meta("404", "ana", r); }), ErrorCode::UnknownDocument);
  r.title = " ";
  EXPECT_EQ(code_of([&] { w.store.save_meta(id, "ana", r); }), ErrorCode::ValidationError);
}

TEST(Pipeline, FixtureOneEndToEnd) {
  World w;
  const std::string id = w.upload_parsed(fixtures::generate(0).pdf);
  w.store.acquire_lock(id, "ana");
  for (const auto& t : w.store.list_tables(id)) {
    w.store.confirm_table_region(id, "ana", t.table_id, std::nullopt);
    w.store.propose_structure(id, "ana", t.table_id);
    w.store.confirm_table(id, "ana", t.table_id, table::Stage::StructureConfirmed);
    w.store.propose_content(id, "ana", t.table_id);
    w.clock.advance(10);
    const auto done = w.store.confirm_table(id, "ana", t.table_id, table::Stage::ContentConfirmed);
    EXPECT_EQ(done.confirmed_at, w.clock.now_ms());
    // a repeated confirm is a no-op
    w.clock.advance(10);
    EXPECT_EQ(w.store.confirm_table(id, "ana", t.table_id, table::Stage::ContentConfirmed), done);
  }
  for (const auto& s : w.store.spans(id))
    if (s.text == "Palma Sola") w.store.link_span(id, "ana", s.span_id, "Locality");
  const std::string m = w.store.list_maps(id).front().map_id;
  w.store.confirm_map_region(id, "ana", m, std::nullopt);
  w.store.propose_gridlines(id, "ana", m);
  w.store.fit_map(id, "ana", m);
  w.store.confirm_calibration(id, "ana", m);
  const auto pt = w.store.mark_point(id, "ana", m, {90, 70});
  EXPECT_DOUBLE_EQ(pt.longitude, -96.25);
  EXPECT_DOUBLE_EQ(pt.latitude, 19.25);
  w.store.attach_point(id, "ana", m, pt.point_id, "RP-02");

  const auto ds = w.store.integrate_document(id);
  const integrate::Grid want{{"RP-01", "312.4", "1.5", "", "Palma Sola", "", "", id},
                             {"RP-02", "1045.0", "2.0", "medium sand", "Palma Sola", "19.25", "-96.25", id},
                             {"RP-03", "", "", "coarse sand", "Palma Sola", "", "", id}};
  EXPECT_EQ(ds.rows, want);
  const auto proj = w.store.integrate_project(w.project);
  EXPECT_TRUE(proj.skipped.empty());
  ASSERT_EQ(proj.dataset.rows.size(), 3u);
  EXPECT_EQ(proj.dataset.rows[0].back(), "1");

  // Header edits make stored datasets stale until rebuilt.
  SettingsUpdate u;
  u.header_edits = {integrate::RemoveField{"Depth"}};
  w.store.update_settings(w.project, u);
  EXPECT_EQ(code_of([&] { w.store.integrate_project(w.project); }), ErrorCode::HeaderMismatch);
  EXPECT_EQ(w.store.integrate_project(w.project, true).dataset.columns.size(), 7u);

  const std::string nd = w.store.export_corrections(w.project);
  std::istringstream lines(nd);
  std::string line;
  std::int64_t last = 0;
  int n = 0;
  while (std::getline(lines, line)) {
    const json e = json::parse(line);
    EXPECT_GT(e["event_id"].get<std::int64_t>(), last);
    last = e["event_id"];
    ++n;
  }
  EXPECT_GE(n, 1);  // the span link
}

TEST(Pipeline, MutationsNeedParseAndLock) {
  World w;
  const std::string pending = w.store.upload_file(w.project, "ana", "p.pdf", "pending").file_id;
  w.store.acquire_lock(pending, "ana");
  EXPECT_EQ(code_of([&] { w.store.detect_tables(pending, "ana"); }), ErrorCode::InvalidStage);
  const std::string id = w.upload_parsed(fixtures::generate(0).pdf);
  const std::string t = w.store.list_tables(id).front().table_id;
  EXPECT_EQ(code_of([&] { w.store.confirm_table_region(id, "ana", t, std::nullopt); }), ErrorCode::NotLocked);
  w.store.acquire_lock(id, "ana");
  EXPECT_EQ(code_of([&] { w.store.propose_structure(id, "ana", t); }), ErrorCode::InvalidStage);
  EXPECT_EQ(code_of([&] { w.store.get_table(id, "t99"); }), ErrorCode::UnknownTable);
  EXPECT_EQ(code_of([&] { w.store.add_table(id, "ana", 7, {0, 0, 10, 10}); }), ErrorCode::ValidationError);
  // re-detection keeps ids of untouched proposals
  const auto before = w.store.list_tables(id);
  EXPECT_EQ(w.store.detect_tables(id, "ana"), before);
}

TEST(Text, SpanOperations) {
  World w;
  const std::string id = w.upload_parsed(fixtures::generate(0).pdf);
  w.store.acquire_lock(id, "ana");
  const auto sections = w.store.sections(id);
  ASSERT_FALSE(sections.empty());
  const auto added = w.store.add_span(id, "ana", 0, 0, 3, "locality");
  EXPECT_EQ(added.source, text::SpanSource::Manual);
  EXPECT_EQ(added.text, text::substr_cp(sections[0].text, 0, 3));
  EXPECT_EQ(w.store.add_span(id, "ana", 0, 0, 3, "locality").span_id, added.span_id);
  EXPECT_EQ(code_of([&] { w.store.add_span(id, "ana", 0, 3, 3, "locality"); }), ErrorCode::InvalidOffsets);
  EXPECT_EQ(code_of([&] { w.store.link_span(id, "ana", added.span_id, "Nope"); }), ErrorCode::UnknownField);
  w.store.delete_span(id, "ana", added.span_id);
  EXPECT_EQ(code_of([&] { w.store.delete_span(id, "ana", added.span_id); }), ErrorCode::UnknownSpan);

  const auto spans = w.store.spans(id);
  const auto auto_span = spans.front();
  w.store.delete_span(id, "ana", auto_span.span_id);
  const auto events = w.store.corrections(w.project);
  ASSERT_EQ(events.size(), 2u);  // add_span, then the auto deletion
  EXPECT_EQ(events[1].action, "delete_span");
  const auto again = w.store.reannotate(id, "ana");
  EXPECT_EQ(again.size(), spans.size());  // auto span comes back under a fresh id

  SettingsUpdate hide;
  hide.labels = labels();
  (*hide.labels)[0].visible = false;
  w.store.update_settings(w.project, hide);
  for (const auto& s : w.store.spans(id, true)) EXPECT_EQ(s.label, "locality");
}

TEST(Durability, RestartPreservesState) {
  const auto dir = std::filesystem::temp_directory_path() / ("docmine-store-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "store.db").string();
  ManualClock clock;
  json before;
  std::string doc;
  {
    Store s(fast(path), clock);
    s.create_user("ana", "Ana", "pw");
    const auto p = s.create_project("ana", "P", "desc");
    SettingsUpdate u;
    u.labels = labels();
    u.header = integrate::HeaderConfig{{"Sample ID", "Age"}, "Sample ID"};
    s.update_settings(p.project_id, u);
    doc = s.upload_file(p.project_id, "ana", "f.pdf", fixtures::generate(0).pdf).file_id;
    s.parse_file(doc);
    s.acquire_lock(doc, "ana");
    s.take_charge(doc, "ana");
    const auto t = s.list_tables(doc).front().table_id;
    s.confirm_table_region(doc, "ana", t, std::nullopt);
    s.propose_structure(doc, "ana", t);
    s.edit_structure(doc, "ana", t, table::AddRow{s.get_table(doc, t).grid->row_bounds[1] - 2});
    s.record_view(doc, "ana");
    s.integrate_document(doc);
    before = s.snapshot();
  }
  {
    Store s(fast(path), clock);
    EXPECT_EQ(s.snapshot(), before);
    EXPECT_TRUE(s.verify_password("ana", "pw"));
    EXPECT_TRUE(s.holds_lock(doc, "ana"));
    EXPECT_EQ(s.pages(doc)->size(), 3u);  // re-parsed lazily from stored bytes
    EXPECT_EQ(s.upload_file("1", "ana", "g.pdf", "other").file_id, "2");
  }
  std::filesystem::remove_all(dir);
}
