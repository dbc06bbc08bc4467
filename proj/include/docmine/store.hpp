#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "docmine/clock.hpp"
#include "docmine/integrate.hpp"
#include "docmine/map.hpp"
#include "docmine/metadata.hpp"
#include "docmine/table.hpp"
#include "docmine/text.hpp"

namespace docmine::store {

inline constexpr int kSchemaVersion = 1;

enum class ParseStatus { Pending, Parsed, Failed };
std::string status_name(ParseStatus s);

struct LockLease {
  std::string holder;
  std::int64_t acquired_at = 0;
  std::int64_t expires_at = 0;
  std::int64_t last_activity = 0;  // last mutation by the holder
  std::int64_t duration_ms = 0;

  bool active(std::int64_t now) const { return now < expires_at; }
  friend bool operator==(const LockLease&, const LockLease&) = default;
};

struct User {
  std::string user_id;
  std::string display_name;
  std::int64_t created_at = 0;
};

struct Project {
  std::string project_id;
  std::string name;
  std::string description;
  std::vector<text::LabelConfig> labels;
  std::optional<integrate::HeaderConfig> header;
  std::string created_by;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;

  friend bool operator==(const Project&, const Project&) = default;
};

struct FileRecord {
  std::string file_id;  // doubles as the document id
  std::string project_id;
  std::string filename;
  std::string checksum;
  std::string uploader;
  std::string last_editor;
  std::int64_t uploaded_at = 0;
  std::int64_t updated_at = 0;
  std::optional<std::string> principal;
  std::optional<LockLease> lock;
  ParseStatus status = ParseStatus::Pending;
  nlohmann::json status_detail;  // error object when Failed
  int page_count = 0;

  friend bool operator==(const FileRecord&, const FileRecord&) = default;
};

struct CorrectionEvent {
  std::int64_t event_id = 0;
  std::string project_id;
  std::string doc_id;
  std::string module;
  std::string stage;
  std::string action;
  nlohmann::json before;
  nlohmann::json after;
  std::string user;
  std::int64_t time = 0;
};

struct MetaState {
  std::vector<meta::SourceCandidate> candidates;
  std::optional<meta::MetaRecord> record;  // voted, or the user's save
};

struct SettingsUpdate {
  std::optional<std::string> name;
  std::optional<std::string> description;
  std::optional<std::vector<text::LabelConfig>> labels;
  std::optional<integrate::HeaderConfig> header;        // replaces
  std::vector<integrate::HeaderEdit> header_edits;      // applied after
};

struct ProjectIntegration {
  integrate::ProjectDataset dataset;
  std::vector<std::string> skipped;  // documents never integrated
};

struct Options {
  std::string path;                    // SQLite file; ":memory:" for tests
  std::int64_t lease_ms = 10 * 60 * 1000;
  unsigned long long pwhash_ops = 0;   // 0: library interactive default
  std::size_t pwhash_mem = 0;
  table::Config table;
  map::Config map;
};

// Thread-safe. Every write commits to disk before it becomes visible.
class Store {
 public:
  Store(Options opts, const Clock& clock);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const Options& options() const;
  std::int64_t now() const;

  // users
  User create_user(const std::string& user_id, const std::string& display_name,
                   const std::string& password);
  User get_user(const std::string& user_id) const;
  // Runs the hash check even for unknown users; nullopt on any mismatch.
  std::optional<User> verify_password(const std::string& user_id, const std::string& password) const;

  // projects
  Project create_project(const std::string& user, const std::string& name,
                         const std::string& description);
  std::vector<Project> list_projects() const;
  Project get_project(const std::string& project_id) const;
  Project update_settings(const std::string& project_id, const SettingsUpdate& update);

  // files
  FileRecord upload_file(const std::string& project_id, const std::string& user,
                         const std::string& filename, const std::string& bytes);
  // Parses a pending file and extracts meta candidates; the slow part runs
  // without holding the store lock. No-op unless the file is pending.
  FileRecord parse_file(const std::string& file_id,
                        const std::vector<std::shared_ptr<const meta::Adapter>>& adapters = {});
  std::vector<std::string> pending_files() const;
  FileRecord get_file(const std::string& file_id) const;
  std::string file_bytes(const std::string& file_id) const;
  std::vector<FileRecord> list_files(const std::string& project_id) const;
  std::vector<FileRecord> search_files(const std::string& project_id, const std::string& query) const;
  std::vector<FileRecord> my_files(const std::string& user) const;
  std::vector<FileRecord> recent_files(const std::string& user) const;
  void record_view(const std::string& file_id, const std::string& user);

  // locks
  FileRecord acquire_lock(const std::string& file_id, const std::string& user);
  FileRecord renew_lock(const std::string& file_id, const std::string& user);
  FileRecord release_lock(const std::string& file_id, const std::string& user);
  FileRecord take_charge(const std::string& file_id, const std::string& user, bool release = false);
  bool holds_lock(const std::string& file_id, const std::string& user) const;

  // parsed content
  std::shared_ptr<const std::vector<pdf::PageModel>> pages(const std::string& doc_id) const;
  std::vector<text::Section> sections(const std::string& doc_id) const;

  // meta
  MetaState get_meta(const std::string& doc_id) const;
  meta::MetaRecord save_meta(const std::string& doc_id, const std::string& user,
                             meta::MetaRecord record);

  // tables
  std::vector<table::Artifact> list_tables(const std::string& doc_id) const;
  table::Artifact get_table(const std::string& doc_id, const std::string& table_id) const;
  std::vector<table::Artifact> detect_tables(const std::string& doc_id, const std::string& user,
                                             std::optional<int> page_index = {});
  table::Artifact add_table(const std::string& doc_id, const std::string& user, int page_index,
                            const BBox& region);
  table::Artifact confirm_table_region(const std::string& doc_id, const std::string& user,
                                       const std::string& table_id, std::optional<BBox> region);
  table::Artifact propose_structure(const std::string& doc_id, const std::string& user,
                                    const std::string& table_id);
  table::Artifact edit_structure(const std::string& doc_id, const std::string& user,
                                 const std::string& table_id, const table::StructureEdit& edit);
  table::Artifact confirm_table(const std::string& doc_id, const std::string& user,
                                const std::string& table_id, table::Stage target);
  table::Artifact propose_content(const std::string& doc_id, const std::string& user,
                                  const std::string& table_id);
  table::Artifact edit_cell(const std::string& doc_id, const std::string& user,
                            const std::string& table_id, int row, int col, const std::string& text);
  table::Artifact revert_table(const std::string& doc_id, const std::string& user,
                               const std::string& table_id, table::Stage target);
  void delete_table(const std::string& doc_id, const std::string& user, const std::string& table_id);
  // Override when set, else inferred from the header row. Needs a header.
  integrate::ColumnMapping table_mapping(const std::string& doc_id, const std::string& table_id) const;
  integrate::ColumnMapping set_table_mapping(const std::string& doc_id, const std::string& user,
                                             const std::string& table_id,
                                             std::optional<integrate::ColumnMapping> mapping);
  void set_ocr(table::OcrFn ocr);

  // text
  std::vector<text::EntitySpan> spans(const std::string& doc_id, bool visible_only = false) const;
  text::EntitySpan add_span(const std::string& doc_id, const std::string& user, int section_index,
                            std::size_t start, std::size_t end, const std::string& label);
  void delete_span(const std::string& doc_id, const std::string& user, const std::string& span_id);
  text::EntitySpan link_span(const std::string& doc_id, const std::string& user,
                             const std::string& span_id, const std::optional<std::string>& field);
  std::vector<text::EntitySpan> reannotate(const std::string& doc_id, const std::string& user);

  // maps
  std::vector<map::Artifact> list_maps(const std::string& doc_id) const;
  map::Artifact get_map(const std::string& doc_id, const std::string& map_id) const;
  std::vector<map::Artifact> detect_maps(const std::string& doc_id, const std::string& user,
                                         std::optional<int> page_index = {});
  map::Artifact add_map(const std::string& doc_id, const std::string& user, int page_index,
                        const BBox& region);
  map::Artifact confirm_map_region(const std::string& doc_id, const std::string& user,
                                   const std::string& map_id, std::optional<BBox> region);
  map::Artifact propose_gridlines(const std::string& doc_id, const std::string& user,
                                  const std::string& map_id);
  map::Artifact edit_gridline(const std::string& doc_id, const std::string& user,
                              const std::string& map_id, const map::GridEdit& edit);
  map::Artifact fit_map(const std::string& doc_id, const std::string& user, const std::string& map_id);
  map::Artifact confirm_calibration(const std::string& doc_id, const std::string& user,
                                    const std::string& map_id);
  map::MarkedPoint mark_point(const std::string& doc_id, const std::string& user,
                              const std::string& map_id, Point pixel);
  map::Artifact attach_point(const std::string& doc_id, const std::string& user,
                             const std::string& map_id, const std::string& point_id,
                             std::optional<std::string> key);
  map::Artifact delete_point(const std::string& doc_id, const std::string& user,
                             const std::string& map_id, const std::string& point_id);
  map::Artifact revert_map(const std::string& doc_id, const std::string& user,
                           const std::string& map_id, map::Stage target);
  void delete_map(const std::string& doc_id, const std::string& user, const std::string& map_id);

  // integration
  integrate::DocumentDataset integrate_document(const std::string& doc_id);
  std::optional<integrate::DocumentDataset> document_dataset(const std::string& doc_id) const;
  // Stored datasets in upload order. rebuild re-integrates every parsed
  // document first, in one snapshot.
  ProjectIntegration integrate_project(const std::string& project_id, bool rebuild = false);
  meta::MetaRecord effective_meta(const std::string& doc_id) const;

  // corrections
  std::vector<CorrectionEvent> corrections(const std::string& project_id) const;
  std::string export_corrections(const std::string& project_id) const;  // NDJSON

  // Whole persisted state as canonical JSON (users without hashes).
  nlohmann::json snapshot() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

void to_json(nlohmann::json& j, const LockLease& l);
void from_json(const nlohmann::json& j, LockLease& l);
void to_json(nlohmann::json& j, const User& u);
void to_json(nlohmann::json& j, const Project& p);
void from_json(const nlohmann::json& j, Project& p);
void to_json(nlohmann::json& j, const FileRecord& f);
void from_json(const nlohmann::json& j, FileRecord& f);
void to_json(nlohmann::json& j, const CorrectionEvent& e);
void to_json(nlohmann::json& j, const MetaState& m);

}  // namespace docmine::store
