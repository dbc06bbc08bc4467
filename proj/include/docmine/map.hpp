#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "docmine/correction.hpp"
#include "docmine/geometry.hpp"
#include "docmine/pdf.hpp"

namespace docmine::map {

enum class Stage { Detected, RegionConfirmed, GridProposed, GridConfirmed, Marking };
std::string stage_name(Stage s);
Stage parse_stage(std::string_view name);

// Longitude lines are vertical, latitude lines horizontal.
enum class Axis { Longitude, Latitude };
std::string axis_name(Axis a);
Axis parse_axis(std::string_view name);

struct DegreeValue {
  double value = 0.0;
  std::optional<Axis> hint;  // from the hemisphere letter
};

// Grammar: [sign] D[°][ M[′][ S[″]]] [N|S|E|W]. N/E positive, S/W negative.
// ' and " stand in for the primes. Throws UnparseableLabel.
DegreeValue parse_degree_label(std::string_view token);
bool is_degree_label(std::string_view token);

struct GridLine {
  Axis axis = Axis::Longitude;
  double pixel_pos = 0.0;  // region-relative: x for longitude, y for latitude
  double value = 0.0;      // signed decimal degrees
  std::string source = "auto";  // auto | manual
  std::string label;            // margin text the value came from, if any

  friend bool operator==(const GridLine&, const GridLine&) = default;
};

struct AxisFit {
  double a = 0.0;  // degrees per pt
  double b = 0.0;  // degrees
  double rms_residual = 0.0;
  int n_lines = 0;

  double apply(double pos) const { return a * pos + b; }
  friend bool operator==(const AxisFit&, const AxisFit&) = default;
};

struct Calibration {
  AxisFit longitude;
  AxisFit latitude;
  double rms_residual = 0.0;  // over all lines of both axes
  bool nonlinear_warning = false;

  friend bool operator==(const Calibration&, const Calibration&) = default;
};

struct MarkedPoint {
  std::string point_id;
  Point pixel;  // region-relative
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<std::string> attached_key;

  friend bool operator==(const MarkedPoint&, const MarkedPoint&) = default;
};

struct Artifact {
  std::string map_id;
  std::string doc_id;
  int page_index = 0;
  BBox region;
  Stage stage = Stage::Detected;
  std::vector<GridLine> gridlines;
  std::optional<Calibration> calibration;
  std::vector<MarkedPoint> points;
  int next_point = 1;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;

  const MarkedPoint* point(std::string_view id) const;
  friend bool operator==(const Artifact&, const Artifact&) = default;
};

struct Config {
  double label_margin = 12.0;       // labels within this distance of the border
  double pair_distance = 12.0;      // label center to its line
  double dedup_distance = 1.0;      // gridlines closer than this are one line
  double residual_tolerance = 0.25; // degrees; above it NonLinearWarning
};

std::vector<BBox> detect_regions(const pdf::PageModel& page, const Config& cfg = {});
std::vector<GridLine> detect_gridlines(const pdf::PageModel& page, const BBox& region,
                                       const Config& cfg = {});

// Ordinary least squares of value on pixel_pos per axis. Throws
// InsufficientLines or DegenerateAxis.
Calibration fit_calibration(const std::vector<GridLine>& lines, const Config& cfg = {});

// lat = a_lat*y + b_lat, lon = a_lon*x + b_lon, rounded to 6 decimals.
MarkedPoint apply_calibration(const Calibration& cal, Point pixel);

std::vector<Artifact> detect(const pdf::PageModel& page, const std::string& doc_id,
                             const Config& cfg = {});
Artifact manual_artifact(const pdf::PageModel& page, const std::string& doc_id, const BBox& region);
std::optional<Correction> confirm_region(Artifact& a, const pdf::PageModel& page, const BBox& region);
void propose_gridlines(Artifact& a, const pdf::PageModel& page, const Config& cfg = {});

struct AddLine { Axis axis; double pixel_pos; double value; };
struct SetValue { int index; double value; };
struct DeleteLine { int index; };
using GridEdit = std::variant<AddLine, SetValue, DeleteLine>;
GridEdit parse_edit(const nlohmann::json& j);
nlohmann::json edit_to_json(const GridEdit& e);

std::optional<Correction> edit_gridline(Artifact& a, const GridEdit& edit);
// GridProposed -> GridConfirmed (fits); repeating is a no-op.
void fit(Artifact& a, const Config& cfg = {});
// GridConfirmed -> Marking; repeating is a no-op.
void confirm_calibration(Artifact& a);
const MarkedPoint& mark_point(Artifact& a, Point pixel);
void attach_point(Artifact& a, std::string_view point_id, std::optional<std::string> key);
void delete_point(Artifact& a, std::string_view point_id);
void revert(Artifact& a, Stage target);

void to_json(nlohmann::json& j, const GridLine& g);
void from_json(const nlohmann::json& j, GridLine& g);
void to_json(nlohmann::json& j, const Calibration& c);
void from_json(const nlohmann::json& j, Calibration& c);
void to_json(nlohmann::json& j, const MarkedPoint& p);
void from_json(const nlohmann::json& j, MarkedPoint& p);
void to_json(nlohmann::json& j, const Artifact& a);
void from_json(const nlohmann::json& j, Artifact& a);

}  // namespace docmine::map
