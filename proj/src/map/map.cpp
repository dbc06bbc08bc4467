#include <algorithm>
#include <cmath>
#include <numeric>

#include "docmine/clock.hpp"
#include "docmine/error.hpp"
#include "docmine/map.hpp"
#include "docmine/text_util.hpp"

namespace docmine::map {

using nlohmann::json;

namespace {

const char* const kStageNames[] = {"Detected", "RegionConfirmed", "GridProposed",
                                   "GridConfirmed", "Marking"};

[[noreturn]] void invalid_stage(const Artifact& a, const std::string& op) {
  fail(ErrorCode::InvalidStage, op + " not allowed at stage " + stage_name(a.stage),
       {{"stage", stage_name(a.stage)}, {"map_id", a.map_id}});
}

[[noreturn]] void unparseable(std::string_view token) {
  fail(ErrorCode::UnparseableLabel, "not a coordinate label: " + std::string(token),
       {{"label", std::string(token)}});
}

void check_region(const pdf::PageModel& page, const BBox& r) {
  if (!r.valid() || r.area() <= 0) fail(ErrorCode::EmptyRegion, "region has zero area");
  const double eps = 1e-6;
  if (r.x0 < -eps || r.y0 < -eps || r.x1 > page.width + eps || r.y1 > page.height + eps)
    fail(ErrorCode::RegionOutOfPage, "region lies outside the page",
         {{"region", r}, {"page", page.bounds()}});
}

bool is_degree_sign(char32_t c) { return c == U'°' || c == U'º' || c == U'˚'; }
bool is_prime(char32_t c) { return c == U'′' || c == U'\'' || c == U'’'; }
bool is_double_prime(char32_t c) { return c == U'″' || c == U'"' || c == U'”'; }

class LabelParser {
 public:
  explicit LabelParser(std::u32string s) : s_(std::move(s)) {}

  bool at_end() const { return i_ >= s_.size(); }
  char32_t peek() const { return at_end() ? 0 : s_[i_]; }
  void skip_space() {
    while (!at_end() && text::is_space(s_[i_])) ++i_;
  }
  bool accept(bool (*pred)(char32_t)) {
    if (at_end() || !pred(s_[i_])) return false;
    ++i_;
    return true;
  }
  bool digit() const { return peek() >= U'0' && peek() <= U'9'; }

  // Unsigned decimal; returns false when no digits are present.
  bool number(double& out, bool& decimal) {
    std::string buf;
    while (digit()) buf += static_cast<char>(s_[i_++]);
    decimal = false;
    if (peek() == U'.') {
      ++i_;
      decimal = true;
      buf += '.';
      const std::size_t before = buf.size();
      while (digit()) buf += static_cast<char>(s_[i_++]);
      if (buf.size() == before) return false;
    }
    if (buf.empty() || buf == ".") return false;
    out = std::stod(buf);
    return true;
  }

 private:
  std::u32string s_;
  std::size_t i_ = 0;
};

double round6(double v) { return std::round(v * 1e6) / 1e6; }

double axis_extent(const BBox& region, Axis axis) {
  return axis == Axis::Longitude ? region.width() : region.height();
}

double axis_limit(Axis axis) { return axis == Axis::Latitude ? 90.0 : 180.0; }

void check_value(Axis axis, double value) {
  if (!std::isfinite(value) || std::abs(value) > axis_limit(axis))
    fail(ErrorCode::InvalidValue, "value out of range for " + axis_name(axis),
         {{"axis", axis_name(axis)}, {"value", std::isfinite(value) ? json(value) : json(nullptr)}});
}

void check_index(const Artifact& a, int index) {
  if (index < 0 || index >= static_cast<int>(a.gridlines.size()))
    fail(ErrorCode::UnknownLine, "no gridline " + std::to_string(index), {{"index", index}});
}

AxisFit fit_axis(const std::vector<GridLine>& lines, Axis axis) {
  std::vector<const GridLine*> own;
  for (const GridLine& g : lines)
    if (g.axis == axis) own.push_back(&g);
  const auto n = static_cast<double>(own.size());
  if (own.size() < 2)
    fail(ErrorCode::InsufficientLines, axis_name(axis) + " needs at least 2 gridlines",
         {{"axis", axis_name(axis)}, {"n_lines", own.size()}});
  double mx = 0, my = 0;
  for (const GridLine* g : own) {
    mx += g->pixel_pos;
    my += g->value;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (const GridLine* g : own) {
    sxx += (g->pixel_pos - mx) * (g->pixel_pos - mx);
    sxy += (g->pixel_pos - mx) * (g->value - my);
  }
  if (sxx <= 0 || sxy == 0)
    fail(ErrorCode::DegenerateAxis, axis_name(axis) + " gridlines do not span the axis",
         {{"axis", axis_name(axis)}});
  AxisFit f;
  f.a = sxy / sxx;
  f.b = my - f.a * mx;
  double ss = 0;
  for (const GridLine* g : own) ss += std::pow(f.apply(g->pixel_pos) - g->value, 2);
  f.rms_residual = std::sqrt(ss / n);
  f.n_lines = static_cast<int>(own.size());
  return f;
}

enum class Margin { Top, Bottom, Left, Right, None };

Margin margin_of(const BBox& region, const BBox& label) {
  const Point c = label.center();
  const bool above = c.y < region.y0, below = c.y > region.y1;
  const bool left = c.x < region.x0, right = c.x > region.x1;
  if ((above || below) && (left || right)) return Margin::None;  // corner
  if (above) return Margin::Top;
  if (below) return Margin::Bottom;
  if (left) return Margin::Left;
  if (right) return Margin::Right;
  const double d[4] = {c.y - region.y0, region.y1 - c.y, c.x - region.x0, region.x1 - c.x};
  return static_cast<Margin>(std::min_element(d, d + 4) - d);
}

// Labels sit in a band around the border: close to it, not deep inside.
bool in_label_band(const BBox& region, const BBox& label, double margin) {
  if (box_distance(region, label) > margin) return false;
  const BBox core{region.x0 + margin, region.y0 + margin, region.x1 - margin, region.y1 - margin};
  return !(core.valid() && core.contains(label));
}

}  // namespace

std::string stage_name(Stage s) { return kStageNames[static_cast<int>(s)]; }

Stage parse_stage(std::string_view name) {
  for (int i = 0; i < 5; ++i)
    if (name == kStageNames[i]) return static_cast<Stage>(i);
  fail(ErrorCode::ValidationError, "unknown map stage: " + std::string(name));
}

std::string axis_name(Axis a) { return a == Axis::Longitude ? "longitude" : "latitude"; }

Axis parse_axis(std::string_view name) {
  if (name == "longitude" || name == "lon") return Axis::Longitude;
  if (name == "latitude" || name == "lat") return Axis::Latitude;
  fail(ErrorCode::ValidationError, "unknown axis: " + std::string(name));
}

// --- labels ------------------------------------------------------------------

DegreeValue parse_degree_label(std::string_view token) {
  LabelParser p(text::to_u32(token));
  p.skip_space();
  double sign = 1.0;
  bool signed_ = false;
  if (p.peek() == U'-' || p.peek() == U'−' || p.peek() == U'+') {
    sign = p.peek() == U'+' ? 1.0 : -1.0;
    signed_ = true;
    p.accept([](char32_t) { return true; });
  }
  double deg = 0, min = 0, sec = 0;
  bool dec = false;
  if (!p.number(deg, dec)) unparseable(token);
  const bool has_degree_sign = p.accept(is_degree_sign);
  p.skip_space();
  bool has_min = false, has_sec = false;
  if (p.digit()) {
    if (dec) unparseable(token);
    if (!p.number(min, dec)) unparseable(token);
    has_min = true;
    p.accept(is_prime);
    p.skip_space();
    if (p.digit()) {
      if (dec) unparseable(token);
      if (!p.number(sec, dec)) unparseable(token);
      has_sec = true;
      if (!p.accept(is_double_prime) && p.accept(is_prime)) p.accept(is_prime);
      p.skip_space();
    }
  }
  DegreeValue out;
  double hemi = 1.0;
  const char32_t h = p.peek();
  if (h == U'N' || h == U'S' || h == U'E' || h == U'W' || h == U'n' || h == U's' ||
      h == U'e' || h == U'w') {
    const char32_t u = h < U'a' ? h : h - 32;
    out.hint = (u == U'N' || u == U'S') ? Axis::Latitude : Axis::Longitude;
    hemi = (u == U'S' || u == U'W') ? -1.0 : 1.0;
    p.accept([](char32_t) { return true; });
    p.skip_space();
  }
  if (!p.at_end()) unparseable(token);
  if (signed_ && out.hint) unparseable(token);
  if ((has_min && min >= 60) || (has_sec && sec >= 60)) unparseable(token);
  (void)has_degree_sign;
  out.value = sign * hemi * (deg + min / 60.0 + sec / 3600.0);
  const double limit = out.hint ? axis_limit(*out.hint) : 180.0;
  if (std::abs(out.value) > limit) unparseable(token);
  if (out.value == 0.0) {
    out.value = 0.0;  // no negative zero
    out.hint.reset();
  }
  return out;
}

bool is_degree_label(std::string_view token) {
  try {
    parse_degree_label(token);
    return true;
  } catch (const Error&) {
    return false;
  }
}

// --- detection ---------------------------------------------------------------

std::vector<BBox> detect_regions(const pdf::PageModel& page, const Config& cfg) {
  std::vector<BBox> out;
  for (const BBox& img : page.image_regions) {
    if (img.area() <= 0) continue;
    int labels = 0;
    for (const pdf::TextRun& r : page.text_runs)
      if (in_label_band(img, r.bbox, cfg.label_margin) && is_degree_label(r.text)) ++labels;
    if (labels >= 2) out.push_back(img.clamped(page.width, page.height));
  }
  std::sort(out.begin(), out.end(),
            [](const BBox& a, const BBox& b) { return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0); });
  return out;
}

std::vector<GridLine> detect_gridlines(const pdf::PageModel& page, const BBox& region,
                                       const Config& cfg) {
  const double m = cfg.label_margin;
  const double edge = 0.5;  // the frame itself is not a gridline
  std::vector<GridLine> found;
  for (const pdf::TextRun& r : page.text_runs) {
    if (!in_label_band(region, r.bbox, m)) continue;
    DegreeValue dv;
    try {
      dv = parse_degree_label(r.text);
    } catch (const Error&) {
      continue;
    }
    const Margin where = margin_of(region, r.bbox);
    if (where == Margin::None) continue;
    const bool vertical = where == Margin::Top || where == Margin::Bottom;
    const Point c = r.bbox.center();
    const pdf::LineSegment* best = nullptr;
    double best_d = cfg.pair_distance;
    for (const pdf::LineSegment& s : page.line_segments) {
      const BBox b = s.bbox();
      double pos = 0, d = 0;
      bool touches = false;
      if (vertical) {
        if (s.orientation != pdf::Orientation::Vertical) continue;
        pos = (b.x0 + b.x1) / 2;
        if (pos <= region.x0 + edge || pos >= region.x1 - edge) continue;
        const double border = where == Margin::Top ? region.y0 : region.y1;
        touches = b.y1 >= border - m && b.y0 <= border + m;
        d = std::abs(pos - c.x);
      } else {
        if (s.orientation != pdf::Orientation::Horizontal) continue;
        pos = (b.y0 + b.y1) / 2;
        if (pos <= region.y0 + edge || pos >= region.y1 - edge) continue;
        const double border = where == Margin::Left ? region.x0 : region.x1;
        touches = b.x1 >= border - m && b.x0 <= border + m;
        d = std::abs(pos - c.y);
      }
      if (touches && d <= best_d) {
        best_d = d;
        best = &s;
      }
    }
    if (!best) continue;
    const Axis axis = vertical ? Axis::Longitude : Axis::Latitude;
    if (dv.hint && *dv.hint != axis) continue;
    const BBox b = best->bbox();
    const double pos = vertical ? (b.x0 + b.x1) / 2 - region.x0 : (b.y0 + b.y1) / 2 - region.y0;
    const bool dup = std::any_of(found.begin(), found.end(), [&](const GridLine& g) {
      return g.axis == axis && std::abs(g.pixel_pos - pos) <= cfg.dedup_distance;
    });
    if (!dup) found.push_back({axis, pos, dv.value, "auto", r.text});
  }
  std::stable_sort(found.begin(), found.end(), [](const GridLine& a, const GridLine& b) {
    return std::tie(a.pixel_pos, a.axis) < std::tie(b.pixel_pos, b.axis);
  });
  return found;
}

// --- calibration -------------------------------------------------------------

Calibration fit_calibration(const std::vector<GridLine>& lines, const Config& cfg) {
  Calibration c;
  c.longitude = fit_axis(lines, Axis::Longitude);
  c.latitude = fit_axis(lines, Axis::Latitude);
  const double n = c.longitude.n_lines + c.latitude.n_lines;
  c.rms_residual = std::sqrt((std::pow(c.longitude.rms_residual, 2) * c.longitude.n_lines +
                              std::pow(c.latitude.rms_residual, 2) * c.latitude.n_lines) /
                             n);
  c.nonlinear_warning = c.longitude.rms_residual > cfg.residual_tolerance ||
                        c.latitude.rms_residual > cfg.residual_tolerance;
  return c;
}

MarkedPoint apply_calibration(const Calibration& cal, Point pixel) {
  MarkedPoint p;
  p.pixel = pixel;
  p.longitude = round6(cal.longitude.apply(pixel.x));
  p.latitude = round6(cal.latitude.apply(pixel.y));
  return p;
}

// --- staged operations -------------------------------------------------------

const MarkedPoint* Artifact::point(std::string_view id) const {
  for (const MarkedPoint& p : points)
    if (p.point_id == id) return &p;
  return nullptr;
}

std::vector<Artifact> detect(const pdf::PageModel& page, const std::string& doc_id,
                             const Config& cfg) {
  std::vector<Artifact> out;
  for (const BBox& r : detect_regions(page, cfg)) {
    Artifact a;
    a.doc_id = doc_id;
    a.page_index = page.page_index;
    a.region = r;
    out.push_back(a);
  }
  return out;
}

Artifact manual_artifact(const pdf::PageModel& page, const std::string& doc_id,
                         const BBox& region) {
  check_region(page, region);
  Artifact a;
  a.doc_id = doc_id;
  a.page_index = page.page_index;
  a.region = region;
  return a;
}

std::optional<Correction> confirm_region(Artifact& a, const pdf::PageModel& page,
                                         const BBox& region) {
  if (a.stage == Stage::RegionConfirmed && a.region == region) return std::nullopt;
  if (a.stage != Stage::Detected) invalid_stage(a, "confirm_region");
  check_region(page, region);
  std::optional<Correction> log;
  if (!(region == a.region))
    log = Correction{"map", stage_name(a.stage), "confirm_region", a.region, region};
  a.region = region;
  a.stage = Stage::RegionConfirmed;
  return log;
}

void propose_gridlines(Artifact& a, const pdf::PageModel& page, const Config& cfg) {
  if (a.stage != Stage::RegionConfirmed) invalid_stage(a, "detect_gridlines");
  a.gridlines = detect_gridlines(page, a.region, cfg);
  a.stage = Stage::GridProposed;
}

std::optional<Correction> edit_gridline(Artifact& a, const GridEdit& edit) {
  if (a.stage != Stage::GridProposed && a.stage != Stage::GridConfirmed)
    invalid_stage(a, "edit_gridline");
  std::vector<GridLine> next = a.gridlines;
  if (const auto* add = std::get_if<AddLine>(&edit)) {
    check_value(add->axis, add->value);
    if (!std::isfinite(add->pixel_pos) || add->pixel_pos < 0 ||
        add->pixel_pos > axis_extent(a.region, add->axis))
      fail(ErrorCode::InvalidValue, "pixel position outside the region",
           {{"pixel_pos", std::isfinite(add->pixel_pos) ? json(add->pixel_pos) : json(nullptr)}});
    GridLine g{add->axis, add->pixel_pos, add->value, "manual", ""};
    const auto at = std::upper_bound(next.begin(), next.end(), g, [](const GridLine& x, const GridLine& y) {
      return std::tie(x.pixel_pos, x.axis) < std::tie(y.pixel_pos, y.axis);
    });
    next.insert(at, g);
  } else if (const auto* set = std::get_if<SetValue>(&edit)) {
    check_index(a, set->index);
    GridLine& g = next[static_cast<std::size_t>(set->index)];
    check_value(g.axis, set->value);
    if (g.value == set->value) return std::nullopt;
    g.value = set->value;
    g.source = "manual";
  } else {
    const int index = std::get<DeleteLine>(edit).index;
    check_index(a, index);
    next.erase(next.begin() + index);
  }
  Correction log{"map", stage_name(a.stage), "edit_gridline", json{{"gridlines", a.gridlines}},
                 json{{"edit", edit_to_json(edit)}, {"gridlines", next}}};
  a.gridlines = std::move(next);
  a.calibration.reset();
  a.stage = Stage::GridProposed;
  return log;
}

void fit(Artifact& a, const Config& cfg) {
  if (a.stage == Stage::GridConfirmed) return;
  if (a.stage != Stage::GridProposed) invalid_stage(a, "fit_calibration");
  a.calibration = fit_calibration(a.gridlines, cfg);
  a.stage = Stage::GridConfirmed;
}

void confirm_calibration(Artifact& a) {
  if (a.stage == Stage::Marking) return;
  if (a.stage != Stage::GridConfirmed) invalid_stage(a, "confirm_calibration");
  a.stage = Stage::Marking;
}

const MarkedPoint& mark_point(Artifact& a, Point pixel) {
  if (a.stage != Stage::Marking || !a.calibration)
    fail(ErrorCode::NotCalibrated, "calibration has not been confirmed",
         {{"stage", stage_name(a.stage)}, {"map_id", a.map_id}});
  if (!std::isfinite(pixel.x) || !std::isfinite(pixel.y) || pixel.x < 0 || pixel.y < 0 ||
      pixel.x > a.region.width() || pixel.y > a.region.height())
    fail(ErrorCode::OutOfRegion, "point lies outside the map region",
         {{"width", a.region.width()}, {"height", a.region.height()}});
  MarkedPoint p = apply_calibration(*a.calibration, pixel);
  p.point_id = "pt-" + std::to_string(a.next_point++);
  a.points.push_back(std::move(p));
  return a.points.back();
}

void attach_point(Artifact& a, std::string_view point_id, std::optional<std::string> key) {
  for (MarkedPoint& p : a.points)
    if (p.point_id == point_id) {
      if (key && key->empty()) key.reset();
      p.attached_key = std::move(key);
      return;
    }
  fail(ErrorCode::UnknownPoint, "no point " + std::string(point_id),
       {{"point_id", std::string(point_id)}});
}

void delete_point(Artifact& a, std::string_view point_id) {
  const auto it = std::find_if(a.points.begin(), a.points.end(),
                               [&](const MarkedPoint& p) { return p.point_id == point_id; });
  if (it == a.points.end())
    fail(ErrorCode::UnknownPoint, "no point " + std::string(point_id),
         {{"point_id", std::string(point_id)}});
  a.points.erase(it);
}

void revert(Artifact& a, Stage target) {
  if (static_cast<int>(target) >= static_cast<int>(a.stage)) invalid_stage(a, "revert");
  if (target < Stage::Marking) a.points.clear();
  if (target < Stage::GridConfirmed) a.calibration.reset();
  if (target < Stage::GridProposed) a.gridlines.clear();
  a.stage = target;
}

// --- edits -------------------------------------------------------------------

GridEdit parse_edit(const json& j) {
  try {
    auto value_of = [&](std::optional<Axis> axis) {
      const json& v = j.at("value");
      if (v.is_number()) return v.get<double>();
      const DegreeValue dv = parse_degree_label(v.get<std::string>());
      if (axis && dv.hint && *dv.hint != *axis)
        fail(ErrorCode::InvalidValue, "label hemisphere does not match the axis",
             {{"value", v}, {"axis", axis_name(*axis)}});
      return dv.value;
    };
    const std::string op = j.at("op").get<std::string>();
    if (op == "add") {
      const Axis axis = parse_axis(j.at("axis").get<std::string>());
      return AddLine{axis, j.at("pixel_pos").get<double>(), value_of(axis)};
    }
    if (op == "set_value") return SetValue{j.at("index").get<int>(), value_of(std::nullopt)};
    if (op == "delete") return DeleteLine{j.at("index").get<int>()};
    fail(ErrorCode::ValidationError, "unknown gridline edit: " + op);
  } catch (const json::exception& e) {
    fail(ErrorCode::ValidationError, std::string("bad gridline edit: ") + e.what());
  }
}

json edit_to_json(const GridEdit& e) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AddLine>)
          return {{"op", "add"}, {"axis", axis_name(v.axis)}, {"pixel_pos", v.pixel_pos}, {"value", v.value}};
        else if constexpr (std::is_same_v<T, SetValue>)
          return {{"op", "set_value"}, {"index", v.index}, {"value", v.value}};
        else return {{"op", "delete"}, {"index", v.index}};
      },
      e);
}

// --- json --------------------------------------------------------------------

void to_json(json& j, const GridLine& g) {
  j = {{"axis", axis_name(g.axis)}, {"pixel_pos", g.pixel_pos}, {"value", g.value},
       {"source", g.source}, {"label", g.label}};
}

void from_json(const json& j, GridLine& g) {
  g.axis = parse_axis(j.at("axis").get<std::string>());
  g.pixel_pos = j.at("pixel_pos").get<double>();
  g.value = j.at("value").get<double>();
  g.source = j.value("source", "auto");
  g.label = j.value("label", "");
}

namespace {

json fit_json(const AxisFit& f) {
  return {{"a", f.a}, {"b", f.b}, {"rms_residual", f.rms_residual}, {"n_lines", f.n_lines}};
}

AxisFit fit_from(const json& j) {
  return {j.at("a").get<double>(), j.at("b").get<double>(), j.value("rms_residual", 0.0),
          j.value("n_lines", 0)};
}

}  // namespace

void to_json(json& j, const Calibration& c) {
  j = {{"longitude", fit_json(c.longitude)},
       {"latitude", fit_json(c.latitude)},
       {"rms_residual", c.rms_residual},
       {"warnings", c.nonlinear_warning ? json::array({"NonLinearWarning"}) : json::array()}};
}

void from_json(const json& j, Calibration& c) {
  c.longitude = fit_from(j.at("longitude"));
  c.latitude = fit_from(j.at("latitude"));
  c.rms_residual = j.value("rms_residual", 0.0);
  const json w = j.value("warnings", json::array());
  c.nonlinear_warning = std::find(w.begin(), w.end(), "NonLinearWarning") != w.end();
}

void to_json(json& j, const MarkedPoint& p) {
  j = {{"point_id", p.point_id},
       {"pixel", p.pixel},
       {"latitude", p.latitude},
       {"longitude", p.longitude},
       {"attached_key", p.attached_key ? json(*p.attached_key) : json(nullptr)}};
}

void from_json(const json& j, MarkedPoint& p) {
  p.point_id = j.at("point_id").get<std::string>();
  p.pixel = j.at("pixel").get<Point>();
  p.latitude = j.at("latitude").get<double>();
  p.longitude = j.at("longitude").get<double>();
  p.attached_key.reset();
  if (j.contains("attached_key") && !j["attached_key"].is_null())
    p.attached_key = j["attached_key"].get<std::string>();
}

void to_json(json& j, const Artifact& a) {
  j = {{"map_id", a.map_id},
       {"doc_id", a.doc_id},
       {"page_index", a.page_index},
       {"region", a.region},
       {"stage", stage_name(a.stage)},
       {"gridlines", a.gridlines},
       {"calibration", a.calibration ? json(*a.calibration) : json(nullptr)},
       {"points", a.points},
       {"next_point", a.next_point},
       {"created_at", iso8601(a.created_at)},
       {"updated_at", iso8601(a.updated_at)}};
}

void from_json(const json& j, Artifact& a) {
  a.map_id = j.at("map_id").get<std::string>();
  a.doc_id = j.at("doc_id").get<std::string>();
  a.page_index = j.at("page_index").get<int>();
  a.region = j.at("region").get<BBox>();
  a.stage = parse_stage(j.at("stage").get<std::string>());
  a.gridlines = j.value("gridlines", json::array()).get<std::vector<GridLine>>();
  a.calibration.reset();
  if (j.contains("calibration") && !j["calibration"].is_null())
    a.calibration = j["calibration"].get<Calibration>();
  a.points = j.value("points", json::array()).get<std::vector<MarkedPoint>>();
  a.next_point = j.value("next_point", 1);
  a.created_at = parse_iso8601(j.at("created_at").get<std::string>());
  a.updated_at = parse_iso8601(j.at("updated_at").get<std::string>());
}

}  // namespace docmine::map
