// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances are pinned below.
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "docmine/api.hpp"
#include "docmine/error.hpp"
#include "docmine/fixtures.hpp"
#include "docmine/integrate.hpp"
#include "docmine/map.hpp"
#include "docmine/metadata.hpp"
#include "docmine/pdf.hpp"
#include "docmine/store.hpp"
#include "docmine/table.hpp"
#include "docmine/text_util.hpp"
#include "oracles/join.hpp"
#include "oracles/ols.hpp"
#include "oracles/vote.hpp"

using namespace docmine;
using nlohmann::json;

namespace {

constexpr int kCorpusSize = 24;
constexpr double kMinIoU = 0.8;
constexpr double kBoundTolPt = 1.0;
constexpr double kCorpusBudgetS = 60.0;
constexpr int kCalibrationMaps = 100;
constexpr int kMarkedPoints = 1000;
constexpr double kCoefTol = 1e-9;
constexpr double kSpanFraction = 0.005;
constexpr double kRoundingTol = 5e-7 + 1e-12;  // half of the sixth decimal
constexpr int kJoinTrials = 500;
constexpr int kVoteTrials = 500;
constexpr int kStateSteps = 10000;  // per artifact kind
constexpr int kLockSteps = 5000;
constexpr int kRoundTrips = 200;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> problems;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (problems.size() < 8) problems.push_back(what);
  }
};

template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

// --- fixture corpus -----------------------------------------------------------------

Outcome fixture_corpus() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, int> tables_by_kind, iou_ok, structure_ok, cells_ok;
  double min_ruled_iou = 1.0;
  for (int i = 0; i < kCorpusSize; ++i) {
    const fixtures::Fixture fx = fixtures::generate(i);
    const auto pages = pdf::parse_bytes(fx.pdf);
    for (const json& t : fx.sidecar["tables"]) {
      const std::string kind = t["kind"];
      const std::string where = fx.name + " p" + std::to_string(t["page"].get<int>()) + " " + kind;
      ++tables_by_kind[kind];
      const pdf::PageModel& page = pages[t["page"].get<std::size_t>()];
      const BBox truth = t["region"].get<BBox>();
      BBox best;
      double best_iou = 0;
      for (const BBox& r : table::detect_regions(page)) {
        if (iou(r, truth) > best_iou) {
          best_iou = iou(r, truth);
          best = r;
        }
      }
      if (kind == "ruled") {
        min_ruled_iou = std::min(min_ruled_iou, best_iou);
        o.check(best_iou >= kMinIoU, where + ": IoU " + fmt(best_iou));
      }
      if (best_iou < kMinIoU) continue;
      ++iou_ok[kind];

      // structure and content are judged on the detected region
      table::Grid grid;
      try {
        grid = table::recognize_structure(page, best);
      } catch (const Error& e) {
        o.check(false, where + ": structure " + e.what());
        continue;
      }
      auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t k = 0; k < a.size(); ++k)
          if (std::abs(a[k] - b[k]) > kBoundTolPt) return false;
        return true;
      };
      std::vector<table::Span> merges = t["merges"].get<std::vector<table::Span>>();
      std::sort(merges.begin(), merges.end());
      const bool structure = close(grid.row_bounds, t["row_bounds"].get<std::vector<double>>()) &&
                             close(grid.col_bounds, t["col_bounds"].get<std::vector<double>>()) &&
                             grid.merges == merges;
      o.check(structure, where + ": grid " + json(grid).dump());
      if (!structure) continue;
      ++structure_ok[kind];

      std::map<std::pair<int, int>, std::string> want, got;
      for (const json& c : t["cells"]) want[{c["row"].get<int>(), c["col"].get<int>()}] = c["text"];
      for (const table::Cell& c : table::recognize_content(page, best, grid)) got[{c.row, c.col}] = c.text;
      // cells absent from the sidecar are empty
      for (auto& [k, v] : got)
        if (!want.count(k) && v.empty()) want[k] = "";
      o.check(got == want, where + ": cell texts differ");
      if (got == want) ++cells_ok[kind];
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(secs < kCorpusBudgetS, "runtime " + fmt(secs) + " s");
  std::ostringstream d;
  d << kCorpusSize << " docs, " << secs << " s; min ruled IoU " << fmt(min_ruled_iou);
  for (const auto& [k, n] : tables_by_kind)
    d << "; " << k << " " << iou_ok[k] << "/" << n << " found, " << structure_ok[k] << " grid, " << cells_ok[k]
      << " cells";
  o.detail = d.str();
  return o;
}

// --- map calibration --------------------------------------------------------------

Outcome map_calibration() {
  Outcome o;
  std::mt19937_64 rng(2718);
  double worst_coef = 0, worst_rel = 0, worst_abs = 0, worst_exact = 0;
  int maps = 0, points = 0;
  for (int i = 1; maps < kCalibrationMaps; ++i) {
    const fixtures::Fixture fx = fixtures::generate(i);
    const auto pages = pdf::parse_bytes(fx.pdf);
    for (const json& m : fx.sidecar["maps"]) {
      const pdf::PageModel& page = pages[m["page"].get<std::size_t>()];
      const std::string where = fx.name;
      // end to end through the staged artifact
      auto found = map::detect(page, "doc");
      if (found.size() != 1) {
        o.check(false, where + ": " + std::to_string(found.size()) + " maps detected");
        continue;
      }
      map::Artifact a = found[0];
      map::confirm_region(a, page, a.region);
      map::propose_gridlines(a, page);
      map::fit(a);
      map::confirm_calibration(a);

      // the oracle sees exactly the lines the artifact was fitted on
      std::vector<double> xs[2], ys[2];
      for (const map::GridLine& g : a.gridlines) {
        const int axis = g.axis == map::Axis::Latitude;
        xs[axis].push_back(g.pixel_pos);
        ys[axis].push_back(g.value);
      }
      const auto lon = oracle::ols(xs[0], ys[0]);
      const auto lat = oracle::ols(xs[1], ys[1]);
      const map::Calibration& c = *a.calibration;
      const double dc = std::max({std::abs(c.longitude.a - lon.first), std::abs(c.longitude.b - lon.second),
                                  std::abs(c.latitude.a - lat.first), std::abs(c.latitude.b - lat.second)});
      worst_coef = std::max(worst_coef, dc);
      o.check(dc <= kCoefTol, where + ": coefficient error " + fmt(dc));

      // noise-free lines straight from the sidecar
      std::vector<map::GridLine> exact;
      for (const json& g : m["gridlines"])
        exact.push_back({map::parse_axis(g["axis"].get<std::string>()), g["pixel_pos"], g["value"], "truth", ""});
      const map::Calibration clean = map::fit_calibration(exact);

      // truth from the sidecar's closed form
      const double la = m["latitude"]["a"], lb = m["latitude"]["b"];
      const double oa = m["longitude"]["a"], ob = m["longitude"]["b"];
      const double w = a.region.width(), h = a.region.height();
      const double lon_span = std::abs(oa * w), lat_span = std::abs(la * h);
      std::uniform_real_distribution<double> ux(0, w), uy(0, h);
      for (int k = 0; k < kMarkedPoints / kCalibrationMaps; ++k) {
        const Point p{ux(rng), uy(rng)};
        const map::MarkedPoint got = map::mark_point(a, p);
        const double elon = std::abs(got.longitude - (oa * p.x + ob));
        const double elat = std::abs(got.latitude - (la * p.y + lb));
        worst_rel = std::max({worst_rel, elon / lon_span, elat / lat_span});
        worst_abs = std::max({worst_abs, elon, elat});
        o.check(elon <= kSpanFraction * lon_span && elat <= kSpanFraction * lat_span,
                where + ": point error beyond 0.5% of span");
        const map::MarkedPoint ideal = map::apply_calibration(clean, p);
        const double e0 = std::max(std::abs(ideal.longitude - (oa * p.x + ob)), std::abs(ideal.latitude - (la * p.y + lb)));
        worst_exact = std::max(worst_exact, e0);
        o.check(e0 <= kRoundingTol, where + ": noise-free point not exact within rounding");
        ++points;
      }
      ++maps;
    }
  }
  o.detail = std::to_string(maps) + " maps, " + std::to_string(points) + " points; max coef err " + fmt(worst_coef) +
             ", max point err " + fmt(worst_abs) + " deg (" + fmt(100 * worst_rel) + "% of span); noise-free max err " + fmt(worst_exact);
  return o;
}

// --- join ------------------------------------------------------------------------------

Outcome join_oracle() {
  using namespace integrate;
  Outcome o;
  std::mt19937_64 rng(9001);
  std::size_t total_rows = 0;
  for (int trial = 0; trial < kJoinTrials; ++trial) {
    const int nf = 1 + static_cast<int>(rng() % 6);
    std::vector<std::string> fields;
    for (int f = 0; f < nf; ++f) fields.push_back("Field " + std::to_string(f));
    std::optional<int> lat, lon;
    if (nf >= 3 && rng() % 2) {
      fields[static_cast<std::size_t>(nf - 2)] = "Latitude";
      fields[static_cast<std::size_t>(nf - 1)] = "Longitude";
      lat = nf - 2;
      lon = nf - 1;
    }
    const int key = static_cast<int>(rng() % static_cast<unsigned>(nf));
    const HeaderConfig h{fields, fields[static_cast<std::size_t>(key)]};
    DocumentInput d{"d", "meta-" + std::to_string(trial), {}, {}, {}};
    std::vector<oracle::JTable> jt;
    const int nt = 1 + static_cast<int>(rng() % 3);
    int budget = 100;
    for (int t = 0; t < nt; ++t) {
      std::vector<int> cols{key};
      for (int f = 0; f < nf; ++f)
        if (f != key && rng() % 2) cols.push_back(f);
      std::shuffle(cols.begin(), cols.end(), rng);
      Grid g(1);
      oracle::JTable jtab{static_cast<long>(rng() % 5), {}, {}};
      for (int f : cols) {
        g[0].push_back(fields[static_cast<std::size_t>(f)]);
        jtab.field_of.push_back(f);
      }
      const int nr = static_cast<int>(rng() % static_cast<unsigned>(std::min(budget, 50) + 1));
      budget -= nr;
      for (int r = 0; r < nr; ++r) {
        std::vector<std::string> row;
        for (int f : cols)
          row.push_back(f == key ? (rng() % 10 ? "S" + std::to_string(rng() % 15) : "")
                                 : (rng() % 3 ? std::to_string(rng() % 5) : ""));
        g.push_back(row);
        jtab.rows.push_back(row);
      }
      TableInput ti{"t" + std::to_string(t), jtab.order, g, {}};
      ti.mapping = infer_column_mapping(ti.values, h);
      d.tables.push_back(ti);
      jt.push_back(jtab);
    }
    std::vector<oracle::JSpan> js;
    for (int s = static_cast<int>(rng() % 4); s > 0; --s) {
      const int f = static_cast<int>(rng() % static_cast<unsigned>(nf));
      const std::string v = "text " + std::to_string(rng() % 3);
      d.spans.push_back({"s" + std::to_string(s), fields[static_cast<std::size_t>(f)], v});
      js.push_back({f, v});
    }
    std::vector<oracle::JPoint> jp;
    for (int p = static_cast<int>(rng() % 4); p > 0; --p) {
      std::optional<std::string> k;
      if (rng() % 2) k = "S" + std::to_string(rng() % 15);
      const double la = static_cast<double>(rng() % 1000) / 8.0 - 60;
      const double lo = static_cast<double>(rng() % 1000) / 4.0 - 120;
      d.points.push_back({"p" + std::to_string(p), k, la, lo});
      char a[32], b[32];
      std::snprintf(a, sizeof a, "%g", la);
      std::snprintf(b, sizeof b, "%g", lo);
      bool known = !k;
      for (const auto& t : jt)
        for (std::size_t c = 0; c < t.field_of.size(); ++c)
          if (t.field_of[c] == key)
            for (const auto& r : t.rows) known = known || r[c] == *k;
      if (known) jp.push_back({k, a, b});
    }
    const DocumentDataset ds = build_document_rows(d, &h);
    const auto want = oracle::join(jt, nf, key, lat, lon, js, jp, d.metadata_id);
    o.check(ds.rows == want, "trial " + std::to_string(trial) + " differs from the oracle");
    total_rows += ds.rows.size();
  }
  o.detail = std::to_string(kJoinTrials) + " instances, " + std::to_string(total_rows) + " rows compared";
  return o;
}

// --- voting ------------------------------------------------------------------------------

Outcome voting_oracle() {
  using namespace meta;
  Outcome o;
  std::mt19937_64 rng(31337);
  const std::vector<std::string> titles{"Zircon ages", "zircon  ages", "ZIRCON AGES", "Beach sands", "beach sands",
                                        "Coastal dunes"};
  const std::vector<std::string> venues{"J. Sed. Res.", "j. sed. res.", "Geology", "Sed. Geol."};
  const std::vector<std::vector<std::string>> lists{{"A. Ruiz"}, {"a. ruiz"}, {"A. Ruiz", "B. Cano"}, {"B. Cano"}};
  auto clean = [](const std::optional<std::string>& s) -> std::optional<std::string> {
    if (!s) return s;
    std::istringstream in(*s);
    std::string w, out;
    while (in >> w) out += (out.empty() ? "" : " ") + w;
    return out;
  };
  auto render = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += x + "|";
    return s;
  };
  for (int trial = 0; trial < kVoteTrials; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<int> prio(8);
    std::iota(prio.begin(), prio.end(), 0);
    std::shuffle(prio.begin(), prio.end(), rng);
    std::vector<SourceCandidate> cs;
    std::vector<oracle::Ballot> bt, bv, by, ba;
    for (int i = 0; i < n; ++i) {
      MetaRecord r;
      if (rng() % 4) r.title = titles[rng() % titles.size()];
      if (rng() % 2) r.venue = venues[rng() % venues.size()];
      if (rng() % 3) r.year = 2015 + static_cast<int>(rng() % 3);
      if (rng() % 3) r.authors = lists[rng() % lists.size()];
      cs.push_back({"src" + std::to_string(i), prio[static_cast<std::size_t>(i)], r});
      const int p = prio[static_cast<std::size_t>(i)];
      bt.push_back({p, clean(r.title)});
      bv.push_back({p, clean(r.venue)});
      by.push_back({p, r.year ? std::optional(std::to_string(*r.year)) : std::nullopt});
      ba.push_back({p, r.authors ? std::optional(render(*r.authors)) : std::nullopt});
    }
    std::shuffle(cs.begin(), cs.end(), rng);
    const auto expect_title = oracle::vote(bt);
    if (!expect_title) {
      // no title anywhere: the merge still runs and leaves it absent
      const MetaRecord got = vote_merge(cs);
      o.check(!got.title, "trial " + std::to_string(trial) + ": title invented");
      continue;
    }
    const MetaRecord got = vote_merge(cs);
    const std::string t = "trial " + std::to_string(trial);
    o.check(got.title == expect_title, t + ": title");
    o.check(got.venue == oracle::vote(bv), t + ": venue");
    o.check((got.year ? std::optional(std::to_string(*got.year)) : std::nullopt) == oracle::vote(by), t + ": year");
    o.check((got.authors ? std::optional(render(*got.authors)) : std::nullopt) == oracle::vote(ba), t + ": authors");
  }
  o.detail = std::to_string(kVoteTrials) + " cases with 1-5 sources";
  return o;
}

// --- state machine ---------------------------------------------------------------------------

int rank(table::Stage s) { return static_cast<int>(s); }
int rank(map::Stage s) { return static_cast<int>(s); }

void table_invariants(const table::Artifact& a, Outcome& o, const std::string& where) {
  const int s = rank(a.stage);
  o.check(a.grid.has_value() == (s >= rank(table::Stage::StructureProposed)), where + ": grid presence");
  o.check(a.cells.has_value() == (s >= rank(table::Stage::ContentProposed)), where + ": cells presence");
}

void map_invariants(const map::Artifact& a, Outcome& o, const std::string& where) {
  const int s = rank(a.stage);
  o.check(a.calibration.has_value() == (s >= rank(map::Stage::GridConfirmed)), where + ": calibration presence");
  o.check(a.points.empty() || a.stage == map::Stage::Marking, where + ": points before Marking");
  o.check(a.gridlines.empty() || s >= rank(map::Stage::GridProposed), where + ": gridlines before proposal");
}

Outcome state_machine() {
  Outcome o;
  std::mt19937_64 rng(1618);
  std::vector<fixtures::Fixture> docs;
  for (int i = 0; i < 6; ++i) docs.push_back(fixtures::generate(i));
  std::vector<std::vector<pdf::PageModel>> pages;
  for (const auto& d : docs) pages.push_back(pdf::parse_bytes(d.pdf));
  std::map<std::string, int> reached;

  // tables
  struct TSlot {
    const pdf::PageModel* page;
    table::Artifact a;
  };
  std::vector<TSlot> tslots;
  for (const auto& ps : pages)
    for (const auto& p : ps)
      for (const auto& a : table::detect(p, "doc")) tslots.push_back({&p, a});
  for (int step = 0; step < kStateSteps; ++step) {
    TSlot& slot = tslots[rng() % tslots.size()];
    table::Artifact& a = slot.a;
    const table::Artifact before = a;
    const int op = static_cast<int>(rng() % 9);
    const std::string where = "table step " + std::to_string(step) + " op " + std::to_string(op);
    std::optional<ErrorCode> err;
    const auto random_stage = [&] { return static_cast<table::Stage>(rng() % 6); };
    err = code_of([&] {
      switch (op) {
        case 0: {
          BBox r = a.region;
          if (rng() % 2) r = {r.x0 - 2, r.y0 - 2, r.x1 + 2, r.y1 + 2};
          table::confirm_region(a, *slot.page, r);
          break;
        }
        case 1: table::propose_structure(a, *slot.page); break;
        case 2: table::confirm(a, table::Stage::StructureConfirmed); break;
        case 3: table::propose_content(a, *slot.page); break;
        case 4: table::confirm(a, table::Stage::ContentConfirmed); break;
        case 5: {
          const int r = a.grid ? static_cast<int>(rng() % static_cast<unsigned>(a.grid->rows() + 1)) : 0;
          const int c = a.grid ? static_cast<int>(rng() % static_cast<unsigned>(a.grid->cols() + 1)) : 0;
          table::edit_cell(a, r, c, "v" + std::to_string(rng() % 4));
          break;
        }
        case 6: {
          table::StructureEdit e;
          const int r = static_cast<int>(rng() % 4), c = static_cast<int>(rng() % 4);
          switch (rng() % 4) {
            case 0: e = table::DeleteRow{r}; break;
            case 1: e = table::DeleteCol{c}; break;
            case 2: e = table::Merge{{r, c, r + 1, c}}; break;
            default: e = table::Split{r, c};
          }
          table::edit_structure(a, e);
          break;
        }
        case 7: table::revert(a, random_stage()); break;
        default: table::confirm(a, random_stage());
      }
    });
    table_invariants(a, o, where);
    const int b = rank(before.stage), n = rank(a.stage);
    if (err) o.check(a == before, where + ": failed operation changed the artifact");
    o.check(n <= b + 1, where + ": stage skipped forward");
    if (n < b) {
      const bool reopen = op == 6 && a.stage == table::Stage::StructureProposed;
      o.check(op == 7 || reopen, where + ": stage moved back without a revert");
      if (op == 7) {
        o.check(a.region == before.region, where + ": revert lost the region");
        if (a.grid) o.check(a.grid == before.grid, where + ": revert changed the retained grid");
        if (a.cells) o.check(a.cells == before.cells, where + ": revert changed retained cells");
      }
    }
    if (before.stage == table::Stage::ContentConfirmed && op != 7)
      o.check(a == before, where + ": confirmed content changed");
    reached[table::stage_name(a.stage)]++;
  }

  // maps
  struct MSlot {
    const pdf::PageModel* page;
    map::Artifact a;
  };
  std::vector<MSlot> mslots;
  for (const auto& ps : pages)
    for (const auto& p : ps)
      for (const auto& a : map::detect(p, "doc")) mslots.push_back({&p, a});
  for (int step = 0; step < kStateSteps; ++step) {
    MSlot& slot = mslots[rng() % mslots.size()];
    map::Artifact& a = slot.a;
    const map::Artifact before = a;
    const int op = static_cast<int>(rng() % 10);
    const std::string where = "map step " + std::to_string(step) + " op " + std::to_string(op);
    const auto err = code_of([&] {
      switch (op) {
        case 0: map::confirm_region(a, *slot.page, a.region); break;
        case 1: map::propose_gridlines(a, *slot.page); break;
        case 2: {
          map::GridEdit e;
          const int idx = static_cast<int>(rng() % (a.gridlines.size() + 1));
          switch (rng() % 3) {
            case 0: e = map::DeleteLine{idx}; break;
            case 1: e = map::SetValue{idx, static_cast<double>(rng() % 60)}; break;
            default: e = map::AddLine{rng() % 2 ? map::Axis::Latitude : map::Axis::Longitude,
                                      static_cast<double>(rng() % 200), static_cast<double>(rng() % 60)};
          }
          map::edit_gridline(a, e);
          break;
        }
        case 3: map::fit(a); break;
        case 4: map::confirm_calibration(a); break;
        case 5: map::mark_point(a, {static_cast<double>(rng() % 300), static_cast<double>(rng() % 300)}); break;
        case 6:
          if (a.points.empty()) fail(ErrorCode::UnknownPoint, "none");
          map::attach_point(a, a.points[rng() % a.points.size()].point_id, "K" + std::to_string(rng() % 3));
          break;
        case 7:
          if (a.points.empty()) fail(ErrorCode::UnknownPoint, "none");
          map::delete_point(a, a.points[rng() % a.points.size()].point_id);
          break;
        default: map::revert(a, static_cast<map::Stage>(rng() % 5));
      }
    });
    map_invariants(a, o, where);
    const int b = rank(before.stage), n = rank(a.stage);
    if (err) o.check(a == before, where + ": failed operation changed the artifact");
    o.check(n <= b + 1, where + ": stage skipped forward");
    if (n < b) {
      const bool reopen = op == 2 && a.stage == map::Stage::GridProposed;
      o.check(op >= 8 || reopen, where + ": stage moved back without a revert");
      if (op >= 8) {
        o.check(a.region == before.region, where + ": revert lost the region");
        if (a.calibration) o.check(a.calibration == before.calibration, where + ": revert changed calibration");
        if (n >= rank(map::Stage::GridProposed))
          o.check(a.gridlines == before.gridlines, where + ": revert changed retained gridlines");
      }
    }
    // once marking, the calibration is frozen except through a revert
    if (before.stage == map::Stage::Marking && op < 8) {
      o.check(a.stage == map::Stage::Marking, where + ": left Marking without a revert");
      o.check(a.calibration == before.calibration && a.gridlines == before.gridlines,
              where + ": confirmed calibration changed");
    }
    reached["map " + map::stage_name(a.stage)]++;
  }
  o.check(reached["ContentConfirmed"] > 0 && reached["map Marking"] > 0, "random walk never reached the last stage");
  o.detail = std::to_string(2 * kStateSteps) + " steps over " + std::to_string(tslots.size()) + " tables and " +
             std::to_string(mslots.size()) + " maps; ContentConfirmed visits " +
             std::to_string(reached["ContentConfirmed"]) + ", Marking visits " + std::to_string(reached["map Marking"]);
  return o;
}

// --- locking ------------------------------------------------------------------------------------

store::Options fast_store(std::string path = ":memory:") {
  store::Options opts;
  opts.path = std::move(path);
  opts.pwhash_ops = 1;
  opts.pwhash_mem = 8192;
  return opts;
}

Outcome locking() {
  Outcome o;
  constexpr std::int64_t lease = 1000;
  ManualClock clock;
  store::Options opts = fast_store();
  opts.lease_ms = lease;
  store::Store st(opts, clock);
  const std::vector<std::string> users{"u0", "u1", "u2", "u3"};
  for (const auto& u : users) st.create_user(u, u, "pw");
  const std::string project = st.create_project("u0", "locks", "").project_id;
  std::vector<std::string> files;
  for (int i = 0; i < 2; ++i) {
    const auto rec = st.upload_file(project, "u0", "f.pdf", fixtures::generate(i).pdf);
    files.push_back(st.parse_file(rec.file_id).file_id);
  }

  std::mt19937_64 rng(4242);
  int evictions = 0, refusals = 0, writes = 0;
  for (int step = 0; step < kLockSteps; ++step) {
    const std::string& f = files[rng() % files.size()];
    const std::string& u = users[rng() % users.size()];
    const store::FileRecord rec = st.get_file(f);
    const std::int64_t t = clock.now_ms();
    const bool active = rec.lock && rec.lock->active(t);
    const bool mine = active && rec.lock->holder == u;
    const std::string where = "step " + std::to_string(step);
    switch (rng() % 6) {
      case 0: clock.advance(static_cast<std::int64_t>(rng() % 700)); break;
      case 1: {
        const bool idle = active && t - rec.lock->last_activity >= rec.lock->duration_ms / 2;
        const bool evict = active && !mine && rec.principal == u && idle;
        const bool expect_ok = !active || mine || evict;
        const auto err = code_of([&] { st.acquire_lock(f, u); });
        o.check(expect_ok == !err, where + ": acquire outcome");
        if (err) o.check(*err == ErrorCode::LockHeld, where + ": acquire error code");
        evictions += evict && !err;
        refusals += err.has_value();
        break;
      }
      case 2: {
        const auto err = code_of([&] { st.renew_lock(f, u); });
        o.check(mine == !err, where + ": renew outcome");
        break;
      }
      case 3: {
        const auto err = code_of([&] { st.release_lock(f, u); });
        o.check((!active || mine) == !err, where + ": release outcome");
        break;
      }
      case 4: {
        const bool release = rng() % 3 == 0;
        const auto err = code_of([&] { st.take_charge(f, u, release); });
        o.check((!rec.principal || rec.principal == u) == !err, where + ": take-charge outcome");
        break;
      }
      default: {
        // a mutation: only the active holder may write, and it counts as activity
        meta::MetaRecord m = *st.get_meta(f).record;
        m.year = 1900 + step % 100;
        const auto err = code_of([&] { st.save_meta(f, u, m); });
        o.check(mine == !err, where + ": write admitted without the lease");
        if (!err) {
          ++writes;
          o.check(st.get_file(f).lock->last_activity == t, where + ": write did not refresh activity");
        }
      }
    }
    // at most one user may hold an active lease on a file
    for (const auto& file : files) {
      int holders = 0;
      for (const auto& v : users) holders += st.holds_lock(file, v);
      o.check(holders <= 1, where + ": two active holders");
    }
  }

  // simultaneous contenders on one instant: exactly one wins
  int races_ok = 0;
  for (int race = 0; race < 20; ++race) {
    clock.advance(10 * lease);
    std::atomic<int> winners{0};
    std::vector<std::thread> ts;
    for (const auto& u : users)
      ts.emplace_back([&, u] {
        if (!code_of([&] { st.acquire_lock(files[0], u); })) ++winners;
      });
    for (auto& th : ts) th.join();
    o.check(winners == 1, "race " + std::to_string(race) + ": " + std::to_string(winners.load()) + " winners");
    races_ok += winners == 1;
  }
  o.check(evictions > 0 && refusals > 0 && writes > 0, "interleavings did not exercise eviction");
  o.detail = std::to_string(kLockSteps) + " steps: " + std::to_string(evictions) + " principal evictions, " +
             std::to_string(refusals) + " refusals, " + std::to_string(writes) + " writes; " +
             std::to_string(races_ok) + "/20 races with one winner";
  return o;
}

// --- round trips ---------------------------------------------------------------------------------

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces{"a", "Z", " ", ",", "\"", "\n", "\r\n", "é", "°", "′", "1.5", "\t",
                                               "&", "<", "'", "-", "="};
  std::string s;
  for (int n = static_cast<int>(rng() % 7); n > 0; --n) s += pieces[rng() % pieces.size()];
  return s;
}

// Pushes fixture documents through every stage so the store holds confirmed state.
void populate(store::Store& st, ManualClock& clock, const std::string& project) {
  for (int i = 0; i < 3; ++i) {
    const auto rec = st.upload_file(project, "ana", "doc" + std::to_string(i) + ".pdf", fixtures::generate(i).pdf);
    const std::string id = st.parse_file(rec.file_id).file_id;
    st.acquire_lock(id, "ana");
    meta::MetaRecord m = *st.get_meta(id).record;
    m.venue = "Venue " + std::to_string(i);
    st.save_meta(id, "ana", m);
    for (const auto& t : st.list_tables(id)) {
      clock.advance(7);
      st.confirm_table_region(id, "ana", t.table_id, std::nullopt);
      st.propose_structure(id, "ana", t.table_id);
      st.confirm_table(id, "ana", t.table_id, table::Stage::StructureConfirmed);
      st.propose_content(id, "ana", t.table_id);
      st.confirm_table(id, "ana", t.table_id, table::Stage::ContentConfirmed);
    }
    for (const auto& s : st.spans(id))
      if (s.label == "locality") st.link_span(id, "ana", s.span_id, "Locality");
    for (const auto& mp : st.list_maps(id)) {
      st.confirm_map_region(id, "ana", mp.map_id, std::nullopt);
      st.propose_gridlines(id, "ana", mp.map_id);
      st.fit_map(id, "ana", mp.map_id);
      st.confirm_calibration(id, "ana", mp.map_id);
      st.mark_point(id, "ana", mp.map_id, {40, 40});
    }
    st.integrate_document(id);
    st.release_lock(id, "ana");
  }
  st.integrate_project(project);
}

Outcome round_trips() {
  using namespace integrate;
  Outcome o;
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < kRoundTrips; ++trial) {
    const int cols = 1 + static_cast<int>(rng() % 8);
    Grid g;
    for (int r = static_cast<int>(rng() % 40); r > 0; --r) {
      std::vector<std::string> row;
      for (int c = 0; c < cols; ++c) row.push_back(random_text(rng));
      g.push_back(row);
    }
    o.check(parse_csv(to_csv(g)) == g, "csv trial " + std::to_string(trial));
    const auto sheets = parse_xlsx(to_xlsx({{"Dataset", g}}));
    o.check(sheets.size() == 1 && sheets[0].cells == g, "xlsx trial " + std::to_string(trial));
  }

  // store restart
  char tmpl[] = "/tmp/docmine-accept-XXXXXX";
  const std::filesystem::path dir = mkdtemp(tmpl);
  const std::string path = (dir / "store.db").string();
  std::string before, files_before;
  {
    ManualClock clock;
    store::Store st(fast_store(path), clock);
    st.create_user("ana", "Ana", "pw");
    const std::string project = st.create_project("ana", "restart", "").project_id;
    store::SettingsUpdate u;
    text::LabelConfig loc{"locality", {}, true, std::nullopt};
    loc.rules.push_back({std::nullopt, {"Palma Sola", "Tethys", "Veracruz"}, false});
    u.labels = std::vector<text::LabelConfig>{loc};
    u.header = HeaderConfig{{"Sample ID", "Age", "Depth", "Lithology", "Locality", "Latitude", "Longitude"},
                            "Sample ID"};
    st.update_settings(project, u);
    populate(st, clock, project);
    before = st.snapshot().dump();
    for (const auto& f : st.list_files(project)) files_before += st.file_bytes(f.file_id);
  }
  for (int reopen = 0; reopen < 2; ++reopen) {
    ManualClock clock;
    store::Store st(fast_store(path), clock);
    o.check(st.snapshot().dump() == before, "snapshot differs after restart " + std::to_string(reopen + 1));
    std::string files_after;
    for (const auto& f : st.list_files("1")) files_after += st.file_bytes(f.file_id);
    o.check(files_after == files_before, "stored PDF bytes differ after restart");
  }
  std::filesystem::remove_all(dir);
  o.detail = std::to_string(kRoundTrips) + " csv+xlsx grids; store snapshot of " + std::to_string(before.size()) +
             " bytes identical across 2 restarts";
  return o;
}

// --- golden end to end ------------------------------------------------------------------------------

struct Adapter {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit Adapter(json payload) {
    server.Post("/meta", [payload](const httplib::Request&, httplib::Response& res) {
      res.set_content(payload.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Adapter() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/meta"; }
};

Outcome golden() {
  using api::Request;
  using api::Response;
  Outcome o;
  const fixtures::Fixture fx = fixtures::generate(0);
  const std::string title = fx.sidecar["meta"]["title"];
  // two external sources: one agrees with the document, one has a wrong title
  Adapter agree(json{{"title", title}, {"year", 2020}});
  Adapter disagree(json{{"title", "An unrelated survey"}, {"year", 2020}});

  ManualClock clock;
  api::Config cfg;
  cfg.store_path = ":memory:";
  cfg.pwhash_ops = 1;
  cfg.pwhash_mem = 8192;
  cfg.adapters = {{"agree", agree.url(), 2, 5000}, {"disagree", disagree.url(), 1, 5000}};
  api::Service svc(cfg, clock);
  svc.store().create_user("ana", "Ana", "pw-ana");

  std::string token;
  auto call = [&](const std::string& method, const std::string& path, const json& body = nullptr) {
    Request r;
    r.method = method;
    r.path = path;
    if (!body.is_null()) r.body = body.dump();
    if (!token.empty()) r.headers["authorization"] = "Bearer " + token;
    const Response res = svc.handle(r);
    if (res.status >= 300) throw std::runtime_error(method + " " + path + " -> " + res.body);
    return res;
  };
  auto js = [&](const std::string& method, const std::string& path, const json& body = nullptr) {
    const Response r = call(method, path, body);
    return r.status == 204 ? json() : r.json();
  };

  token = js("POST", "/api/auth/login", {{"user_id", "ana"}, {"password", "pw-ana"}})["token"];
  const std::string project = js("POST", "/api/projects", {{"name", "Veracruz beaches"}})["project_id"];
  js("PATCH", "/api/projects/" + project + "/settings",
     {{"header",
       {{"fields", {"Sample ID", "Age", "Depth", "Lithology", "Locality", "Latitude", "Longitude"}},
        {"key_field", "Sample ID"}}},
      {"labels", json::array({{{"label", "locality"}, {"rules", {{{"gazetteer", {"Palma Sola", "Veracruz"}}}}}}})}});

  Request up;
  up.method = "POST";
  up.path = "/api/projects/" + project + "/files";
  up.headers["authorization"] = "Bearer " + token;
  up.files.push_back({"file", fx.name + ".pdf", "application/pdf", fx.pdf});
  const Response accepted = svc.handle(up);
  o.check(accepted.status == 202, "upload status " + std::to_string(accepted.status));
  const std::string id = accepted.json()["file_id"];
  svc.wait_idle();
  const std::string d = "/api/docs/" + id;

  // meta vote: three sources, the agreeing pair wins the title
  const json meta = js("GET", d + "/meta");
  o.check(meta["candidates"].size() == 3, "expected 3 metadata candidates");
  o.check(meta["record"]["title"] == title, "voted title " + meta["record"]["title"].dump());

  js("POST", "/api/files/" + id + "/lock");
  for (const json& t : js("GET", d + "/tables")) {
    const std::string p = d + "/tables/" + t["table_id"].get<std::string>();
    js("POST", p + "/confirm-region", json::object());
    js("POST", p + "/structure");
    js("POST", p + "/confirm", {{"stage", "StructureConfirmed"}});
    js("POST", p + "/content");
    js("POST", p + "/confirm", {{"stage", "ContentConfirmed"}});
  }
  for (const json& s : js("GET", d + "/spans"))
    if (s["text"] == "Palma Sola")
      js("POST", d + "/spans/" + s["span_id"].get<std::string>() + "/link", {{"field", "Locality"}});
  const std::string m = d + "/maps/" + js("GET", d + "/maps")[0]["map_id"].get<std::string>();
  js("POST", m + "/confirm-region", json::object());
  js("POST", m + "/gridlines");
  js("POST", m + "/fit");
  js("POST", m + "/confirm-calibration");
  const json pt = js("POST", m + "/points", {{"x", 90}, {"y", 70}});
  js("POST", m + "/points/" + pt["point_id"].get<std::string>() + "/attach", {{"key", "RP-02"}});
  js("POST", d + "/integrate");
  js("POST", "/api/projects/" + project + "/integrate", {{"rebuild", true}});
  Request ex;
  ex.method = "GET";
  ex.path = "/api/projects/" + project + "/export";
  ex.query["format"] = "csv";
  ex.headers["authorization"] = "Bearer " + token;
  const Response csv = svc.handle(ex);
  o.check(csv.status == 200, "export status " + std::to_string(csv.status));

  std::ifstream in(std::string(DOCMINE_GOLDEN_DIR) + "/fixture01.csv", std::ios::binary);
  std::stringstream want;
  want << in.rdbuf();
  o.check(in.good() || in.eof(), "golden file missing");
  o.check(csv.body == want.str(), "csv differs from golden:\n" + csv.body);
  o.detail = std::to_string(csv.body.size()) + " bytes, " +
             std::to_string(std::count(csv.body.begin(), csv.body.end(), '\n')) + " lines";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fixture corpus: detection, structure, content, runtime", fixture_corpus},
      {"map calibration: least squares and marked points", map_calibration},
      {"join oracle: 500 integration instances", join_oracle},
      {"voting oracle: 500 metadata cases", voting_oracle},
      {"state machine: randomized table and map sequences", state_machine},
      {"locking: virtual-clock interleavings and principal eviction", locking},
      {"round trips: csv/xlsx identity and store restart", round_trips},
      {"end to end: API pipeline matches golden csv", golden},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.problems.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  [" << o.detail << "; " << fmt(secs) << " s]\n";
    for (const auto& p : o.problems) std::cout << "      " << p << "\n";
    failed += !o.pass;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << "\n";
  return failed ? 1 : 0;
}
