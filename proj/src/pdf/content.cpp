#include "pdf/content.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <set>

#include "docmine/error.hpp"
#include "docmine/text_util.hpp"
#include "pdf/fonts.hpp"

namespace docmine::pdf::detail {

namespace {

constexpr double kThinFillMax = 2.5;   // filled rectangles thinner than this are rules
constexpr double kTjSpaceEm = 0.2;     // TJ gap that reads as a word space
constexpr int kMaxFormDepth = 12;

struct Matrix {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  static Matrix translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }

  // this × m  (apply this first, then m)
  Matrix operator*(const Matrix& m) const {
    return {a * m.a + b * m.c,         a * m.b + b * m.d,
            c * m.a + d * m.c,         c * m.b + d * m.d,
            e * m.a + f * m.c + m.e,   e * m.b + f * m.d + m.f};
  }
  Point apply(double x, double y) const { return {a * x + c * y + e, b * x + d * y + f}; }
};

Matrix matrix_from(const std::vector<Object>& ops, std::size_t first) {
  return {ops[first].number(), ops[first + 1].number(), ops[first + 2].number(),
          ops[first + 3].number(), ops[first + 4].number(), ops[first + 5].number()};
}

struct GraphicsState {
  Matrix ctm;
  double line_width = 1.0;
  // text state
  std::shared_ptr<const Font> font;
  double font_size = 0.0;
  double char_spacing = 0.0;
  double word_spacing = 0.0;
  double hscale = 1.0;
  double leading = 0.0;
  double rise = 0.0;
};

struct Subpath {
  std::vector<Point> pts;  // device space
  bool closed = false;
};

class Interpreter {
 public:
  Interpreter(Document& doc, const double* box) : doc_(doc) {
    box_[0] = box[0];
    box_[1] = box[1];
    box_[2] = box[2];
    box_[3] = box[3];
    page_.width = box_[2] - box_[0];
    page_.height = box_[3] - box_[1];
  }

  void run(const std::string& content, const Dict* resources, int depth);
  PageModel finish(int index);

 private:
  void op(const std::string& kw, std::vector<Object>& ops, const Dict* resources,
          int depth, Lexer& lx);
  void show(const std::string& bytes);
  void show_array(const Array& arr);
  void emit_text();
  void stroke_path();
  void fill_path();
  void add_segment(Point a, Point b, double thickness);
  void add_image(const Matrix& m);
  void do_xobject(const std::string& name, const Dict* resources, int depth);
  void inline_image(Lexer& lx);
  const Font* font_for(const std::string& name, const Dict* resources);

  Point to_page(Point p) const { return {p.x - box_[0], box_[3] - p.y}; }

  Document& doc_;
  double box_[4];
  PageModel page_;
  GraphicsState gs_;
  std::vector<GraphicsState> stack_;
  Matrix tm_, tlm_;
  std::vector<Subpath> path_;
  std::map<const Dict*, std::shared_ptr<const Font>> font_cache_;
  std::set<const Dict*> active_forms_;

  // current run being accumulated by one show operator
  std::u32string run_text_;
  double run_advance_ = 0.0;
  Matrix run_start_;
};

double device_scale(const Matrix& m) { return std::sqrt(std::abs(m.a * m.d - m.b * m.c)); }

const Font* Interpreter::font_for(const std::string& name, const Dict* resources) {
  const Dict* fonts = doc_.at(resources, "Font").dict();
  const Dict* fd = doc_.at(fonts, name).dict();
  auto it = font_cache_.find(fd);
  if (it == font_cache_.end())
    it = font_cache_.emplace(fd, std::make_shared<const Font>(Font::load(doc_, fd))).first;
  gs_.font = it->second;
  return it->second.get();
}

void Interpreter::show(const std::string& bytes) {
  if (!gs_.font) gs_.font = std::make_shared<const Font>(Font::load(doc_, nullptr));
  const Font& font = *gs_.font;
  for (std::uint32_t code : font.codes(bytes)) {
    std::u32string u = font.unicode(code);
    for (char32_t cp : u) {
      if (cp == 0xFB01) {
        run_text_ += U"fi";
      } else if (cp == 0xFB02) {
        run_text_ += U"fl";
      } else if (cp >= 0x20 || cp == '\t') {
        run_text_.push_back(cp);
      }
    }
    double tx = font.width(code) / 1000.0 * gs_.font_size + gs_.char_spacing;
    if (font.is_single_byte() && code == 32) tx += gs_.word_spacing;
    run_advance_ += tx * gs_.hscale;
  }
}

void Interpreter::show_array(const Array& arr) {
  for (const Object& item : arr) {
    if (const std::string* s = item.string()) {
      show(*s);
    } else if (item.is_number()) {
      const double adj = item.number() / 1000.0;
      run_advance_ -= adj * gs_.font_size * gs_.hscale;
      if (-adj >= kTjSpaceEm && !run_text_.empty() && run_text_.back() != U' ')
        run_text_.push_back(U' ');
    }
  }
}

void Interpreter::emit_text() {
  const Font* font = gs_.font.get();
  const double ascent = font ? font->ascent() : 0.8;
  const double descent = font ? font->descent() : -0.2;
  const Matrix m = run_start_ * gs_.ctm;
  const double y_lo = gs_.rise + descent * gs_.font_size;
  const double y_hi = gs_.rise + ascent * gs_.font_size;
  const Point corners[4] = {m.apply(0, y_lo), m.apply(run_advance_, y_lo),
                            m.apply(0, y_hi), m.apply(run_advance_, y_hi)};
  // advance the text matrix regardless of visibility
  tm_ = Matrix::translate(run_advance_, 0) * tm_;

  const std::string text = text::collapse_whitespace(text::to_utf8(run_text_));
  run_text_.clear();
  run_advance_ = 0.0;
  if (text.empty()) return;

  BBox b{1e300, 1e300, -1e300, -1e300};
  for (const Point& c : corners) {
    const Point p = to_page(c);
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  if (!b.intersects(page_.bounds()) && !page_.bounds().contains(b)) return;
  TextRun run;
  run.text = text;
  run.bbox = b.clamped(page_.width, page_.height);
  run.font_size = gs_.font_size * std::hypot(m.c, m.d);
  if (run.font_size <= 0) run.font_size = std::abs(gs_.font_size);
  if (run.font_size <= 0) return;
  page_.text_runs.push_back(std::move(run));
}

void Interpreter::add_segment(Point a, Point b, double thickness) {
  Point pa = to_page(a);
  Point pb = to_page(b);
  if (std::hypot(pb.x - pa.x, pb.y - pa.y) < 1e-6) return;
  auto clamp = [&](Point p) {
    return Point{std::clamp(p.x, 0.0, page_.width), std::clamp(p.y, 0.0, page_.height)};
  };
  pa = clamp(pa);
  pb = clamp(pb);
  if (std::hypot(pb.x - pa.x, pb.y - pa.y) < 1e-6) return;
  LineSegment s;
  // Canonical direction: left-to-right, then top-to-bottom.
  if (pb.x < pa.x || (pb.x == pa.x && pb.y < pa.y)) std::swap(pa, pb);
  s.start = pa;
  s.end = pb;
  s.thickness = thickness;
  s.orientation = classify(pa, pb);
  page_.line_segments.push_back(s);
}

void Interpreter::stroke_path() {
  const double thickness = gs_.line_width * device_scale(gs_.ctm);
  for (const Subpath& sp : path_) {
    for (std::size_t i = 1; i < sp.pts.size(); ++i) add_segment(sp.pts[i - 1], sp.pts[i], thickness);
    if (sp.closed && sp.pts.size() > 2) add_segment(sp.pts.back(), sp.pts.front(), thickness);
  }
  path_.clear();
}

void Interpreter::fill_path() {
  for (const Subpath& sp : path_) {
    std::vector<Point> pts = sp.pts;
    if (pts.size() == 5 && std::abs(pts[4].x - pts[0].x) < 1e-6 &&
        std::abs(pts[4].y - pts[0].y) < 1e-6)
      pts.pop_back();
    if (pts.size() != 4) continue;
    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
    bool axis_aligned = true;
    for (std::size_t i = 0; i < 4; ++i) {
      const Point& p = pts[i];
      const Point& q = pts[(i + 1) % 4];
      if (std::abs(p.x - q.x) > 1e-6 && std::abs(p.y - q.y) > 1e-6) axis_aligned = false;
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    if (!axis_aligned) continue;
    const double w = x1 - x0;
    const double h = y1 - y0;
    if (std::min(w, h) > kThinFillMax || std::max(w, h) <= kThinFillMax) continue;
    if (w >= h) {
      const double y = (y0 + y1) / 2;
      add_segment({x0, y}, {x1, y}, h);
    } else {
      const double x = (x0 + x1) / 2;
      add_segment({x, y0}, {x, y1}, w);
    }
  }
  path_.clear();
}

void Interpreter::add_image(const Matrix& m) {
  BBox b{1e300, 1e300, -1e300, -1e300};
  for (auto [x, y] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}) {
    const Point p = to_page(m.apply(x, y));
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  if (!b.intersects(page_.bounds())) return;
  page_.image_regions.push_back(b.clamped(page_.width, page_.height));
}

void Interpreter::do_xobject(const std::string& name, const Dict* resources, int depth) {
  const Dict* xobjects = doc_.at(resources, "XObject").dict();
  const Object* ref = dict_get(xobjects, name);
  if (!ref) return;
  const Object& obj = doc_.resolve(*ref);
  const Dict* d = obj.dict();
  if (!d) return;
  const std::string* subtype = doc_.at(d, "Subtype").name();
  if (!subtype) return;
  if (*subtype == "Image") {
    add_image(gs_.ctm);
  } else if (*subtype == "Form" && depth < kMaxFormDepth && !active_forms_.contains(d)) {
    active_forms_.insert(d);
    stack_.push_back(gs_);
    if (const Array* mat = doc_.at(d, "Matrix").array(); mat && mat->size() == 6) {
      std::vector<Object> ops(mat->begin(), mat->end());
      gs_.ctm = matrix_from(ops, 0) * gs_.ctm;
    }
    const Dict* form_res = doc_.at(d, "Resources").dict();
    run(doc_.stream_data(obj), form_res ? form_res : resources, depth + 1);
    gs_ = stack_.back();
    stack_.pop_back();
    active_forms_.erase(d);
  }
}

void Interpreter::inline_image(Lexer& lx) {
  // Dictionary entries up to ID, then raw data up to EI.
  while (!lx.at_end()) {
    Object o = lx.parse(false, true);
    if (o.is_keyword("ID")) break;
  }
  const std::string_view data = lx.data();
  std::size_t p = lx.pos() + 1;
  while (p + 1 < data.size()) {
    if (data[p] == 'E' && data[p + 1] == 'I' && is_pdf_whitespace(data[p - 1]) &&
        (p + 2 >= data.size() || is_pdf_whitespace(data[p + 2]) ||
         is_pdf_delimiter(data[p + 2]))) {
      lx.seek(p + 2);
      add_image(gs_.ctm);
      return;
    }
    ++p;
  }
  lx.seek(data.size());
}

void Interpreter::op(const std::string& kw, std::vector<Object>& ops,
                     const Dict* resources, int depth, Lexer& lx) {
  auto n = [&](std::size_t i) { return ops[i].number(); };
  const std::size_t argc = ops.size();
  auto need = [&](std::size_t k) { return argc >= k; };
  // Operands are taken from the end so that stray extra operands are ignored.
  auto tail = [&](std::size_t k) { return argc - k; };

  if (kw == "q") {
    stack_.push_back(gs_);
  } else if (kw == "Q") {
    if (!stack_.empty()) {
      gs_ = stack_.back();
      stack_.pop_back();
    }
  } else if (kw == "cm" && need(6)) {
    gs_.ctm = matrix_from(ops, tail(6)) * gs_.ctm;
  } else if (kw == "w" && need(1)) {
    gs_.line_width = n(tail(1));
  } else if (kw == "m" && need(2)) {
    path_.push_back(Subpath{{gs_.ctm.apply(n(tail(2)), n(tail(1)))}, false});
  } else if (kw == "l" && need(2)) {
    if (path_.empty()) path_.push_back({});
    path_.back().pts.push_back(gs_.ctm.apply(n(tail(2)), n(tail(1))));
  } else if ((kw == "c" && need(6)) || ((kw == "v" || kw == "y") && need(4))) {
    // Curves contribute their chord.
    if (path_.empty()) path_.push_back({});
    path_.back().pts.push_back(gs_.ctm.apply(n(tail(2)), n(tail(1))));
  } else if (kw == "h") {
    if (!path_.empty()) path_.back().closed = true;
  } else if (kw == "re" && need(4)) {
    const double x = n(tail(4)), y = n(tail(3)), w = n(tail(2)), h = n(tail(1));
    path_.push_back(Subpath{{gs_.ctm.apply(x, y), gs_.ctm.apply(x + w, y),
                             gs_.ctm.apply(x + w, y + h), gs_.ctm.apply(x, y + h)},
                            true});
  } else if (kw == "S") {
    stroke_path();
  } else if (kw == "s") {
    if (!path_.empty()) path_.back().closed = true;
    stroke_path();
  } else if (kw == "f" || kw == "F" || kw == "f*") {
    fill_path();
  } else if (kw == "B" || kw == "B*" || kw == "b" || kw == "b*") {
    if ((kw == "b" || kw == "b*") && !path_.empty()) path_.back().closed = true;
    stroke_path();
  } else if (kw == "n") {
    path_.clear();
  } else if (kw == "BT") {
    tm_ = Matrix{};
    tlm_ = Matrix{};
  } else if (kw == "Tf" && need(2)) {
    if (const std::string* name = ops[tail(2)].name()) font_for(*name, resources);
    gs_.font_size = n(tail(1));
  } else if (kw == "Tc" && need(1)) {
    gs_.char_spacing = n(tail(1));
  } else if (kw == "Tw" && need(1)) {
    gs_.word_spacing = n(tail(1));
  } else if (kw == "Tz" && need(1)) {
    gs_.hscale = n(tail(1)) / 100.0;
  } else if (kw == "TL" && need(1)) {
    gs_.leading = n(tail(1));
  } else if (kw == "Ts" && need(1)) {
    gs_.rise = n(tail(1));
  } else if ((kw == "Td" || kw == "TD") && need(2)) {
    if (kw == "TD") gs_.leading = -n(tail(1));
    tlm_ = Matrix::translate(n(tail(2)), n(tail(1))) * tlm_;
    tm_ = tlm_;
  } else if (kw == "Tm" && need(6)) {
    tlm_ = matrix_from(ops, tail(6));
    tm_ = tlm_;
  } else if (kw == "T*") {
    tlm_ = Matrix::translate(0, -gs_.leading) * tlm_;
    tm_ = tlm_;
  } else if (kw == "Tj" && need(1)) {
    if (const std::string* s = ops[tail(1)].string()) {
      run_start_ = tm_;
      show(*s);
      emit_text();
    }
  } else if (kw == "TJ" && need(1)) {
    if (const Array* a = ops[tail(1)].array()) {
      run_start_ = tm_;
      show_array(*a);
      emit_text();
    }
  } else if (kw == "'" && need(1)) {
    tlm_ = Matrix::translate(0, -gs_.leading) * tlm_;
    tm_ = tlm_;
    if (const std::string* s = ops[tail(1)].string()) {
      run_start_ = tm_;
      show(*s);
      emit_text();
    }
  } else if (kw == "\"" && need(3)) {
    gs_.word_spacing = n(tail(3));
    gs_.char_spacing = n(tail(2));
    tlm_ = Matrix::translate(0, -gs_.leading) * tlm_;
    tm_ = tlm_;
    if (const std::string* s = ops[tail(1)].string()) {
      run_start_ = tm_;
      show(*s);
      emit_text();
    }
  } else if (kw == "Do" && need(1)) {
    if (const std::string* name = ops[tail(1)].name()) do_xobject(*name, resources, depth);
  } else if (kw == "BI") {
    inline_image(lx);
  }
}

void Interpreter::run(const std::string& content, const Dict* resources, int depth) {
  Lexer lx(content);
  std::vector<Object> ops;
  try {
    while (!lx.at_end()) {
      Object o = lx.parse(false, true);
      if (const Keyword* kw = o.keyword()) {
        op(kw->value, ops, resources, depth, lx);
        ops.clear();
      } else {
        ops.push_back(std::move(o));
      }
    }
  } catch (const Error& e) {
    // Content syntax errors end the stream; geometry gathered so far stays.
    if (e.code() != ErrorCode::MalformedPdf) throw;
  }
}

PageModel Interpreter::finish(int index) {
  page_.page_index = index;
  if (page_.text_runs.empty() && !page_.image_regions.empty()) {
    double covered = 0.0;
    for (const BBox& b : page_.image_regions) covered += b.area();
    const double area = page_.width * page_.height;
    page_.image_only = area > 0 && covered >= 0.5 * area;
  }
  return std::move(page_);
}

}  // namespace

PageModel interpret_page(Document& doc, const PageEntry& entry, int index) {
  Interpreter interp(doc, entry.box);
  const Dict* resources = doc.resolve(entry.resources).dict();
  std::string content;
  if (const Object* contents = dict_get(entry.dict, "Contents")) {
    const Object& c = doc.resolve(*contents);
    if (c.stream()) {
      content = doc.stream_data(c);
    } else if (const Array* parts = c.array()) {
      for (const Object& part : *parts) {
        const Object& p = doc.resolve(part);
        if (!p.stream()) fail(ErrorCode::MalformedPdf, "malformed PDF: missing content stream");
        content += doc.stream_data(p);
        content.push_back('\n');
      }
    } else {
      fail(ErrorCode::MalformedPdf, "malformed PDF: missing content stream");
    }
  }
  interp.run(content, resources, 0);
  return interp.finish(index);
}

}  // namespace docmine::pdf::detail
