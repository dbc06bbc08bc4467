#include "docmine/pdf_writer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "docmine/error.hpp"
#include "docmine/text_util.hpp"
#include "pdf/fonts.hpp"
#include "pdf/objects.hpp"

namespace docmine::pdf {

namespace {

constexpr unsigned char kMinuteCode = 0x81;
constexpr unsigned char kSecondCode = 0x8D;
constexpr double kAscent = 0.8;
constexpr double kDescent = 0.2;

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

std::string num(double v) {
  v = round3(v);
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

unsigned char encode_cp(char32_t cp) {
  if (cp == 0x2032) return kMinuteCode;
  if (cp == 0x2033) return kSecondCode;
  const unsigned char c = detail::unicode_to_win_ansi(cp);
  return c ? c : static_cast<unsigned char>('?');
}

double code_width(unsigned char c) {
  if (c == kMinuteCode) return 250;
  if (c == kSecondCode) return 400;
  return detail::helvetica_width(c);
}

std::string encode_text(std::string_view utf8) {
  std::string out;
  for (char32_t cp : text::to_u32(utf8)) out.push_back(static_cast<char>(encode_cp(cp)));
  return out;
}

std::string literal(std::string_view bytes) {
  std::string out = "(";
  for (unsigned char c : bytes) {
    if (c == '(' || c == ')' || c == '\\') {
      out.push_back('\\');
      out.push_back(static_cast<char>(c));
    } else if (c < 0x20 || c >= 0x7F) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\%03o", c);
      out.append(buf);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  out.push_back(')');
  return out;
}

}  // namespace

PdfWriter::PdfWriter() : PdfWriter(Options{}) {}
PdfWriter::PdfWriter(Options opts) : opts_(opts) {}

PdfWriter::Page::Page(double w, double h, int index) {
  truth_.page_index = index;
  truth_.width = w;
  truth_.height = h;
}

PdfWriter::Page& PdfWriter::add_page(double width, double height) {
  pages_.push_back(Page(width, height, static_cast<int>(pages_.size())));
  return pages_.back();
}

double PdfWriter::text_width(std::string_view utf8, double size) {
  double w = 0.0;
  for (unsigned char c : encode_text(utf8)) w += code_width(c);
  return w / 1000.0 * round3(size);
}

TextRun PdfWriter::Page::text(double x, double baseline_y, double size,
                              std::string_view utf8) {
  x = round3(x);
  baseline_y = round3(baseline_y);
  size = round3(size);
  const std::string bytes = encode_text(utf8);
  content_ += "BT /F1 " + num(size) + " Tf 1 0 0 1 " + num(x) + " " +
              num(truth_.height - baseline_y) + " Tm " + literal(bytes) + " Tj ET\n";
  TextRun run;
  run.text = text::collapse_whitespace(utf8);
  run.font_size = size;
  run.bbox = BBox{x, baseline_y - kAscent * size, x + text_width(utf8, size),
                  baseline_y + kDescent * size};
  if (!run.text.empty()) truth_.text_runs.push_back(run);
  return run;
}

LineSegment PdfWriter::Page::line(Point a, Point b, double width) {
  a = {round3(a.x), round3(a.y)};
  b = {round3(b.x), round3(b.y)};
  content_ += num(width) + " w " + num(a.x) + " " + num(truth_.height - a.y) + " m " +
              num(b.x) + " " + num(truth_.height - b.y) + " l S\n";
  LineSegment s;
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::swap(a, b);
  s.start = a;
  s.end = b;
  s.thickness = width;
  s.orientation = classify(a, b);
  truth_.line_segments.push_back(s);
  return s;
}

BBox PdfWriter::Page::image(const BBox& where) {
  const BBox b{round3(where.x0), round3(where.y0), round3(where.x1), round3(where.y1)};
  content_ += "q " + num(b.width()) + " 0 0 " + num(b.height()) + " " + num(b.x0) + " " +
              num(truth_.height - b.y1) + " cm /Im1 Do Q\n";
  truth_.image_regions.push_back(b);
  return b;
}

std::string PdfWriter::finish() const {
  std::vector<std::string> objects;  // object i+1
  auto add = [&](std::string body) {
    objects.push_back(std::move(body));
    return static_cast<int>(objects.size());
  };
  auto stream = [&](std::string dict_extra, const std::string& data, bool compress) {
    std::string payload = compress ? detail::flate_encode(data) : data;
    std::string d = "<< /Length " + std::to_string(payload.size()) + dict_extra +
                    (compress ? " /Filter /FlateDecode" : "") + " >>\nstream\n";
    return d + payload + "\nendstream";
  };

  const int catalog = add("");
  const int pages_obj = add("");
  std::string widths;
  for (int c = 32; c <= 255; ++c)
    widths += num(code_width(static_cast<unsigned char>(c))) + (c % 16 == 15 ? "\n" : " ");
  const int font = add(
      "<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /FirstChar 32 /LastChar 255 "
      "/Widths [" + widths + "] /Encoding << /Type /Encoding /BaseEncoding "
      "/WinAnsiEncoding /Differences [129 /minute 141 /second] >> >>");
  const std::string pixels("\x60\xA0\xA0\x60", 4);
  const int image = add(stream(
      " /Type /XObject /Subtype /Image /Width 2 /Height 2 /ColorSpace /DeviceGray "
      "/BitsPerComponent 8", pixels, opts_.compress));

  std::string kids;
  for (const Page& p : pages_) {
    const int content = add(stream("", p.content_, opts_.compress));
    const int page = add("<< /Type /Page /Parent " + std::to_string(pages_obj) +
                         " 0 R /MediaBox [0 0 " + num(p.truth_.width) + " " +
                         num(p.truth_.height) + "] /Resources << /Font << /F1 " +
                         std::to_string(font) + " 0 R >> /XObject << /Im1 " +
                         std::to_string(image) + " 0 R >> >> /Contents " +
                         std::to_string(content) + " 0 R >>");
    kids += std::to_string(page) + " 0 R ";
  }
  objects[catalog - 1] = "<< /Type /Catalog /Pages " + std::to_string(pages_obj) + " 0 R >>";
  objects[pages_obj - 1] = "<< /Type /Pages /Kids [" + kids + "] /Count " +
                           std::to_string(pages_.size()) + " >>";
  int encrypt = 0;
  if (opts_.mark_encrypted)
    encrypt = add("<< /Filter /Standard /V 1 /R 2 /O (x) /U (x) /P -4 >>");

  std::string out = "%PDF-1.4\n%\xE2\xE3\xCF\xD3\n";
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    offsets.push_back(out.size());
    out += std::to_string(i + 1) + " 0 obj\n" + objects[i] + "\nendobj\n";
  }
  const std::size_t xref = out.size();
  out += "xref\n0 " + std::to_string(objects.size() + 1) + "\n0000000000 65535 f \n";
  for (std::size_t off : offsets) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%010zu 00000 n \n", off);
    out += buf;
  }
  out += "trailer\n<< /Size " + std::to_string(objects.size() + 1) + " /Root " +
         std::to_string(catalog) + " 0 R";
  if (encrypt) out += " /Encrypt " + std::to_string(encrypt) + " 0 R /ID [(a) (a)]";
  out += " >>\nstartxref\n" + std::to_string(xref) + "\n%%EOF\n";
  return out;
}

}  // namespace docmine::pdf
