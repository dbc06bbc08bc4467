#include "integrate/zip.hpp"

#include <cstdint>
#include <cstring>

#include <zlib.h>

#include "docmine/error.hpp"

namespace docmine::zip {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::string& s, std::uint16_t v) {
  s += static_cast<char>(v & 0xff);
  s += static_cast<char>(v >> 8);
}
void put32(std::string& s, std::uint32_t v) {
  put16(s, static_cast<std::uint16_t>(v & 0xffff));
  put16(s, static_cast<std::uint16_t>(v >> 16));
}

[[noreturn]] void bad(const std::string& what) {
  fail(ErrorCode::UnparseableFile, "not a readable zip package: " + what);
}

std::uint32_t get(std::string_view s, std::size_t at, int bytes) {
  if (at + static_cast<std::size_t>(bytes) > s.size()) bad("truncated");
  std::uint32_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + static_cast<std::size_t>(i)]);
  return v;
}

std::string deflate_raw(std::string_view in) {
  z_stream z{};
  if (deflateInit2(&z, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    fail(ErrorCode::Internal, "deflateInit2 failed");
  std::string out(deflateBound(&z, static_cast<uLong>(in.size())), '\0');
  z.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  z.avail_in = static_cast<uInt>(in.size());
  z.next_out = reinterpret_cast<Bytef*>(out.data());
  z.avail_out = static_cast<uInt>(out.size());
  const int rc = ::deflate(&z, Z_FINISH);
  out.resize(z.total_out);
  deflateEnd(&z);
  if (rc != Z_STREAM_END) fail(ErrorCode::Internal, "deflate failed");
  return out;
}

std::string inflate_raw(std::string_view in, std::size_t expected) {
  z_stream z{};
  if (inflateInit2(&z, -15) != Z_OK) bad("inflateInit2");
  std::string out(expected, '\0');
  z.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  z.avail_in = static_cast<uInt>(in.size());
  z.next_out = reinterpret_cast<Bytef*>(out.data());
  z.avail_out = static_cast<uInt>(out.size());
  const int rc = ::inflate(&z, Z_FINISH);
  const auto produced = z.total_out;
  inflateEnd(&z);
  if (rc != Z_STREAM_END || produced != expected) bad("corrupt deflate stream");
  return out;
}

}  // namespace

std::string write(const std::vector<Entry>& entries) {
  std::string out, central;
  for (const Entry& e : entries) {
    const auto crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(e.data.data()), static_cast<uInt>(e.data.size())));
    const std::string packed = deflate_raw(e.data);
    const auto offset = static_cast<std::uint32_t>(out.size());
    auto header = [&](std::string& s, bool is_central) {
      put32(s, is_central ? kCentralSig : kLocalSig);
      if (is_central) put16(s, 20);  // version made by
      put16(s, 20);                  // version needed
      put16(s, 0x0800);              // UTF-8 names
      put16(s, 8);                   // deflate
      put16(s, 0);                   // time
      put16(s, kDosDate);
      put32(s, crc);
      put32(s, static_cast<std::uint32_t>(packed.size()));
      put32(s, static_cast<std::uint32_t>(e.data.size()));
      put16(s, static_cast<std::uint16_t>(e.name.size()));
      put16(s, 0);  // extra
      if (is_central) {
        put16(s, 0);  // comment
        put16(s, 0);  // disk
        put16(s, 0);  // internal attrs
        put32(s, 0);  // external attrs
        put32(s, offset);
      }
      s += e.name;
    };
    header(out, false);
    out += packed;
    header(central, true);
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<Entry> read(std::string_view s) {
  if (s.size() < 22) bad("too short");
  std::size_t end = std::string_view::npos;
  for (std::size_t i = s.size() - 22 + 1; i-- > 0 && s.size() - i <= 22 + 65535;)
    if (get(s, i, 4) == kEndSig) {
      end = i;
      break;
    }
  if (end == std::string_view::npos) bad("no end of central directory");
  const std::uint32_t count = get(s, end + 10, 2);
  std::size_t at = get(s, end + 16, 4);
  std::vector<Entry> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    if (get(s, at, 4) != kCentralSig) bad("central directory");
    const std::uint32_t flags = get(s, at + 8, 2);
    const std::uint32_t method = get(s, at + 10, 2);
    const std::uint32_t crc = get(s, at + 16, 4);
    const std::uint32_t csize = get(s, at + 20, 4);
    const std::uint32_t usize = get(s, at + 24, 4);
    const std::uint32_t nlen = get(s, at + 28, 2);
    const std::uint32_t xlen = get(s, at + 30, 2);
    const std::uint32_t clen = get(s, at + 32, 2);
    const std::uint32_t local = get(s, at + 42, 4);
    if (flags & 1) bad("encrypted entry");
    if (at + 46 + nlen > s.size()) bad("truncated name");
    Entry e;
    e.name = std::string(s.substr(at + 46, nlen));
    if (get(s, local, 4) != kLocalSig) bad("local header");
    const std::size_t data = local + 30 + get(s, local + 26, 2) + get(s, local + 28, 2);
    if (data + csize > s.size()) bad("truncated data");
    const std::string_view raw = s.substr(data, csize);
    if (method == 0) e.data = std::string(raw);
    else if (method == 8) e.data = inflate_raw(raw, usize);
    else bad("compression method " + std::to_string(method));
    const auto got = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(e.data.data()), static_cast<uInt>(e.data.size())));
    if (got != crc) bad("crc mismatch in " + e.name);
    out.push_back(std::move(e));
    at += 46 + nlen + xlen + clen;
  }
  return out;
}

}  // namespace docmine::zip
