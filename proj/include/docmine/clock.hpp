#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>

namespace docmine {

// Milliseconds since the Unix epoch, UTC.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() const override;
};

// Test clock advanced by hand.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 1717200000000) : now_(start_ms) {}
  std::int64_t now_ms() const override { return now_.load(); }
  void advance(std::int64_t ms) { now_ += ms; }
  void set(std::int64_t ms) { now_ = ms; }

 private:
  std::atomic<std::int64_t> now_;
};

// "2024-06-01T00:00:00.000Z"
std::string iso8601(std::int64_t ms);
// Inverse of iso8601; throws ValidationError.
std::int64_t parse_iso8601(std::string_view s);

}  // namespace docmine
