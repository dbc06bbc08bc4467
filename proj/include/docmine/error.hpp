#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace docmine {

// Closed set of error codes. Every failure raised by a module maps to exactly
// one of these; the service layer translates them to transport statuses.
enum class ErrorCode {
  // pdf-ingest
  MalformedPdf,
  EncryptedPdf,
  EmptyRegion,
  // metadata
  NoCandidates,
  ValidationError,
  // locking / documents
  NotLocked,
  LockHeld,
  PrincipalHeld,
  UnknownDocument,
  DuplicateChecksum,
  // table-extract
  InvalidStage,
  RegionOutOfPage,
  NoContent,
  InvalidEdit,
  OcrClientUnavailable,
  UnknownCell,
  UnknownTable,
  // text-extract
  InvalidRule,
  InvalidOffsets,
  UnknownLabel,
  UnknownSpan,
  UnknownField,
  // map-extract
  UnparseableLabel,
  InvalidValue,
  UnknownLine,
  InsufficientLines,
  DegenerateAxis,
  NotCalibrated,
  OutOfRegion,
  UnknownMap,
  UnknownPoint,
  // integrate
  NoHeaderConfig,
  KeyFieldUnmapped,
  EmptyHeaderRow,
  UnparseableFile,
  DuplicateField,
  KeyRemoved,
  HeaderMismatch,
  // project-store / api
  UnknownProject,
  UnknownUser,
  DuplicateUser,
  Unauthenticated,
  NotFound,
  BadRequest,
  Internal,
};

std::string_view code_name(ErrorCode code) noexcept;

// Transport status class for a code (401, 403, 404, 409, 422, 400 or 500).
int http_status(ErrorCode code) noexcept;

// Stable integer used across the C boundary. Zero is reserved for success.
int code_number(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json detail = nullptr)
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              nlohmann::json detail = nullptr) {
  throw Error(code, message, std::move(detail));
}

}  // namespace docmine
