#include "docmine/error.hpp"

namespace docmine {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedPdf: return "MalformedPdf";
    case ErrorCode::EncryptedPdf: return "EncryptedPdf";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::NotLocked: return "NotLocked";
    case ErrorCode::LockHeld: return "LockHeld";
    case ErrorCode::PrincipalHeld: return "PrincipalHeld";
    case ErrorCode::UnknownDocument: return "UnknownDocument";
    case ErrorCode::DuplicateChecksum: return "DuplicateChecksum";
    case ErrorCode::InvalidStage: return "InvalidStage";
    case ErrorCode::RegionOutOfPage: return "RegionOutOfPage";
    case ErrorCode::NoContent: return "NoContent";
    case ErrorCode::InvalidEdit: return "InvalidEdit";
    case ErrorCode::OcrClientUnavailable: return "OcrClientUnavailable";
    case ErrorCode::UnknownCell: return "UnknownCell";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::InvalidRule: return "InvalidRule";
    case ErrorCode::InvalidOffsets: return "InvalidOffsets";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownSpan: return "UnknownSpan";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::UnparseableLabel: return "UnparseableLabel";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::UnknownLine: return "UnknownLine";
    case ErrorCode::InsufficientLines: return "InsufficientLines";
    case ErrorCode::DegenerateAxis: return "DegenerateAxis";
    case ErrorCode::NotCalibrated: return "NotCalibrated";
    case ErrorCode::OutOfRegion: return "OutOfRegion";
    case ErrorCode::UnknownMap: return "UnknownMap";
    case ErrorCode::UnknownPoint: return "UnknownPoint";
    case ErrorCode::NoHeaderConfig: return "NoHeaderConfig";
    case ErrorCode::KeyFieldUnmapped: return "KeyFieldUnmapped";
    case ErrorCode::EmptyHeaderRow: return "EmptyHeaderRow";
    case ErrorCode::UnparseableFile: return "UnparseableFile";
    case ErrorCode::DuplicateField: return "DuplicateField";
    case ErrorCode::KeyRemoved: return "KeyRemoved";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::UnknownProject: return "UnknownProject";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::DuplicateUser: return "DuplicateUser";
    case ErrorCode::Unauthenticated: return "Unauthenticated";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Unauthenticated:
      return 401;
    case ErrorCode::NotLocked:
    case ErrorCode::PrincipalHeld:
      return 403;
    case ErrorCode::UnknownDocument:
    case ErrorCode::UnknownCell:
    case ErrorCode::UnknownTable:
    case ErrorCode::UnknownLabel:
    case ErrorCode::UnknownSpan:
    case ErrorCode::UnknownField:
    case ErrorCode::UnknownLine:
    case ErrorCode::UnknownMap:
    case ErrorCode::UnknownPoint:
    case ErrorCode::UnknownProject:
    case ErrorCode::UnknownUser:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::InvalidStage:
    case ErrorCode::LockHeld:
    case ErrorCode::DuplicateChecksum:
    case ErrorCode::DuplicateUser:
    case ErrorCode::HeaderMismatch:
      return 409;
    case ErrorCode::BadRequest:
      return 400;
    case ErrorCode::Internal:
      return 500;
    default:
      return 422;
  }
}

int code_number(ErrorCode code) noexcept { return static_cast<int>(code) + 1; }

nlohmann::json Error::to_json() const {
  nlohmann::json j{{"code", code_name(code_)}, {"message", what()}};
  if (!detail_.is_null()) j["detail"] = detail_;
  return j;
}

}  // namespace docmine
