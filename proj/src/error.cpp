#include "dnsabuse/error.hpp"

namespace dnsabuse {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedUrl: return "MalformedUrl";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyRuleSet: return "EmptyRuleSet";
    case ErrorCode::HostIsSuffix: return "HostIsSuffix";
    case ErrorCode::MalformedFeed: return "MalformedFeed";
    case ErrorCode::AllRecordsMalformed: return "AllRecordsMalformed";
    case ErrorCode::InvalidBrandDomain: return "InvalidBrandDomain";
    case ErrorCode::EmptyCatalog: return "EmptyCatalog";
    case ErrorCode::EmptyAllowlist: return "EmptyAllowlist";
    case ErrorCode::MismatchedSubject: return "MismatchedSubject";
    case ErrorCode::NoObservations: return "NoObservations";
    case ErrorCode::NoRegistrationEvidence: return "NoRegistrationEvidence";
    case ErrorCode::ReferenceMissing: return "ReferenceMissing";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::StoreFailure: return "StoreFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace dnsabuse
