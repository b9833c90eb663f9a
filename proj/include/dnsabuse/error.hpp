#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dnsabuse {

enum class ErrorCode {
  MalformedUrl,
  InvalidLabel,
  IoFailure,
  EmptyRuleSet,
  HostIsSuffix,
  MalformedFeed,
  AllRecordsMalformed,
  InvalidBrandDomain,
  EmptyCatalog,
  EmptyAllowlist,
  MismatchedSubject,
  NoObservations,
  NoRegistrationEvidence,
  ReferenceMissing,
  EmptyInput,
  StoreFailure,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dnsabuse
