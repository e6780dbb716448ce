#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace screwgen {

/// Machine-readable error categories. The CLI maps them to exit codes and
/// prints `code_name()` alongside the message.
enum class ErrorCode {
  kDomain = 10,
  kInvalidRefinement,
  kInvalidKnots,
  kInvalidGeometry,
  kUnsupported,
  kParse,
  kFit,
  kConvergence,
  kMatching,
  kBasisMismatch,
  kTopology,
  kStructure,
  kNonconvergence,
  kFoldingUnrepaired,
  kConstraint,
  kScaffold,
  kDatabase,
  kResolution,
  kConformity,
  kExtrusion,
  kConfig,
  kIo,
};

std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace screwgen
