#pragma once

#include <stdexcept>
#include <string>

namespace gvse {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Dimension,
  Config,
  Contract,
  Degenerate,
  Numeric,
  Validation,
  Parse,
  Split,
  ArtifactMismatch,
  OracleInvalid,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define GVSE_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

GVSE_DEFINE_ERROR(DimensionError, Dimension)
GVSE_DEFINE_ERROR(ConfigError, Config)
GVSE_DEFINE_ERROR(ContractError, Contract)
GVSE_DEFINE_ERROR(DegenerateError, Degenerate)
GVSE_DEFINE_ERROR(NumericFault, Numeric)
GVSE_DEFINE_ERROR(ValidationError, Validation)
GVSE_DEFINE_ERROR(ParseError, Parse)
GVSE_DEFINE_ERROR(SplitError, Split)
GVSE_DEFINE_ERROR(ArtifactMismatch, ArtifactMismatch)
GVSE_DEFINE_ERROR(OracleInvalid, OracleInvalid)
GVSE_DEFINE_ERROR(IoError, Io)

#undef GVSE_DEFINE_ERROR

}  // namespace gvse
