#pragma once

#include <stdexcept>
#include <string>

namespace martsia {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// policy_lang
struct SyntaxError : Error {
  size_t position;
  SyntaxError(const std::string& what, size_t pos)
      : Error(what + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
};
struct InvalidInstanceId : Error { using Error::Error; };
struct UnknownAuthority : Error { using Error::Error; };
struct ThresholdTooLarge : Error { using Error::Error; };

// lsss
struct FieldTooSmall : Error { using Error::Error; };

// maabe
struct NamespaceMismatch : Error { using Error::Error; };
struct UnknownAttribute : Error { using Error::Error; };
struct MissingAuthorityPublic : Error { using Error::Error; };
struct MixedGid : Error { using Error::Error; };

// envelope
struct MalformedEnvelope : Error { using Error::Error; };
struct UnknownSliceId : Error { using Error::Error; };
struct IntegrityError : Error { using Error::Error; };

// cas
struct NotFound : Error { using Error::Error; };
struct IntegrityFault : Error { using Error::Error; };

// authority_net
struct NetworkError : Error { using Error::Error; };
struct ProtocolError : Error {
  std::string code;
  ProtocolError(std::string code_, const std::string& detail)
      : Error(code_ + ": " + detail), code(std::move(code_)) {}
};

// ledger
struct BadSignature : Error { using Error::Error; };
struct InvalidTransition : Error { using Error::Error; };
struct NotACertifier : Error { using Error::Error; };
struct NoRegisteredKey : Error { using Error::Error; };

}  // namespace martsia
