#pragma once

#include <stdexcept>
#include <string>

namespace tempora {

// Contract violations surface as exceptions carrying a stable code; user
// input errors (parsing, validation) are reported as diagnostics instead,
// see spec_lang.hpp.
enum class Errc {
  UnboundVariable,
  PoolExhausted,
  NegativeEpsilon,
  ArityMismatch,
  InvalidConfiguration,
  InconsistentCircleConfiguration,
  NotBalanced,
  OffsetExceedsDmax,
  SizeBoundExceeded,
  BoundOverflow,
  ReplayMismatch,
  NonTerminatingExpansion,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::UnboundVariable: return "UnboundVariable";
    case Errc::PoolExhausted: return "PoolExhausted";
    case Errc::NegativeEpsilon: return "NegativeEpsilon";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::InvalidConfiguration: return "InvalidConfiguration";
    case Errc::InconsistentCircleConfiguration: return "InconsistentCircleConfiguration";
    case Errc::NotBalanced: return "NotBalanced";
    case Errc::OffsetExceedsDmax: return "OffsetExceedsDmax";
    case Errc::SizeBoundExceeded: return "SizeBoundExceeded";
    case Errc::BoundOverflow: return "BoundOverflow";
    case Errc::ReplayMismatch: return "ReplayMismatch";
    case Errc::NonTerminatingExpansion: return "NonTerminatingExpansion";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace tempora
