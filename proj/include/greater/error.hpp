#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace greater {

// Every failure the library raises deliberately carries one of these codes so
// callers (and the CLI exit-code mapping) can tell input/validation problems
// apart from runtime/environment ones without parsing message strings.
enum class Errc {
  // validation / bad input
  EmptyText,
  IdOutOfRange,
  WidthMismatch,
  LengthMismatch,
  PositionOutOfRange,
  EmptyPositionSet,
  EmptyBatch,
  EmptyTraceList,
  LambdaOutOfRange,
  InvalidBudget,
  InvalidParameter,
  DegenerateInterval,
  SingleClassDataset,
  MalformedRow,
  UnknownLabel,
  ConfigError,
  // attack preconditions
  NotDetectedAsMgt,
  // runtime / environment
  DegenerateDraw,
  ScoreOutOfRange,
  ProtocolViolation,
  Transport,
  IoError,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::EmptyText: return "EmptyText";
    case Errc::IdOutOfRange: return "IdOutOfRange";
    case Errc::WidthMismatch: return "WidthMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::PositionOutOfRange: return "PositionOutOfRange";
    case Errc::EmptyPositionSet: return "EmptyPositionSet";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::EmptyTraceList: return "EmptyTraceList";
    case Errc::LambdaOutOfRange: return "LambdaOutOfRange";
    case Errc::InvalidBudget: return "InvalidBudget";
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::DegenerateInterval: return "DegenerateInterval";
    case Errc::SingleClassDataset: return "SingleClassDataset";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NotDetectedAsMgt: return "NotDetectedAsMgt";
    case Errc::DegenerateDraw: return "DegenerateDraw";
    case Errc::ScoreOutOfRange: return "ScoreOutOfRange";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::Transport: return "Transport";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  // True for errors caused by bad inputs/configuration (CLI exit code 1),
  // false for runtime/environment failures (CLI exit code 2).
  bool is_validation() const noexcept {
    switch (code_) {
      case Errc::DegenerateDraw:
      case Errc::ScoreOutOfRange:
      case Errc::ProtocolViolation:
      case Errc::Transport:
      case Errc::IoError:
        return false;
      default:
        return true;
    }
  }

 private:
  Errc code_;
};

}  // namespace greater
