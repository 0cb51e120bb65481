#pragma once

#include <stdexcept>
#include <string>

namespace sixv {

enum class ErrorCode {
  MalformedAddress = 1,
  MalformedPrefix,
  EmptySeedSet,
  EmptySet,
  EmptySubclass,
  EmptyCorpus,
  EmptyCandidates,
  ShapeMismatch,
  OddChannelCount,
  GraphConsumed,
  InsufficientData,
  TooFewPoints,
  GenerationStalled,
  BudgetExhausted,
  InvalidSpec,
  ZeroBaseline,
  ScannerUnavailable,
  ScannerParseError,
  InvalidArgument,
  IoError,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedAddress: return "MalformedAddress";
    case ErrorCode::MalformedPrefix: return "MalformedPrefix";
    case ErrorCode::EmptySeedSet: return "EmptySeedSet";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptySubclass: return "EmptySubclass";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OddChannelCount: return "OddChannelCount";
    case ErrorCode::GraphConsumed: return "GraphConsumed";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::GenerationStalled: return "GenerationStalled";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::ScannerUnavailable: return "ScannerUnavailable";
    case ErrorCode::ScannerParseError: return "ScannerParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace sixv
