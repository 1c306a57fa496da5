#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fa {

enum class ErrorKind {
  InvalidParams,
  InvalidConfig,
  InvalidFraction,
  DecodeError,
  EmptyVideo,
  SplitLeakage,
  UnlabeledFrame,
  DuplicateFrameId,
  CropTooLarge,
  SingleClassDataset,
  ArtifactCorrupt,
  LengthMismatch,
  NoSolution,
  DimensionMismatch,
  ImageTooNarrow,
  EmptyInput,
  NoFluorescentRegion,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Base for every domain error raised by the toolkit. The kind is stable and
/// maps onto CLI exit codes and HTTP status codes.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace fa
