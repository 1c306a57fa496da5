#include "fa/errors.hpp"

namespace fa {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::EmptyVideo: return "EmptyVideo";
    case ErrorKind::SplitLeakage: return "SplitLeakage";
    case ErrorKind::UnlabeledFrame: return "UnlabeledFrame";
    case ErrorKind::DuplicateFrameId: return "DuplicateFrameId";
    case ErrorKind::CropTooLarge: return "CropTooLarge";
    case ErrorKind::SingleClassDataset: return "SingleClassDataset";
    case ErrorKind::ArtifactCorrupt: return "ArtifactCorrupt";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NoSolution: return "NoSolution";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ImageTooNarrow: return "ImageTooNarrow";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NoFluorescentRegion: return "NoFluorescentRegion";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fa
