#include "peatwht/error.hpp"

namespace peatwht {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OrderTooLarge: return "OrderTooLarge";
    case ErrorCode::LengthNotPowerOfTwo: return "LengthNotPowerOfTwo";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::CacheMissing: return "CacheMissing";
    case ErrorCode::ChannelCountNotPowerOfTwo: return "ChannelCountNotPowerOfTwo";
    case ErrorCode::InvalidDescriptor: return "InvalidDescriptor";
    case ErrorCode::BadWidth: return "BadWidth";
    case ErrorCode::BlockLargerThanImage: return "BlockLargerThanImage";
    case ErrorCode::DegenerateGrid: return "DegenerateGrid";
    case ErrorCode::OddDimensions: return "OddDimensions";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ArchMismatch: return "ArchMismatch";
    case ErrorCode::TensorShapeMismatch: return "TensorShapeMismatch";
    case ErrorCode::BadManifest: return "BadManifest";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::SizeTooLarge: return "SizeTooLarge";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace peatwht
