#include "lsinit/error.hpp"

namespace lsinit {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::NotEnoughClasses: return "NotEnoughClasses";
    case ErrorKind::EmptySource: return "EmptySource";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::BiasCoordinateNotOne: return "BiasCoordinateNotOne";
    case ErrorKind::ZeroWeights: return "ZeroWeights";
    case ErrorKind::ZeroProduct: return "ZeroProduct";
    case ErrorKind::SolveFailure: return "SolveFailure";
    case ErrorKind::NotOneHot: return "NotOneHot";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::NonContiguousIds: return "NonContiguousIds";
    case ErrorKind::MissingStats: return "MissingStats";
    case ErrorKind::BadClass: return "BadClass";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorKind::EmptyLog: return "EmptyLog";
    case ErrorKind::MismatchedGrids: return "MismatchedGrids";
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace lsinit
