#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsinit {

enum class ErrorKind {
    DimensionMismatch,
    NotSymmetric,
    NotPositiveDefinite,
    EigenFailure,
    EmptyInput,
    NonFinite,
    IoError,
    BadMagic,
    DimMismatch,
    NonFiniteValue,
    NotEnoughClasses,
    EmptySource,
    MissingClass,
    BiasCoordinateNotOne,
    ZeroWeights,
    ZeroProduct,
    SolveFailure,
    NotOneHot,
    UnknownClass,
    NonContiguousIds,
    MissingStats,
    BadClass,
    ShapeMismatch,
    NonFiniteGradient,
    EmptyEvalSet,
    EmptyLog,
    MismatchedGrids,
    DimensionTooSmall,
    InvalidArgument,
    ConfigError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace lsinit
