#pragma once

#include <stdexcept>
#include <string>

namespace neuroglm {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape/extent mismatch between two objects that must agree.
class DimsError : public Error {
public:
    using Error::Error;
};

/// Voxel coordinate or linear index outside the addressable grid.
class IndexError : public Error {
public:
    using Error::Error;
};

/// A mask with zero included voxels was used as a feature source.
class EmptyMaskError : public Error {
public:
    using Error::Error;
};

/// Malformed on-disk binary data. Carries the byte offset of the problem.
class FormatError : public Error {
public:
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

/// Semantically invalid input (bad row, out-of-range value, overlap, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A required input file does not exist.
class MissingInputError : public Error {
public:
    explicit MissingInputError(const std::string& path)
        : Error("missing input: " + path), path(path) {}
    std::string path;
};

/// Not enough observations for the requested fit (nt <= rank).
class DofError : public Error {
public:
    using Error::Error;
};

/// Iterative solver hit its iteration cap. Carries the final gap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double final_gap)
        : Error(msg + " (final gap " + std::to_string(final_gap) + ")"),
          gap(final_gap) {}
    double gap;
};

/// Training data unusable (e.g. a single class present).
class TrainingError : public Error {
public:
    using Error::Error;
};

/// A class is too small to produce a stratified split.
class StratifyError : public Error {
public:
    using Error::Error;
};

/// AUC requested on a single-class sample.
class AucUndefined : public Error {
public:
    using Error::Error;
};

/// Degenerate paired sample (all differences zero, or too few nonzero).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Distributions that must share a split sequence do not.
class PairingError : public Error {
public:
    using Error::Error;
};

/// Division by an empty reference set (e.g. empty atlas threshold set).
class DivisionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace neuroglm
