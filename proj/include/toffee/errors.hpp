#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toffee {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor / solver errors.
struct DimMismatch : Error { using Error::Error; };
struct SymmetryViolation : Error { using Error::Error; };
struct SingularSolve : Error { using Error::Error; };
struct NonFiniteObjective : Error { using Error::Error; };

// Ingestion errors.
struct ParseError : Error {
    ParseError(std::size_t line_number, const std::string& detail)
        : Error("line " + std::to_string(line_number) + ": " + detail),
          line(line_number) {}
    std::size_t line;
};
struct EmptyInput : Error { using Error::Error; };
struct DegenerateTimespan : Error { using Error::Error; };

// Evaluation errors.
struct EmptySplit : Error { using Error::Error; };
struct Exhausted : Error { using Error::Error; };
struct DegenerateLabels : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

// Serialization errors.
struct IoError : Error { using Error::Error; };

}  // namespace toffee
