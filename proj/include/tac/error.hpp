#pragma once

#include <stdexcept>
#include <string>

namespace tac {

enum class ErrorKind {
    Normalization,
    Dimension,
    Parameter,
    Format,
    Data,
    Selection,
    TrainingDiverged,
};

/// Base of every error raised by the engine. `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define TAC_DEFINE_ERROR(Name, Kind)                                          \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    }

TAC_DEFINE_ERROR(NormalizationError, Normalization);
TAC_DEFINE_ERROR(DimensionError, Dimension);
TAC_DEFINE_ERROR(ParameterError, Parameter);
TAC_DEFINE_ERROR(FormatError, Format);
TAC_DEFINE_ERROR(DataError, Data);
TAC_DEFINE_ERROR(SelectionError, Selection);

#undef TAC_DEFINE_ERROR

class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, std::size_t step)
        : Error(ErrorKind::TrainingDiverged, what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

const char* error_kind_name(ErrorKind kind) noexcept;

// Process exit code for each error class:
//   2 Parameter, 3 Format, 4 Data, 5 Dimension, 6 Selection,
//   7 Normalization, 8 TrainingDiverged.
int exit_code(ErrorKind kind) noexcept;

/// Rethrows `e` as the same error class with "[stage] " prefixed to its message.
[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage);

}  // namespace tac
