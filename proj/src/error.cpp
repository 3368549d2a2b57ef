#include "tac/error.hpp"

namespace tac {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Normalization: return "NormalizationError";
        case ErrorKind::Dimension: return "DimensionError";
        case ErrorKind::Parameter: return "ParameterError";
        case ErrorKind::Format: return "FormatError";
        case ErrorKind::Data: return "DataError";
        case ErrorKind::Selection: return "SelectionError";
        case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    }
    return "Error";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Parameter: return 2;
        case ErrorKind::Format: return 3;
        case ErrorKind::Data: return 4;
        case ErrorKind::Dimension: return 5;
        case ErrorKind::Selection: return 6;
        case ErrorKind::Normalization: return 7;
        case ErrorKind::TrainingDiverged: return 8;
    }
    return 1;
}

void rethrow_with_stage(const Error& e, const std::string& stage) {
    const std::string msg = "[" + stage + "] " + e.what();
    switch (e.kind()) {
        case ErrorKind::Normalization: throw NormalizationError(msg);
        case ErrorKind::Dimension: throw DimensionError(msg);
        case ErrorKind::Parameter: throw ParameterError(msg);
        case ErrorKind::Format: throw FormatError(msg);
        case ErrorKind::Data: throw DataError(msg);
        case ErrorKind::Selection: throw SelectionError(msg);
        case ErrorKind::TrainingDiverged:
            throw TrainingDiverged(msg, static_cast<const TrainingDiverged&>(e).step());
    }
    throw Error(e.kind(), msg);
}

}  // namespace tac
