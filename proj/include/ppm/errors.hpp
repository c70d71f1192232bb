#pragma once

#include <stdexcept>
#include <string>

namespace ppm {

// Error families map 1:1 onto the CLI exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// eventlog
struct MissingColumn : DataError {
    explicit MissingColumn(const std::string& name)
        : DataError("missing column: " + name), column(name) {}
    std::string column;
};
struct UnparseableTimestamp : DataError {
    UnparseableTimestamp(std::size_t row, const std::string& text)
        : DataError("row " + std::to_string(row) + ": unparseable timestamp '" + text + "'"),
          row(row) {}
    std::size_t row;
};
struct EmptyLog : DataError {
    EmptyLog() : DataError("event log contains no usable events") {}
};
struct TooFewTraces : DataError {
    explicit TooFewTraces(std::size_t n)
        : DataError("chronological split needs at least 3 traces, got " + std::to_string(n)) {}
};

// nn-core
struct ShapeMismatch : InternalError {
    ShapeMismatch(const std::string& op, const std::string& got, const std::string& expected)
        : InternalError(op + ": shape mismatch, got " + got + ", expected " + expected) {}
};
struct IndivisibleHeads : ConfigError {
    IndivisibleHeads(int d_model, int heads)
        : ConfigError("d_model " + std::to_string(d_model) + " not divisible by " +
                      std::to_string(heads) + " heads") {}
};
struct IndexOutOfRange : InternalError {
    using InternalError::InternalError;
};

// models
struct ConfigViolation : ConfigError {
    using ConfigError::ConfigError;
};

// training
struct NonFiniteLoss : TrainingError {
    NonFiniteLoss(int epoch, int batch)
        : TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(batch)),
          epoch(epoch), batch(batch) {}
    int epoch;
    int batch;
};

// evaluation
struct LengthMismatch : InternalError {
    using InternalError::InternalError;
};
struct EmptyCandidateSet : DataError {
    EmptyCandidateSet() : DataError("candidate set is empty") {}
};
struct NonPositiveLoss : DataError {
    explicit NonPositiveLoss(double v)
        : DataError("validation loss must be > 0 for composite scoring, got " + std::to_string(v)) {}
};
struct AllCandidatesFailed : DataError {
    AllCandidatesFailed() : DataError("no successful candidate to select from") {}
};
struct EmptyTestSet : DataError {
    EmptyTestSet() : DataError("evaluation requires at least one sample") {}
};

}  // namespace ppm
