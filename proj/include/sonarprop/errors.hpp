#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sonarprop {

// Precondition violations: bad shapes, out-of-range parameters, degenerate boxes.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SamplingExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t record)
        : std::runtime_error(what + " (record " + std::to_string(record) + ")"), record_(record) {}

    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when training produces a non-finite gradient or loss.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sonarprop
