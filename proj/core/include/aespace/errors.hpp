#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aespace {

// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A record violates the ImageRecord invariants; field() names the offender.
class InvalidRecordError : public Error {
public:
    InvalidRecordError(std::string field, const std::string& what)
        : Error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SamplerStarvationError : public Error {
public:
    SamplerStarvationError(const std::string& what, double acceptance_rate)
        : Error(what), acceptance_rate_(acceptance_rate) {}
    double acceptance_rate() const noexcept { return acceptance_rate_; }

private:
    double acceptance_rate_;
};

class ModelFormatError : public Error {
public:
    using Error::Error;
};

class ModelVersionError : public ModelFormatError {
public:
    ModelVersionError(int found, int supported)
        : ModelFormatError("model file version " + std::to_string(found) +
                           " is newer than supported version " + std::to_string(supported)),
          found_(found) {}
    int found() const noexcept { return found_; }

private:
    int found_;
};

class DivergenceError : public Error {
public:
    DivergenceError(long step, double lr)
        : Error("training diverged at step " + std::to_string(step) +
                " (lr=" + std::to_string(lr) + "): non-finite loss or gradient"),
          step_(step), lr_(lr) {}
    long step() const noexcept { return step_; }
    double lr() const noexcept { return lr_; }

private:
    long step_;
    double lr_;
};

} // namespace aespace
