// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lumina {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A lattice move left the ordered value list of a parameter.
class OutOfRange : public Error {
public:
    using Error::Error;
};

/// Grid search has proposed every point of its sweep.
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

/// Every candidate directive is blocked by trajectory memory.
class Exhausted : public Error {
public:
    using Error::Error;
};

class InvalidDirective : public Error {
public:
    using Error::Error;
};

class LlmMapInvalid : public Error {
public:
    using Error::Error;
};

/// Structured LLM output could not be turned into a directive.
class ParseError : public Error {
public:
    ParseError(std::size_t position, std::string reason)
        : Error("parse error at " + std::to_string(position) + ": " + reason),
          position_(position),
          reason_(std::move(reason)) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t position_;
    std::string reason_;
};

/// A benchmark draw produced no usable question; callers resample.
class DegenerateDraw : public Error {
public:
    using Error::Error;
};

class MissingRun : public Error {
public:
    using Error::Error;
};

}  // namespace lumina
