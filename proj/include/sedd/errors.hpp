// Copyright (c) 2025 SEDD Profiler Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sedd {

// Base class for all toolkit errors. The CLI maps ValidationError /
// ParseError / ConfigError to exit code 1 and everything else to 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input file (manifest line, config document).
class ParseError : public Error {
public:
    using Error::Error;
};

// Image file that exists but cannot be decoded; carries the offending path.
class DecodeError : public Error {
public:
    DecodeError(const std::string& msg, std::string path)
        : Error(msg + ": " + path), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Weight/checkpoint loading failures.
class InitError : public Error {
public:
    using Error::Error;
};

}  // namespace sedd
