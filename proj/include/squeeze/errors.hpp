#pragma once

#include <stdexcept>
#include <string>

namespace squeeze {

// Base for all library errors so callers can catch one type at the batch level.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& path, int line, const std::string& msg)
        : Error(path + ":" + std::to_string(line) + ": " + msg), path_(path), line_(line) {}
    const std::string& path() const { return path_; }
    int line() const { return line_; }

private:
    std::string path_;
    int line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class NoContactError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    GenerationError(const std::string& msg, int sample_index)
        : Error(msg), sample_index_(sample_index) {}
    int sample_index() const { return sample_index_; }

private:
    int sample_index_;
};

class UnsupportedModeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class PhaseError : public Error {
public:
    using Error::Error;
};

class AnomalyError : public Error {
public:
    using Error::Error;
};

}  // namespace squeeze
