#pragma once

#include <stdexcept>
#include <string>

namespace mst {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Context does not conform to a schema (arity, unknown category in strict mode).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Malformed or version-mismatched model/truth documents.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// Structurally invalid input files; the message carries the line number.
class IngestError : public Error {
public:
    IngestError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

} // namespace mst
