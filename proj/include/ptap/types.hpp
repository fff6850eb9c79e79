#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ptap {

/// Global and local row/column indices. 64-bit so global dimensions past 2^31 are representable.
using index_t = std::int64_t;
using real = double;
using rank_t = int;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad triplet or malformed CSR input while building a matrix.
class AssemblyError : public Error {
public:
    using Error::Error;
};

/// Layout problems: bad partition, nonconforming operands, unowned rows.
class PartitionError : public Error {
public:
    using Error::Error;
};

/// A numeric phase saw a structure different from the one its symbolic phase planned for.
class StructureDriftError : public Error {
public:
    using Error::Error;
};

/// Matrix Market / report parsing failure. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

/// Protocol violation inside the rank harness (unexpected message, bad destination).
class CommError : public Error {
public:
    using Error::Error;
};

/// Every live rank is blocked with nothing deliverable.
class DeadlockError : public CommError {
public:
    using CommError::CommError;
};

} // namespace ptap
