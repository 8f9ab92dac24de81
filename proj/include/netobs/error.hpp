#pragma once

#include <stdexcept>
#include <string>

namespace netobs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (addresses, flow lines, model/matrix files).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid caller-supplied parameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// A flow falls outside the window it was assigned to.
class WindowError : public Error {
public:
    WindowError(std::size_t index, const std::string& what)
        : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class MergeError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class DegenerateDistributionError : public Error {
public:
    using Error::Error;
};

class BinningMismatchError : public Error {
public:
    using Error::Error;
};

/// Bad command line or unknown output format.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace netobs
