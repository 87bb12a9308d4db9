#pragma once

#include <stdexcept>
#include <string>

namespace skcache {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value breaks a documented invariant (bad config,
/// out-of-range index, malformed prior). The CLI maps this to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Query/key/cache shapes disagree.
class GeometryError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Failure while decoding one of the binary formats.
class ParseError : public Error {
public:
    enum class Kind {
        BadMagic,
        BadVersion,
        Truncated,
        NonFinite,
        InvalidField,
    };

    ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace skcache
