#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hbp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physical quantity or argument outside its mathematical domain
/// (nonpositive frequency, negative capacitance, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class SingularElementError : public Error {
public:
    using Error::Error;
};

/// The MNA system could not be factored. `node()` names the unknown whose
/// pivot vanished (a node id, or -1 when the failing unknown is a source
/// current).
class SingularNetworkError : public Error {
public:
    SingularNetworkError(const std::string& what, int node)
        : Error(what), node_(node) {}
    [[nodiscard]] int node() const noexcept { return node_; }

private:
    int node_;
};

class DegenerateLoadError : public Error {
public:
    using Error::Error;
};

/// An operation was called on a model it does not apply to.
class MisuseError : public Error {
public:
    using Error::Error;
};

class NonResonantError : public Error {
public:
    using Error::Error;
};

class InconsistentMeasurementError : public Error {
public:
    using Error::Error;
};

class IdentifiabilityError : public Error {
public:
    IdentifiabilityError(const std::string& what, std::string first, std::string second)
        : Error(what), first_(std::move(first)), second_(std::move(second)) {}
    [[nodiscard]] const std::string& first() const noexcept { return first_; }
    [[nodiscard]] const std::string& second() const noexcept { return second_; }

private:
    std::string first_;
    std::string second_;
};

class AmbiguousPeakError : public Error {
public:
    using Error::Error;
};

class WindowTruncationError : public Error {
public:
    using Error::Error;
};

class UnboundedObjectiveError : public Error {
public:
    using Error::Error;
};

class UncoveredBandError : public Error {
public:
    using Error::Error;
};

class IncompleteTableError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. Carries the 1-based line number (0 when unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Configuration rejected before any model is evaluated.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace hbp
