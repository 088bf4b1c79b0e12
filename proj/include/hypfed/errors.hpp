#pragma once

#include <stdexcept>
#include <string>

namespace hypfed {

// Base class for everything this library throws on purpose. Callers that
// want to distinguish "bad input" from "protocol broke down" catch the
// concrete types below.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A numeric argument is outside the model's domain (point outside the disc,
// negative radius, non-positive curvature, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

// Structurally invalid input: empty point set, duplicate labels, a sequence
// that is not strictly increasing, malformed share lengths, ...
class InvalidInputError : public Error {
public:
    explicit InvalidInputError(const std::string& what) : Error(what) {}
};

// The SCMA aggregate could not be decoded back to a sparse histogram
// (locator degree too large, roots outside [1,B], power sums inconsistent).
class DecodeError : public Error {
public:
    explicit DecodeError(const std::string& what) : Error(what) {}
};

// A decoded per-bin sum has no decomposition into at most h sequence
// elements; usually means more than h labels collided in one bin.
class UnresolvableLabelError : public Error {
public:
    explicit UnresolvableLabelError(const std::string& what) : Error(what) {}
};

// Hard-margin fit requested on data that is not linearly separable in the
// tangent plane of the chosen reference point.
class NotSeparableError : public Error {
public:
    explicit NotSeparableError(const std::string& what) : Error(what) {}
};

// File / serialization problems; carries row or byte context in the message.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

// A federated round could not complete (decode failure, empty class at some
// client, infeasible grouping). The message names the offending stage.
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what) : Error(what) {}
};

// Invariant violations that indicate a bug in this library rather than bad
// caller input.
class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error(what) {}
};

} // namespace hypfed
