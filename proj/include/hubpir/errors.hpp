#pragma once

#include <stdexcept>
#include <string>

namespace hubpir {

// Base class for all library errors. Subclasses map to failure categories
// callers are expected to branch on (retry, abort, reject input).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed textual input (snapshot CSV and friends).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Structurally valid input violating a semantic constraint.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A size/headroom limit was exceeded (label width, perturbation range, ...).
class CapacityError : public Error {
public:
    using Error::Error;
};

// Two distinct paths with equal perturbed cost were found. Retriable:
// re-perturb with a fresh seed and recompute.
class UniquenessFault : public Error {
public:
    using Error::Error;
};

// Binary database bytes do not decode under the declared header.
class FormatError : public Error {
public:
    using Error::Error;
};

// Peer sent something outside the wire contract (bad frame, wrong vector
// length, unknown db version).
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Socket-level failure; safe to retry against a healthy peer.
class TransportError : public Error {
public:
    using Error::Error;
};

// The two replicas disagree (digest or version mismatch).
class ReplicaMismatchError : public Error {
public:
    using Error::Error;
};

class NoPathError : public Error {
public:
    using Error::Error;
};

} // namespace hubpir
