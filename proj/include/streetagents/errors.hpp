#pragma once

#include <stdexcept>
#include <string>

namespace streetagents {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: bad JSON, unparseable backend reply, bad rating text.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

// Structurally valid input that violates an invariant (missing reverse
// edge, duplicate direction, out-of-range fraction, clock regression).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// LLM backend failure: exhausted retries, exhausted replay transcript,
// persistent protocol violations.
class BackendError : public Error {
public:
    explicit BackendError(const std::string& what) : Error(what) {}
};

// Scene feature provider failure: unknown scene reference, HTTP error.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what) : Error(what) {}
};

} // namespace streetagents
