#pragma once

#include <stdexcept>
#include <string>

namespace docent {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values (RagConfig, split parameters, weights).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Corpus loading, sidecar parsing, or cleaning produced an unusable document.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Vector index contract violations (dimension, norm, finiteness).
class IndexError : public Error {
public:
    using Error::Error;
};

/// The on-disk index could not be decoded.
class CorruptIndexError : public IndexError {
public:
    using IndexError::IndexError;
};

/// Lookup of an entity that does not exist (session, document, run, label).
class NotFoundError : public Error {
public:
    using Error::Error;
};

}  // namespace docent
