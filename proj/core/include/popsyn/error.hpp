#pragma once

#include <stdexcept>
#include <string>

namespace popsyn {

/// Base class for every domain error raised by the library. The CLI maps
/// these to exit code 1.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Unknown labels, malformed headers, inconsistent schemas.
class SchemaError : public Error {
  public:
    using Error::Error;
};

class RangeError : public Error {
  public:
    using Error::Error;
};

class LevelError : public Error {
  public:
    using Error::Error;
};

class ArgumentError : public Error {
  public:
    using Error::Error;
};

class EmptyTableError : public Error {
  public:
    using Error::Error;
};

class ReferentialIntegrityError : public Error {
  public:
    using Error::Error;
};

/// A positive target that no data can support (IPF, replication, cycle repair).
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

class CycleError : public Error {
  public:
    using Error::Error;
};

class StructureError : public Error {
  public:
    using Error::Error;
};

/// Parent configuration space exceeds the configured cap.
class ComplexityError : public Error {
  public:
    using Error::Error;
};

class DivergenceError : public Error {
  public:
    using Error::Error;
};

class UndefinedVarianceError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// A pipeline stage failed; the message names the stage and digests its inputs.
class StageError : public Error {
  public:
    using Error::Error;
};

} // namespace popsyn
