#pragma once

#include <stdexcept>
#include <string>

namespace lffd {

// Base class for every error this library throws. The CLI maps subclasses
// to exit codes: ConfigError -> 1, DatasetError -> 2, DecodeError /
// IoError / CheckpointError -> 3, DivergedError -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

class LabelError : public Error {
public:
    using Error::Error;
};

// Batch-norm train mode with fewer than 2 samples per channel.
class DegenerateBatchError : public Error {
public:
    using Error::Error;
};

// Dataset layout problems and infeasible splits.
class DatasetError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class DivergedError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace lffd
