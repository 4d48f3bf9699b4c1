#pragma once

#include <stdexcept>
#include <string>

namespace huruf {

/// Base of every error thrown by the library; each subclass is one failure
/// category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class LabelError : public Error { using Error::Error; };
class PairingError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };
class StorageError : public Error { using Error::Error; };
class ConsistencyError : public Error { using Error::Error; };
class VersionError : public Error { using Error::Error; };

}  // namespace huruf
