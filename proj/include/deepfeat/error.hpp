#pragma once

#include <stdexcept>
#include <string>

namespace deepfeat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter is outside its documented range.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Input data is malformed: wrong shape, non-finite values, bad codes.
class InvalidData : public Error {
public:
    using Error::Error;
};

/// Training data cannot produce a meaningful model (e.g. a single class).
class DegenerateModel : public Error {
public:
    using Error::Error;
};

/// File could not be read, parsed or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace deepfeat
