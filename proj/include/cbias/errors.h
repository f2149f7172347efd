// Error types shared by all cbias modules. Every failure the library reports
// is one of these; callers that only care about "it failed" catch Error.

#ifndef CBIAS_ERRORS_H_
#define CBIAS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace cbias {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Input file does not follow its declared format. Carries the 1-based line
// number when one applies (0 otherwise).
class FormatError : public Error {
public:
    FormatError(const std::string &what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

// A target set has no usable word in the model vocabulary.
class TargetSetError : public Error {
public:
    using Error::Error;
};

// Word not in the model vocabulary.
class LookupError : public Error {
public:
    using Error::Error;
};

// Mathematical domain violation (e.g. cosine of a zero vector).
class DomainError : public Error {
public:
    using Error::Error;
};

// Operation not defined for the given partition structure.
class StructureError : public Error {
public:
    using Error::Error;
};

// No cluster could be tagged by the semantic lexicon.
class LabelingError : public Error {
public:
    using Error::Error;
};

}  // namespace cbias

#endif  // CBIAS_ERRORS_H_
