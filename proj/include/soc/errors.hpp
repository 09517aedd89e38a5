#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace soc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidCandidateSet : public Error {
public:
    using Error::Error;
};

/// Selected probability mass is zero; the cluster pick always contains the
/// argmax, so inside the pipeline this means a bug upstream.
class ZeroMass : public Error {
public:
    using Error::Error;
};

class InvalidProbVector : public Error {
public:
    using Error::Error;
};

class InvalidClass : public Error {
public:
    using Error::Error;
};

class InvalidK : public Error {
public:
    using Error::Error;
};

class InvalidPolicy : public Error {
public:
    using Error::Error;
};

class InvalidConfidence : public Error {
public:
    using Error::Error;
};

class EmptyBatch : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class DivergedAtIteration : public Error {
public:
    explicit DivergedAtIteration(std::size_t iteration)
        : Error("training diverged (non-finite loss) at iteration " + std::to_string(iteration)),
          iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace soc
