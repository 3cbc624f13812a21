#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semfuzz {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class EmptyDescription : public Error {
public:
    EmptyDescription() : Error("feature description normalizes to empty") {}
};

// Persistence / file problems.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

// A corrupt record in a line-delimited file; carries the 1-based record index.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t record_index)
        : Error(what + " (record " + std::to_string(record_index) + ")"),
          record(record_index) {}
    std::size_t record;
};

class NetworkError : public Error {
public:
    explicit NetworkError(const std::string& what) : Error(what) {}
};

class NoFeaturesFound : public Error {
public:
    explicit NoFeaturesFound(const std::string& what) : Error(what) {}
};

class GroupTooSmall : public Error {
public:
    explicit GroupTooSmall(std::size_t size)
        : Error("feature group of size " + std::to_string(size) +
                " is too small to partition") {}
};

class ModelError : public Error {
public:
    explicit ModelError(const std::string& what) : Error(what) {}
};

class ReplayMiss : public Error {
public:
    explicit ReplayMiss(const std::string& request_hash)
        : Error("no archived response for request " + request_hash),
          hash(request_hash) {}
    std::string hash;
};

class NoCodeFound : public Error {
public:
    NoCodeFound() : Error("no code block or code-like suffix in model response") {}
};

class InstantiationFailed : public Error {
public:
    explicit InstantiationFailed(const std::string& what) : Error(what) {}
};

// Fatal harness problems (missing compiler, spawn failure). Distinct from
// program outcomes: these abort the campaign instead of being counted.
class HarnessError : public Error {
public:
    explicit HarnessError(const std::string& what) : Error(what) {}
};

class NotACrash : public Error {
public:
    NotACrash() : Error("outcome status is not Crash") {}
};

class CoverageUnavailable : public Error {
public:
    explicit CoverageUnavailable(const std::string& what) : Error(what) {}
};

class UnitKindMismatch : public Error {
public:
    UnitKindMismatch() : Error("coverage maps have different unit kinds") {}
};

class DimMismatch : public Error {
public:
    DimMismatch(std::size_t a, std::size_t b)
        : Error("embedding dims differ: " + std::to_string(a) + " vs " +
                std::to_string(b)) {}
};

class ZeroVector : public Error {
public:
    ZeroVector() : Error("cosine of an all-zero vector is undefined") {}
};

class TooFewFeatures : public Error {
public:
    explicit TooFewFeatures(std::size_t n)
        : Error("need at least 2 embeddings, got " + std::to_string(n)) {}
};

class EmptyPool : public Error {
public:
    EmptyPool() : Error("feature pool is empty") {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace semfuzz
