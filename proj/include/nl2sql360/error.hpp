#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nl2sql360 {

/// Base for every domain error raised by the library. The CLI maps these to
/// exit code 1.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
  public:
    ParseError(std::size_t offset, std::string expected, const std::string& detail)
        : Error("parse error at offset " + std::to_string(offset) + ": expected " + expected +
                (detail.empty() ? std::string{} : " (" + detail + ")")),
          offset_(offset),
          expected_(std::move(expected)) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& expected() const noexcept { return expected_; }

  private:
    std::size_t offset_;
    std::string expected_;
};

class MissingFile : public Error {
  public:
    explicit MissingFile(const std::string& path) : Error("missing file: " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

  private:
    std::string path_;
};

class SchemaInconsistency : public Error {
  public:
    using Error::Error;
};

class RejectsExceedThreshold : public Error {
  public:
    using Error::Error;
};

class DuplicateDbId : public Error {
  public:
    using Error::Error;
};

class FormatError : public Error {
  public:
    using Error::Error;
};

class UnknownDomain : public Error {
  public:
    using Error::Error;
};

class DatabaseMissing : public Error {
  public:
    using Error::Error;
};

class AdapterProtocolError : public Error {
  public:
    using Error::Error;
};

class EmptySubset : public Error {
  public:
    EmptySubset() : Error("metric requested over an empty subset") {}
};

class MissingTiming : public Error {
  public:
    using Error::Error;
};

class MissingOutcome : public Error {
  public:
    using Error::Error;
};

class UnknownModelLabel : public Error {
  public:
    using Error::Error;
};

class MixedBenchmark : public Error {
  public:
    using Error::Error;
};

class ConfigMismatch : public Error {
  public:
    using Error::Error;
};

class NoValidGenome : public Error {
  public:
    using Error::Error;
};

class InvalidSearchSpace : public Error {
  public:
    using Error::Error;
};

class FitnessError : public Error {
  public:
    FitnessError(std::string genome_key, const std::string& detail)
        : Error("fitness evaluation failed for genome " + genome_key + ": " + detail),
          genome_key_(std::move(genome_key)) {}
    const std::string& genome_key() const noexcept { return genome_key_; }

  private:
    std::string genome_key_;
};

}  // namespace nl2sql360
