#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iqakit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingCorpusFile : public Error {
 public:
  explicit MissingCorpusFile(const std::string& path)
      : Error("missing corpus file: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// A record that violates a type invariant. `line` is 1-based; 0 means the
/// record did not come from a file.
class InvalidRecord : public Error {
 public:
  InvalidRecord(std::string file, std::size_t line, std::string reason)
      : Error(file + ":" + std::to_string(line) + ": " + reason),
        file_(std::move(file)),
        line_(line),
        reason_(std::move(reason)) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string reason_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ImageDecodeError : public Error {
 public:
  using Error::Error;
};

class InvalidDimensions : public Error {
 public:
  using Error::Error;
};

class AugmentationFailed : public Error {
 public:
  explicit AugmentationFailed(const std::string& record_id)
      : Error("augmentation failed for record " + record_id), record_id_(record_id) {}
  const std::string& record_id() const { return record_id_; }

 private:
  std::string record_id_;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class UnknownLabel : public Error {
 public:
  using Error::Error;
};

}  // namespace iqakit
